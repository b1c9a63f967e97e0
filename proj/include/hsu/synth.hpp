#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "hsu/datamodel.hpp"
#include "hsu/io.hpp"

#ifndef HSU_DEFAULT_DATA_DIR
#define HSU_DEFAULT_DATA_DIR "data"
#endif

namespace hsu {

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct SyntheticScene {
  HyperspectralImage Y;
  SignatureMatrix A_true;
  AbundanceMatrix S_true;
  double snr_db;
  Matrix noise;
  std::vector<std::size_t> library_columns;
};

struct SynthOptions {
  std::size_t endmembers = 6;
  std::size_t width = 40;
  std::size_t height = 40;
  std::size_t patch = 8;
  std::size_t filter = 7;
  double snr_db = kNoiseless;
  double purity_cap = 0.8;
  std::uint64_t seed = 1;
  // When set, library columns are drawn from this seed instead of `seed`,
  // so scenes generated with different seeds share their signatures.
  std::optional<std::uint64_t> signature_seed;
};

/// Directory holding bundled data files; HSU_DATA_DIR overrides the build-time default.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("HSU_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return HSU_DEFAULT_DATA_DIR;
}

/// The bundled sample library (224 bands, 0.4-2.5 um).
inline SignatureMatrix bundled_library() { return io::read_spectral_library(data_dir() / "sample_library.csv"); }

namespace synth_detail {

// Mean filter with replicated-edge padding on a row-major height x width plane.
inline std::vector<double> box_filter(const std::vector<double>& plane, std::size_t width,
                                      std::size_t height, std::size_t size) {
  const auto half = static_cast<std::ptrdiff_t>(size / 2);
  const auto w = static_cast<std::ptrdiff_t>(width);
  const auto h = static_cast<std::ptrdiff_t>(height);
  std::vector<double> out(plane.size());
  const double norm = 1.0 / static_cast<double>(size * size);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t dr = -half; dr <= half; ++dr) {
        const auto rr = std::clamp(r + dr, std::ptrdiff_t{0}, h - 1);
        for (std::ptrdiff_t dc = -half; dc <= half; ++dc) {
          const auto cc = std::clamp(c + dc, std::ptrdiff_t{0}, w - 1);
          acc += plane[static_cast<std::size_t>(rr * w + cc)];
        }
      }
      out[static_cast<std::size_t>(r * w + c)] = acc * norm;
    }
  }
  return out;
}

// Blends a column toward the uniform mixture just enough to bring its
// largest entry down to `cap`.
inline void cap_purity(Eigen::Ref<Vector> s, double cap) {
  const double uniform = 1.0 / static_cast<double>(s.size());
  const double top = s.maxCoeff();
  if (top <= cap) return;
  double t = (top - cap) / (top - uniform);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector blended = (1.0 - t) * s.array() + t * uniform;
    if (blended.maxCoeff() <= cap) {
      s = blended;
      return;
    }
    t = std::min(1.0, t * (1.0 + 1e-12) + 1e-16);
  }
  s.setConstant(uniform);
}

}  // namespace synth_detail

/// Synthetic scene under the linear mixing model: random library signatures,
/// blocky abundance maps smoothed by a box filter with no pixel purer than
/// `purity_cap`, plus white Gaussian noise scaled to exactly `snr_db`.
inline SyntheticScene generate_synthetic(const SignatureMatrix& library, const SynthOptions& opt) {
  const std::size_t c = opt.endmembers;
  if (c == 0) throw InvalidArgument("endmember count must be positive");
  if (library.endmembers() < c) {
    throw InvalidArgument("library has " + std::to_string(library.endmembers()) +
                          " signatures, need " + std::to_string(c));
  }
  if (opt.width == 0 || opt.height == 0) throw InvalidArgument("scene dimensions must be positive");
  if (opt.patch == 0) throw InvalidArgument("patch size must be positive");
  if (opt.filter == 0 || opt.filter % 2 == 0) throw InvalidArgument("filter size must be odd");
  if (std::isnan(opt.snr_db) || opt.snr_db == -kNoiseless) {
    throw InvalidArgument("snr_db must be finite or +infinity");
  }
  if (!(opt.purity_cap > 0.0 && opt.purity_cap <= 1.0)) {
    throw InvalidArgument("purity cap must lie in (0, 1]");
  }
  if (opt.purity_cap < 1.0 && opt.purity_cap <= 1.0 / static_cast<double>(c)) {
    throw InvalidArgument("purity cap must exceed 1/endmembers");
  }

  std::mt19937_64 rng(opt.seed);

  // (i) distinct library columns.
  std::vector<std::size_t> columns(library.endmembers());
  std::iota(columns.begin(), columns.end(), std::size_t{0});
  {
    std::mt19937_64 sig_rng(opt.signature_seed.value_or(opt.seed));
    std::mt19937_64& pick_rng = opt.signature_seed ? sig_rng : rng;
    for (std::size_t i = 0; i < c; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, columns.size() - 1);
      std::swap(columns[i], columns[pick(pick_rng)]);
    }
    columns.resize(c);
  }
  Matrix a(static_cast<Eigen::Index>(library.bands()), static_cast<Eigen::Index>(c));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < c; ++j) {
    a.col(static_cast<Eigen::Index>(j)) = library.data().col(static_cast<Eigen::Index>(columns[j]));
    if (!library.names().empty()) names.push_back(library.names()[columns[j]]);
  }

  // (ii) block layout. Blocks cycle through the endmembers in a shuffled
  // order so every endmember is present whenever there are >= c blocks.
  const std::size_t bw = (opt.width + opt.patch - 1) / opt.patch;
  const std::size_t bh = (opt.height + opt.patch - 1) / opt.patch;
  std::vector<std::size_t> block_label(bw * bh);
  for (std::size_t b = 0; b < block_label.size(); ++b) block_label[b] = b % c;
  std::shuffle(block_label.begin(), block_label.end(), rng);

  const std::size_t n = opt.width * opt.height;
  std::vector<std::vector<double>> planes(c, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < opt.height; ++r) {
    for (std::size_t col = 0; col < opt.width; ++col) {
      const std::size_t label = block_label[(r / opt.patch) * bw + col / opt.patch];
      planes[label][r * opt.width + col] = 1.0;
    }
  }

  // (iii) low-pass filter and renormalize onto the simplex.
  Matrix s(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < c; ++j) {
    const auto smooth = synth_detail::box_filter(planes[j], opt.width, opt.height, opt.filter);
    for (std::size_t k = 0; k < n; ++k) s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = smooth[k];
  }
  for (Eigen::Index k = 0; k < s.cols(); ++k) {
    s.col(k) /= s.col(k).sum();
    // (iv) no pure pixels.
    if (opt.purity_cap < 1.0) synth_detail::cap_purity(s.col(k), opt.purity_cap);
  }

  // (v) noise at the requested SNR.
  const Matrix clean = a * s;
  Matrix noise = Matrix::Zero(clean.rows(), clean.cols());
  if (std::isfinite(opt.snr_db)) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index k = 0; k < noise.cols(); ++k) {
      for (Eigen::Index b = 0; b < noise.rows(); ++b) noise(b, k) = gauss(rng);
    }
    const double target = clean.squaredNorm() / std::pow(10.0, opt.snr_db / 10.0);
    noise *= std::sqrt(target / noise.squaredNorm());
  }
  Matrix y = clean + noise;

  return SyntheticScene{
      HyperspectralImage(std::move(y), opt.width, opt.height, library.wavelengths()),
      SignatureMatrix(std::move(a), std::move(names), library.wavelengths()),
      AbundanceMatrix(std::move(s)),
      opt.snr_db,
      std::move(noise),
      std::move(columns)};
}

/// Realized SNR in dB of an observation against its noise-free part.
inline double realized_snr_db(const Matrix& clean, const Matrix& noise) {
  const double energy = noise.squaredNorm();
  if (energy == 0.0) return kNoiseless;
  return 10.0 * std::log10(clean.squaredNorm() / energy);
}

}  // namespace hsu
