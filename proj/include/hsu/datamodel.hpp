#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsu/errors.hpp"

namespace hsu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default tolerance for the sum-to-one constraint after projection.
inline constexpr double kSimplexTolerance = 1e-9;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::string dims(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail

/// Observation matrix Y (bands x pixels). Pixel k is column k; pixels are
/// numbered row-major from the top-left of a width x height grid.
///
/// Entries must be finite. Negative values are accepted: additive sensor
/// noise on dark bands legitimately produces them.
class HyperspectralImage {
 public:
  HyperspectralImage(Matrix data, std::size_t width, std::size_t height,
                     std::vector<double> wavelengths = {})
      : data_(std::move(data)), width_(width), height_(height), wavelengths_(std::move(wavelengths)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw InvalidArgument("image needs at least one band and one pixel, got " +
                            detail::dims(data_.rows(), data_.cols()));
    }
    if (width_ * height_ != static_cast<std::size_t>(data_.cols())) {
      throw InvalidArgument("width*height = " + std::to_string(width_ * height_) +
                            " does not match pixel count " + std::to_string(data_.cols()));
    }
    if (!detail::all_finite(data_)) throw InvalidArgument("image contains non-finite values");
    if (!wavelengths_.empty() && wavelengths_.size() != static_cast<std::size_t>(data_.rows())) {
      throw InvalidArgument("wavelength count does not match band count");
    }
  }

  const Matrix& data() const noexcept { return data_; }
  std::size_t bands() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }

  auto pixel(std::size_t k) const { return data_.col(static_cast<Eigen::Index>(k)); }

 private:
  Matrix data_;
  std::size_t width_;
  std::size_t height_;
  std::vector<double> wavelengths_;
};

/// Endmember matrix A (bands x endmembers). Columns are nonnegative spectra.
class SignatureMatrix {
 public:
  explicit SignatureMatrix(Matrix data, std::vector<std::string> names = {},
                           std::vector<double> wavelengths = {})
      : data_(std::move(data)), names_(std::move(names)), wavelengths_(std::move(wavelengths)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw InvalidArgument("signature matrix needs at least one band and one endmember, got " +
                            detail::dims(data_.rows(), data_.cols()));
    }
    if (!detail::all_finite(data_)) throw InvalidArgument("signature matrix has non-finite entries");
    if ((data_.array() < 0.0).any()) throw InvalidArgument("signature matrix has negative entries");
    if (!names_.empty() && names_.size() != static_cast<std::size_t>(data_.cols())) {
      throw InvalidArgument("endmember name count does not match column count");
    }
    if (!wavelengths_.empty() && wavelengths_.size() != static_cast<std::size_t>(data_.rows())) {
      throw InvalidArgument("wavelength count does not match band count");
    }
  }

  const Matrix& data() const noexcept { return data_; }
  std::size_t bands() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t endmembers() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }

 private:
  Matrix data_;
  std::vector<std::string> names_;
  std::vector<double> wavelengths_;
};

/// True iff every column is nonnegative (exactly) and sums to one within `tol`.
inline bool validate_abundances(const Matrix& s, double tol = kSimplexTolerance) {
  if (!s.allFinite()) return false;
  for (Eigen::Index k = 0; k < s.cols(); ++k) {
    auto col = s.col(k);
    if ((col.array() < 0.0).any()) return false;
    if (std::abs(col.sum() - 1.0) > tol) return false;
  }
  return true;
}

/// Abundance matrix S (endmembers x pixels); every column lies on the unit simplex.
class AbundanceMatrix {
 public:
  explicit AbundanceMatrix(Matrix data, double tol = kSimplexTolerance) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw InvalidArgument("abundance matrix needs at least one endmember and one pixel");
    }
    if (!validate_abundances(data_, tol)) {
      throw InvalidArgument("abundance matrix violates nonnegativity or sum-to-one");
    }
  }

  const Matrix& data() const noexcept { return data_; }
  std::size_t endmembers() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(data_.cols()); }

 private:
  Matrix data_;
};

inline bool validate_abundances(const AbundanceMatrix& s, double tol = kSimplexTolerance) {
  return validate_abundances(s.data(), tol);
}

/// 8-connected pixel graph. `neighbors(k)` excludes k itself. Similarity
/// weights are attached later (see neighbor_weights) and are row-normalized.
class NeighborhoodSystem {
 public:
  NeighborhoodSystem(std::size_t width, std::size_t height,
                     std::vector<std::vector<std::size_t>> neighbors,
                     std::vector<std::vector<double>> weights = {})
      : width_(width), height_(height), neighbors_(std::move(neighbors)), weights_(std::move(weights)) {
    if (!weights_.empty()) {
      if (weights_.size() != neighbors_.size()) throw InvalidArgument("weight table size mismatch");
      for (std::size_t k = 0; k < neighbors_.size(); ++k) {
        if (weights_[k].size() != neighbors_[k].size()) {
          throw InvalidArgument("weight row " + std::to_string(k) + " size mismatch");
        }
      }
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t nodes() const noexcept { return neighbors_.size(); }
  bool has_weights() const noexcept { return !weights_.empty(); }

  const std::vector<std::size_t>& neighbors(std::size_t k) const { return neighbors_.at(k); }
  const std::vector<double>& weights(std::size_t k) const { return weights_.at(k); }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& n : neighbors_) total += n.size();
    return total;
  }

  NeighborhoodSystem with_weights(std::vector<std::vector<double>> weights) const {
    return NeighborhoodSystem(width_, height_, neighbors_, std::move(weights));
  }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::vector<double>> weights_;
};

/// Builds the unweighted 8-connected adjacency of a row-major width x height grid.
inline NeighborhoodSystem build_neighborhood(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw InvalidArgument("grid dimensions must be positive");
  std::vector<std::vector<std::size_t>> adj(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      auto& list = adj[r * width + c];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(height) ||
              cc >= static_cast<std::ptrdiff_t>(width)) {
            continue;
          }
          list.push_back(static_cast<std::size_t>(rr) * width + static_cast<std::size_t>(cc));
        }
      }
    }
  }
  return NeighborhoodSystem(width, height, std::move(adj));
}

/// Fuzzy partition of the pixels. Labels are 0-based cluster ids.
struct ClusterAssignment {
  std::vector<std::size_t> labels;
  Matrix memberships;  // clusters x pixels, columns sum to one
  Matrix centers;      // bands x clusters
  std::vector<double> objective_history;
  std::size_t iterations = 0;

  std::size_t clusters() const noexcept { return static_cast<std::size_t>(memberships.rows()); }
};

/// The solver family. `clustered_sparse_distributed` is the full method
/// (neighborhood cooperation restricted to the pixel's cluster plus L_q sparsity).
enum class AlgorithmVariant {
  nmf,
  lq_nmf,
  distributed,
  sparse_distributed,
  clustered_sparse_distributed,
  fcls,
};

inline std::string_view to_string(AlgorithmVariant v) {
  switch (v) {
    case AlgorithmVariant::nmf: return "nmf";
    case AlgorithmVariant::lq_nmf: return "lq_nmf";
    case AlgorithmVariant::distributed: return "distributed";
    case AlgorithmVariant::sparse_distributed: return "sparse_distributed";
    case AlgorithmVariant::clustered_sparse_distributed: return "proposed";
    case AlgorithmVariant::fcls: return "fcls";
  }
  return "unknown";
}

inline AlgorithmVariant parse_variant(std::string_view name) {
  if (name == "nmf") return AlgorithmVariant::nmf;
  if (name == "lq_nmf") return AlgorithmVariant::lq_nmf;
  if (name == "distributed") return AlgorithmVariant::distributed;
  if (name == "sparse_distributed") return AlgorithmVariant::sparse_distributed;
  if (name == "proposed" || name == "clustered_sparse_distributed") {
    return AlgorithmVariant::clustered_sparse_distributed;
  }
  if (name == "fcls" || name == "vca_fcls") return AlgorithmVariant::fcls;
  throw InvalidArgument("unknown algorithm variant '" + std::string(name) + "'");
}

inline bool uses_clusters(AlgorithmVariant v) {
  return v == AlgorithmVariant::clustered_sparse_distributed;
}

struct UnmixingConfig {
  double mu = 0.02;
  double eta = 0.1;
  double q = 1.0;
  std::optional<double> lambda;  // estimated from the data when unset
  std::size_t max_iter = 1000;
  double eps = 1e-8;
  std::size_t clusters = 6;
  std::uint64_t seed = 1;
  AlgorithmVariant variant = AlgorithmVariant::clustered_sparse_distributed;
  double sparsity_guard = 1e-12;
  double signature_guard = 1e-12;

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("mu must be > 0");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be >= 0");
    if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in (0, 1]");
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
      throw InvalidArgument("lambda must be >= 0");
    }
    if (max_iter == 0) throw InvalidArgument("max_iter must be positive");
    if (!(eps > 0.0)) throw InvalidArgument("eps must be > 0");
    if (clusters == 0) throw InvalidArgument("cluster count must be positive");
    if (!(sparsity_guard > 0.0)) throw InvalidArgument("sparsity guard must be > 0");
  }
};

}  // namespace hsu
