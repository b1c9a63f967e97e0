#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "hsu/datamodel.hpp"

namespace hsu {

/// Vertex Component Analysis. Returns the indices of the `endmembers` pixels
/// chosen as simplex vertices, in selection order.
///
/// The mean-removed data is projected onto its leading endmembers-1 principal
/// axes, and a constant coordinate equal to the largest projected norm is
/// appended so the cloud sits on an affine slice of a cone. Each step then
/// draws a Gaussian direction, removes its component along the vertices found
/// so far, and takes the pixel with the largest absolute projection.
inline std::vector<std::size_t> vca_indices(const HyperspectralImage& image, std::size_t endmembers,
                                            std::uint64_t seed) {
  const auto& y = image.data();
  const std::size_t limit = std::min(image.bands(), image.pixels());
  if (endmembers == 0 || endmembers > limit) {
    throw InvalidArgument("endmember count " + std::to_string(endmembers) +
                          " must lie in [1, min(bands, pixels) = " + std::to_string(limit) + "]");
  }
  if (y.isZero(0.0)) throw DegenerateData("VCA on an all-zero image");

  const Vector mean = y.rowwise().mean();

  if (endmembers == 1) {
    const double norm = mean.norm();
    if (norm == 0.0) throw DegenerateData("VCA: zero mean spectrum");
    Eigen::Index best = 0;
    (y.transpose() * mean).cwiseAbs().maxCoeff(&best);
    return {static_cast<std::size_t>(best)};
  }

  const Matrix centered = y.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(y.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateData("VCA: eigendecomposition failed");

  const auto dims = static_cast<Eigen::Index>(endmembers - 1);
  const Eigen::Index bands = cov.rows();
  // Eigenvalues come back ascending; take the top `dims` in descending order.
  Matrix axes(bands, dims);
  const double top = eig.eigenvalues()[bands - 1];
  for (Eigen::Index j = 0; j < dims; ++j) {
    const double value = eig.eigenvalues()[bands - 1 - j];
    if (!(value > 1e-12 * std::max(top, 1e-300))) {
      throw DegenerateData("VCA: data spans fewer than " + std::to_string(endmembers) +
                           " affinely independent directions");
    }
    Vector axis = eig.eigenvectors().col(bands - 1 - j);
    Eigen::Index pivot = 0;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis[pivot] < 0.0) axis = -axis;  // fix the sign so the result is reproducible
    axes.col(j) = axis;
  }

  const Matrix projected = axes.transpose() * centered;
  const double lift = projected.colwise().norm().maxCoeff();
  Matrix cone(dims + 1, y.cols());
  cone.topRows(dims) = projected;
  cone.row(dims).setConstant(lift > 0.0 ? lift : 1.0);

  const auto p = dims + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix basis = Matrix::Zero(p, 1);
  basis(p - 1, 0) = 1.0;
  std::vector<std::size_t> chosen;
  chosen.reserve(endmembers);
  for (std::size_t i = 0; i < endmembers; ++i) {
    Vector w(p);
    for (Eigen::Index j = 0; j < p; ++j) w[j] = gauss(rng);
    const Vector f = w - basis * basis.completeOrthogonalDecomposition().solve(w);
    const double fn = f.norm();
    if (!(fn > 1e-12 * w.norm())) throw DegenerateData("VCA: search direction collapsed");
    Eigen::Index best = 0;
    (f.transpose() / fn * cone).cwiseAbs().maxCoeff(&best);
    chosen.push_back(static_cast<std::size_t>(best));

    basis.resize(p, static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t c = 0; c < chosen.size(); ++c) {
      basis.col(static_cast<Eigen::Index>(c)) = cone.col(static_cast<Eigen::Index>(chosen[c]));
    }
  }
  return chosen;
}

/// VCA endmember estimate: the selected pixel spectra as columns. Negative
/// noise samples in the chosen pixels are clipped to zero.
inline SignatureMatrix vca(const HyperspectralImage& image, std::size_t endmembers,
                           std::uint64_t seed) {
  const auto idx = vca_indices(image, endmembers, seed);
  Matrix a(image.data().rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    a.col(static_cast<Eigen::Index>(j)) = image.pixel(idx[j]).cwiseMax(0.0);
  }
  return SignatureMatrix(std::move(a), {}, image.wavelengths());
}

/// Random starting point: A ~ U(0, 1], columns of S uniform on the simplex.
inline std::pair<SignatureMatrix, AbundanceMatrix> random_init(std::size_t bands,
                                                               std::size_t endmembers,
                                                               std::size_t pixels,
                                                               std::uint64_t seed) {
  if (bands == 0 || endmembers == 0 || pixels == 0) {
    throw InvalidArgument("random_init dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  const auto l = static_cast<Eigen::Index>(bands);
  const auto c = static_cast<Eigen::Index>(endmembers);
  const auto n = static_cast<Eigen::Index>(pixels);

  Matrix a(l, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) a(i, j) = 1.0 - unit(rng);
  }
  Matrix s(c, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      // Exponential draws are > 0 almost surely; guard the measure-zero case.
      double e = expo(rng);
      while (e == 0.0) e = expo(rng);
      s(j, k) = e;
      total += e;
    }
    s.col(k) /= total;
  }
  return {SignatureMatrix(std::move(a)), AbundanceMatrix(std::move(s))};
}

}  // namespace hsu
