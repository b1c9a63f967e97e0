#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hsu/datamodel.hpp"

namespace hsu {

/// Sparsity weight estimated from the data. Each band row contributes
/// (sqrt(N) - |y|_1 / |y|_2) / sqrt(N - 1), a Hoyer-style sparseness in
/// [0, 1]; the sum is scaled by 1/sqrt(L). Returns 0 for single-pixel images.
inline double estimate_lambda(const HyperspectralImage& image) {
  const auto& y = image.data();
  const double n = static_cast<double>(image.pixels());
  if (image.pixels() == 1) return 0.0;
  const double sqrt_n = std::sqrt(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double l2 = y.row(i).norm();
    if (l2 == 0.0) {
      throw InvalidArgument("band row " + std::to_string(i) + " is identically zero");
    }
    const double l1 = y.row(i).lpNorm<1>();
    // |y|_1/|y|_2 can exceed sqrt(N) by an ulp; clamp so each term stays >= 0.
    total += std::max(0.0, sqrt_n - l1 / l2) / std::sqrt(n - 1.0);
  }
  return total / std::sqrt(static_cast<double>(y.rows()));
}

/// Normalized inner product (cosine of the spectral angle).
template <typename DerivedA, typename DerivedB>
double spectral_angle_cos(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("spectral angle of a zero vector");
  return a.dot(b) / (na * nb);
}

/// Attaches row-normalized similarity weights rho_kl = theta(y_k, y_l) / sum_l theta(y_k, y_l).
inline NeighborhoodSystem neighbor_weights(const HyperspectralImage& image,
                                           const NeighborhoodSystem& nbhd) {
  if (nbhd.nodes() != image.pixels()) {
    throw InvalidArgument("neighborhood has " + std::to_string(nbhd.nodes()) +
                          " nodes but the image has " + std::to_string(image.pixels()) + " pixels");
  }
  const auto& y = image.data();
  const Vector norms = y.colwise().norm().transpose();
  for (Eigen::Index k = 0; k < norms.size(); ++k) {
    if (norms[k] == 0.0) throw InvalidArgument("pixel " + std::to_string(k) + " has a zero spectrum");
  }

  std::vector<std::vector<double>> weights(nbhd.nodes());
  for (std::size_t k = 0; k < nbhd.nodes(); ++k) {
    const auto& list = nbhd.neighbors(k);
    auto& row = weights[k];
    row.reserve(list.size());
    const auto ki = static_cast<Eigen::Index>(k);
    for (auto l : list) {
      const auto li = static_cast<Eigen::Index>(l);
      row.push_back(y.col(ki).dot(y.col(li)) / (norms[ki] * norms[li]));
    }
    if (list.empty()) continue;
    const double denom = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(denom > 0.0)) {
      throw DegenerateData("pixel " + std::to_string(k) + " has zero total neighbor similarity");
    }
    for (auto& w : row) w /= denom;
  }
  return nbhd.with_weights(std::move(weights));
}

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
///
/// Sort-and-threshold: with u sorted descending, the support size is the
/// largest j with u_j > (sum_{i<=j} u_i - 1)/j. Vectors already on the simplex
/// (to a few ulps) are returned untouched so the operator is idempotent.
inline Vector project_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw InvalidArgument("cannot project an empty vector");
  if (!v.allFinite()) throw InvalidArgument("cannot project a non-finite vector");

  double sum = 0.0;
  bool nonneg = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += v[i];
    nonneg = nonneg && v[i] >= 0.0;
  }
  if (nonneg && std::abs(sum - 1.0) <= 4.0 * static_cast<double>(n) * 1e-16) return v;

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] > candidate) tau = candidate;
  }
  Vector x = (v.array() - tau).max(0.0).matrix();

  // Redistribute the rounding residue onto the largest entry.
  const double residue = 1.0 - x.sum();
  Eigen::Index top = 0;
  x.maxCoeff(&top);
  x[top] = std::max(0.0, x[top] + residue);
  return x;
}

/// Guarded q-norm (sum_i (|s_i| + guard)^q)^(1/q).
inline double lq_norm(const Vector& s, double q, double guard) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(std::abs(s[i]) + guard, q);
  return std::pow(acc, 1.0 / q);
}

/// Gradient of the q-norm used in the abundance update:
/// g_j = s_j (|s_j| + guard)^(q-2) / (sum_i (|s_i| + guard)^q)^((q-1)/q).
/// The guard keeps it finite at exact zeros, which the projection produces routinely.
inline Vector sparsity_gradient(const Vector& s, double q, double guard) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in (0, 1]");
  if (!(guard > 0.0)) throw InvalidArgument("guard must be positive");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(std::abs(s[i]) + guard, q);
  const double denom = std::pow(acc, (q - 1.0) / q);
  Vector g(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    g[j] = s[j] * std::pow(std::abs(s[j]) + guard, q - 2.0) / denom;
  }
  return g;
}

}  // namespace hsu
