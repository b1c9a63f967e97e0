#pragma once

// Reference computations used only by the tests. Each one takes a different
// route from the library code it checks (enumeration, brute force, finite
// differences), so agreement is meaningful.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Simplex projection by enumerating every support set: on support S the
/// equality-constrained minimizer is x_S = v_S - (sum v_S - 1)/|S|. The
/// projection is the closest such point that is nonnegative.
inline Vector simplex_projection_active_set(const Vector& v) {
  const auto c = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << c); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < c; ++j) {
      if (mask & (1u << j)) {
        sum += v[j];
        ++count;
      }
    }
    const double shift = (sum - 1.0) / count;
    Vector x = Vector::Zero(c);
    bool feasible = true;
    for (int j = 0; j < c; ++j) {
      if (mask & (1u << j)) {
        x[j] = v[j] - shift;
        if (x[j] < 0.0) feasible = false;
      }
    }
    if (!feasible) continue;
    const double d = (x - v).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = x;
    }
  }
  return best;
}

/// Central finite-difference gradient.
inline Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

/// Lloyd's k-means from the given initial centers (columns). Returns labels.
inline std::vector<int> lloyd_kmeans(const Matrix& y, Matrix centers, int iterations = 100) {
  std::vector<int> labels(static_cast<std::size_t>(y.cols()), 0);
  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < centers.cols(); ++c) {
        const double d = (y.col(k) - centers.col(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      labels[static_cast<std::size_t>(k)] = best;
    }
    Matrix sums = Matrix::Zero(centers.rows(), centers.cols());
    std::vector<int> counts(static_cast<std::size_t>(centers.cols()), 0);
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      sums.col(labels[static_cast<std::size_t>(k)]) += y.col(k);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])];
    }
    for (Eigen::Index c = 0; c < centers.cols(); ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centers.col(c) = sums.col(c) / counts[static_cast<std::size_t>(c)];
    }
  }
  return labels;
}

/// Squared volume (up to a constant) of the simplex spanned by the given columns.
inline double simplex_volume2(const Matrix& vertices) {
  const auto p = vertices.cols();
  if (p < 2) return 0.0;
  Matrix edges(vertices.rows(), p - 1);
  for (Eigen::Index j = 1; j < p; ++j) edges.col(j - 1) = vertices.col(j) - vertices.col(0);
  return (edges.transpose() * edges).determinant();
}

/// Index set of `p` pixels spanning the largest simplex, by exhaustive search.
inline std::vector<std::size_t> max_volume_pixels(const Matrix& y, int p) {
  const auto n = static_cast<int>(y.cols());
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> best;
  double best_vol = -1.0;
  Matrix verts(y.rows(), p);
  while (true) {
    for (int j = 0; j < p; ++j) verts.col(j) = y.col(idx[static_cast<std::size_t>(j)]);
    const double vol = simplex_volume2(verts);
    if (vol > best_vol) {
      best_vol = vol;
      best.assign(idx.begin(), idx.end());
    }
    int i = p - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - p + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < p; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

inline double angle(const Vector& a, const Vector& b) {
  const double cosv = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(cosv, -1.0, 1.0));
}

/// Minimum total spectral angle over all column permutations.
inline double best_total_angle(const Matrix& truth, const Matrix& est) {
  std::vector<int> perm(static_cast<std::size_t>(truth.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      total += angle(est.col(static_cast<Eigen::Index>(i)), truth.col(perm[i]));
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Two-endmember FCLS by scanning t in s = (t, 1 - t) on a uniform grid.
inline double fcls_grid_c2(const Matrix& a, const Vector& y, int steps = 1000000) {
  double best_t = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double r = (y - t * a.col(0) - (1.0 - t) * a.col(1)).squaredNorm();
    if (r < best) {
      best = r;
      best_t = t;
    }
  }
  return best_t;
}

/// Uniform random point on the simplex (sorted-uniform spacings).
inline Vector random_simplex_point(std::mt19937_64& rng, int c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cuts(static_cast<std::size_t>(c - 1));
  for (auto& x : cuts) x = u(rng);
  std::sort(cuts.begin(), cuts.end());
  Vector s(c);
  double prev = 0.0;
  for (int j = 0; j < c - 1; ++j) {
    s[j] = cuts[static_cast<std::size_t>(j)] - prev;
    prev = cuts[static_cast<std::size_t>(j)];
  }
  s[c - 1] = 1.0 - prev;
  return s;
}

}  // namespace oracle
