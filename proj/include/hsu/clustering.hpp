#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "hsu/datamodel.hpp"

namespace hsu {

struct FcmOptions {
  double fuzzifier = 2.0;
  double tol = 1e-6;
  std::size_t max_iter = 300;
  std::uint64_t seed = 1;
};

namespace fcm_detail {

inline Matrix squared_distances(const Matrix& y, const Matrix& centers) {
  Matrix d(centers.cols(), y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    for (Eigen::Index c = 0; c < centers.cols(); ++c) {
      d(c, k) = (y.col(k) - centers.col(c)).squaredNorm();
    }
  }
  return d;
}

// Closed-form membership step for fixed centers. A pixel sitting exactly on
// a center belongs wholly to the first such center.
inline Matrix memberships(const Matrix& dist2, double m) {
  const double exponent = 1.0 / (m - 1.0);
  Matrix u = Matrix::Zero(dist2.rows(), dist2.cols());
  for (Eigen::Index k = 0; k < dist2.cols(); ++k) {
    Eigen::Index nearest = 0;
    const double dmin = dist2.col(k).minCoeff(&nearest);
    if (dmin == 0.0) {
      for (Eigen::Index c = 0; c < dist2.rows(); ++c) {
        if (dist2(c, k) == 0.0) {
          u(c, k) = 1.0;
          break;
        }
      }
      continue;
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < dist2.rows(); ++c) {
      u(c, k) = std::pow(dmin / dist2(c, k), exponent);
      total += u(c, k);
    }
    u.col(k) /= total;
  }
  return u;
}

inline Matrix centers(const Matrix& y, const Matrix& u, double m, const Matrix& previous) {
  Matrix v = previous;
  const Matrix w = u.array().pow(m).matrix();
  for (Eigen::Index c = 0; c < u.rows(); ++c) {
    const double mass = w.row(c).sum();
    if (mass > 0.0) v.col(c) = y * w.row(c).transpose() / mass;
  }
  return v;
}

inline double objective(const Matrix& u, const Matrix& dist2, double m) {
  return (u.array().pow(m) * dist2.array()).sum();
}

inline std::vector<std::size_t> hard_labels(const Matrix& u) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(u.cols()));
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < u.rows(); ++c) {
      if (u(c, k) > u(best, k)) best = c;
    }
    labels[static_cast<std::size_t>(k)] = static_cast<std::size_t>(best);
  }
  return labels;
}

}  // namespace fcm_detail

/// Fuzzy c-means started from explicit centers (bands x clusters).
inline ClusterAssignment fcm_from_centers(const HyperspectralImage& image, Matrix initial_centers,
                                          const FcmOptions& options = {}) {
  if (!(options.fuzzifier > 1.0)) throw InvalidArgument("FCM fuzzifier must be > 1");
  if (!(options.tol > 0.0)) throw InvalidArgument("FCM tolerance must be > 0");
  if (initial_centers.rows() != image.data().rows() || initial_centers.cols() < 1) {
    throw InvalidArgument("initial centers must be bands x clusters");
  }
  if (static_cast<std::size_t>(initial_centers.cols()) > image.pixels()) {
    throw InvalidArgument("more clusters than pixels");
  }
  if (!initial_centers.allFinite()) throw InvalidArgument("initial centers must be finite");

  const auto& y = image.data();
  const double m = options.fuzzifier;

  ClusterAssignment out;
  Matrix v = std::move(initial_centers);
  Matrix d2 = fcm_detail::squared_distances(y, v);
  Matrix u = fcm_detail::memberships(d2, m);
  out.objective_history.push_back(fcm_detail::objective(u, d2, m));

  std::size_t iter = 0;
  while (iter < options.max_iter) {
    ++iter;
    v = fcm_detail::centers(y, u, m, v);
    d2 = fcm_detail::squared_distances(y, v);
    Matrix next = fcm_detail::memberships(d2, m);
    out.objective_history.push_back(fcm_detail::objective(next, d2, m));
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    if (change < options.tol) break;
  }

  out.labels = fcm_detail::hard_labels(u);
  out.memberships = std::move(u);
  out.centers = std::move(v);
  out.iterations = iter;
  return out;
}

/// Fuzzy c-means with centers seeded from `clusters` distinct random pixels.
inline ClusterAssignment fcm(const HyperspectralImage& image, std::size_t clusters,
                             const FcmOptions& options = {}) {
  if (clusters == 0) throw InvalidArgument("cluster count must be positive");
  if (clusters > image.pixels()) {
    throw InvalidArgument("cluster count " + std::to_string(clusters) + " exceeds pixel count " +
                          std::to_string(image.pixels()));
  }
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> index(image.pixels());
  std::iota(index.begin(), index.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `clusters` slots become the sample.
  for (std::size_t i = 0; i < clusters; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  Matrix centers(image.data().rows(), static_cast<Eigen::Index>(clusters));
  for (std::size_t c = 0; c < clusters; ++c) {
    centers.col(static_cast<Eigen::Index>(c)) = image.pixel(index[c]);
  }
  return fcm_from_centers(image, std::move(centers), options);
}

/// Every pixel in cluster 0.
inline ClusterAssignment single_cluster(const HyperspectralImage& image) {
  ClusterAssignment out;
  out.labels.assign(image.pixels(), 0);
  out.memberships = Matrix::Ones(1, static_cast<Eigen::Index>(image.pixels()));
  out.centers = image.data().rowwise().mean();
  return out;
}

}  // namespace hsu
