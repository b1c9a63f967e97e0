#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsu/clustering.hpp"
#include "hsu/datamodel.hpp"
#include "hsu/init.hpp"
#include "hsu/regularizers.hpp"

namespace hsu {

enum class StopReason { converged, max_iter };

inline std::string_view to_string(StopReason r) {
  return r == StopReason::converged ? "converged" : "max_iter";
}

struct UnmixingResult {
  SignatureMatrix A;
  AbundanceMatrix S;
  std::vector<double> cost_trace;
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::max_iter;
  double lambda = 0.0;
};

/// Variant-resolved weights of the local cost.
struct Penalty {
  double mu = 0.02;
  double eta = 0.0;
  double lambda = 0.0;
  double q = 1.0;
  double guard = 1e-12;
  bool cluster_mask = false;
};

/// Maps a config onto the effective penalty for its variant. Lambda comes
/// from `cfg.lambda` when set, otherwise from the data.
inline Penalty resolve_penalty(const UnmixingConfig& cfg, const HyperspectralImage& image) {
  cfg.validate();
  Penalty p;
  p.mu = cfg.mu;
  p.q = cfg.q;
  p.guard = cfg.sparsity_guard;
  const auto lambda = [&] { return cfg.lambda ? *cfg.lambda : estimate_lambda(image); };
  switch (cfg.variant) {
    case AlgorithmVariant::nmf:
    case AlgorithmVariant::fcls:
      break;
    case AlgorithmVariant::lq_nmf:
      p.lambda = lambda();
      break;
    case AlgorithmVariant::distributed:
      p.eta = cfg.eta;
      break;
    case AlgorithmVariant::sparse_distributed:
      p.eta = cfg.eta;
      p.lambda = lambda();
      break;
    case AlgorithmVariant::clustered_sparse_distributed:
      p.eta = cfg.eta;
      p.lambda = lambda();
      p.cluster_mask = true;
      break;
  }
  return p;
}

namespace unmix_detail {

inline void check_dims(const Matrix& y, const Matrix& a, const Matrix& s) {
  if (a.rows() != y.rows() || a.cols() != s.rows() || s.cols() != y.cols()) {
    throw InvalidArgument("dimension mismatch: Y " + detail::dims(y.rows(), y.cols()) + ", A " +
                          detail::dims(a.rows(), a.cols()) + ", S " +
                          detail::dims(s.rows(), s.cols()));
  }
}

inline bool same_cluster(const std::vector<std::size_t>* labels, std::size_t k, std::size_t l) {
  return labels == nullptr || (*labels)[k] == (*labels)[l];
}

}  // namespace unmix_detail

/// Sum over pixels of the squared residual |y_k - A s_k|^2.
inline double global_cost(const Matrix& y, const Matrix& a, const Matrix& s) {
  unmix_detail::check_dims(y, a, s);
  return (y - a * s).colwise().squaredNorm().sum();
}

/// sum_{l in N_k, same cluster} rho_kl (s_l - s_k). `labels` null disables the mask.
inline Vector neighbor_pull(std::size_t k, const Matrix& s, const NeighborhoodSystem& nbhd,
                            const std::vector<std::size_t>* labels) {
  Vector acc = Vector::Zero(s.rows());
  const auto& list = nbhd.neighbors(k);
  const auto& rho = nbhd.weights(k);
  const auto ki = static_cast<Eigen::Index>(k);
  for (std::size_t j = 0; j < list.size(); ++j) {
    if (!unmix_detail::same_cluster(labels, k, list[j])) continue;
    acc += rho[j] * (s.col(static_cast<Eigen::Index>(list[j])) - s.col(ki));
  }
  return acc;
}

/// Local cost of pixel k: residual + eta * sum rho |s_k - s_l|^2 + lambda |s_k|_q.
inline double local_cost(std::size_t k, const Matrix& y, const Matrix& a, const Matrix& s,
                         const NeighborhoodSystem& nbhd, const std::vector<std::size_t>* labels,
                         const Penalty& p) {
  unmix_detail::check_dims(y, a, s);
  const auto ki = static_cast<Eigen::Index>(k);
  double cost = (y.col(ki) - a * s.col(ki)).squaredNorm();
  if (p.eta != 0.0) {
    const auto& list = nbhd.neighbors(k);
    const auto& rho = nbhd.weights(k);
    double spread = 0.0;
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (!unmix_detail::same_cluster(labels, k, list[j])) continue;
      spread += rho[j] * (s.col(ki) - s.col(static_cast<Eigen::Index>(list[j]))).squaredNorm();
    }
    cost += p.eta * spread;
  }
  if (p.lambda != 0.0) cost += p.lambda * lq_norm(s.col(ki), p.q, p.guard);
  return cost;
}

/// Descent direction of the smooth part of the local cost:
/// A^T (y_k - A s_k) + eta * sum rho (s_l - s_k), i.e. minus half its gradient.
inline Vector smooth_direction(std::size_t k, const Matrix& y, const Matrix& a, const Matrix& s,
                               const NeighborhoodSystem& nbhd,
                               const std::vector<std::size_t>* labels, const Penalty& p) {
  const auto ki = static_cast<Eigen::Index>(k);
  Vector d = a.transpose() * (y.col(ki) - a * s.col(ki));
  if (p.eta != 0.0) d += p.eta * neighbor_pull(k, s, nbhd, labels);
  return d;
}

/// One projected steepest-descent step for a single abundance column given
/// its data term A^T (y_k - A s_k) and neighbor pull.
inline Vector abundance_step(const Vector& s_k, const Vector& data_term, const Vector& pull,
                             const Penalty& p) {
  Vector v = s_k + p.mu * data_term;
  if (p.eta != 0.0) v += (p.mu * p.eta) * pull;
  if (p.lambda != 0.0) v -= (p.mu * p.lambda) * sparsity_gradient(s_k, p.q, p.guard);
  return project_simplex(v);
}

/// Updated abundance column k; neighbors are read from `s_prev` (Jacobi sweep).
inline Vector update_abundance(std::size_t k, const Matrix& y, const Matrix& a, const Matrix& s_prev,
                               const NeighborhoodSystem& nbhd,
                               const std::vector<std::size_t>* labels, const Penalty& p) {
  unmix_detail::check_dims(y, a, s_prev);
  const auto ki = static_cast<Eigen::Index>(k);
  const Vector data_term = a.transpose() * (y.col(ki) - a * s_prev.col(ki));
  const Vector pull = p.eta != 0.0 ? neighbor_pull(k, s_prev, nbhd, labels)
                                   : Vector::Zero(s_prev.rows()).eval();
  return abundance_step(s_prev.col(ki), data_term, pull, p);
}

/// Multiplicative signature step A <- A .* (Y S^T) ./ (A S S^T + delta).
/// Negative entries of Y S^T (possible only with noisy data) are clipped so A stays >= 0.
inline Matrix update_signatures(const Matrix& y, const Matrix& a, const Matrix& s,
                                double delta = 1e-12) {
  unmix_detail::check_dims(y, a, s);
  const Matrix numer = (y * s.transpose()).cwiseMax(0.0);
  const Matrix denom = (a * (s * s.transpose())).array() + delta;
  return (a.array() * numer.array() / denom.array()).matrix();
}

/// Multiplicative abundance step S <- S .* (A^T Y) ./ (A^T A S + delta).
inline Matrix update_abundances_multiplicative(const Matrix& y, const Matrix& a, const Matrix& s,
                                               double delta = 1e-12) {
  unmix_detail::check_dims(y, a, s);
  const Matrix numer = (a.transpose() * y).cwiseMax(0.0);
  const Matrix denom = ((a.transpose() * a) * s).array() + delta;
  return (s.array() * numer.array() / denom.array()).matrix();
}

inline bool converged(double j_new, double j_old, double eps) { return std::abs(j_new - j_old) < eps; }

/// Full objective tracked by the stopping rule: global residual plus the
/// neighborhood and sparsity terms of every pixel's local cost.
inline double total_cost(const Matrix& y, const Matrix& a, const Matrix& s,
                         const NeighborhoodSystem* nbhd, const std::vector<std::size_t>* labels,
                         const Penalty& p) {
  double cost = global_cost(y, a, s);
  if (p.eta != 0.0 && nbhd != nullptr) {
    double spread = 0.0;
    for (std::size_t k = 0; k < nbhd->nodes(); ++k) {
      const auto& list = nbhd->neighbors(k);
      const auto& rho = nbhd->weights(k);
      const auto ki = static_cast<Eigen::Index>(k);
      for (std::size_t j = 0; j < list.size(); ++j) {
        if (!unmix_detail::same_cluster(labels, k, list[j])) continue;
        spread += rho[j] * (s.col(ki) - s.col(static_cast<Eigen::Index>(list[j]))).squaredNorm();
      }
    }
    cost += p.eta * spread;
  }
  if (p.lambda != 0.0) {
    double sparse = 0.0;
    for (Eigen::Index k = 0; k < s.cols(); ++k) sparse += lq_norm(s.col(k), p.q, p.guard);
    cost += p.lambda * sparse;
  }
  return cost;
}

struct FclsOptions {
  std::size_t max_iter = 20000;
  double tol = 1e-13;
};

/// Largest eigenvalue of A^T A restricted to the simplex tangent space
/// {d : sum d = 0}. Gradient components along the all-ones direction are
/// absorbed by the simplex projection, so this is the step-size constant
/// that matters for projected gradient on abundances.
inline double tangent_lipschitz(const Matrix& a) {
  const auto c = a.cols();
  if (c < 2) return 0.0;
  const Matrix centering =
      Matrix::Identity(c, c) - Matrix::Constant(c, c, 1.0 / static_cast<double>(c));
  const Matrix reduced = centering * (a.transpose() * a) * centering;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

/// Fully constrained least squares: argmin |y_k - A s|^2 over the simplex for
/// every pixel, by accelerated projected gradient with adaptive restart.
inline Matrix solve_fcls(const Matrix& a, const Matrix& y, const FclsOptions& options = {}) {
  if (a.rows() != y.rows()) throw InvalidArgument("FCLS: band count mismatch");
  const auto c = a.cols();
  const auto n = y.cols();
  if (c == 1) return Matrix::Ones(1, n);
  const double lipschitz = tangent_lipschitz(a);
  if (!(lipschitz > 0.0)) throw DegenerateData("FCLS: signature columns are identical");
  const double step = 1.0 / lipschitz;
  const Matrix gram = a.transpose() * a;
  const Matrix aty = a.transpose() * y;

  Matrix s = Matrix::Constant(c, n, 1.0 / static_cast<double>(c));
  Matrix z = s;
  double t = 1.0;
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const Matrix grad = aty - gram * z;
    Matrix next(c, n);
    for (Eigen::Index k = 0; k < n; ++k) next.col(k) = project_simplex(z.col(k) + step * grad.col(k));
    const Matrix delta = next - s;
    const double change = delta.cwiseAbs().maxCoeff();
    // Restart momentum when it points uphill.
    if (((z - next).array() * delta.array()).sum() > 0.0) t = 1.0;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * delta;
    s = std::move(next);
    t = t_next;
    if (change < options.tol) break;
  }
  return s;
}

/// Called after every outer iteration with (iteration, A, S). For the nmf
/// variant S is the simplex projection of the multiplicative factor.
using IterationObserver = std::function<void(std::size_t, const Matrix&, const Matrix&)>;

/// Alternating solver. Each iteration updates A multiplicatively (skipped for
/// fcls), then every abundance column, then evaluates the objective; it stops
/// once two consecutive objective values differ by less than cfg.eps or after
/// cfg.max_iter iterations.
inline UnmixingResult run_unmixing(const HyperspectralImage& image, const UnmixingConfig& cfg,
                                   const SignatureMatrix& init_a, const AbundanceMatrix& init_s,
                                   const ClusterAssignment* clusters = nullptr,
                                   const IterationObserver& observer = {}) {
  const Penalty p = resolve_penalty(cfg, image);
  const auto& y = image.data();
  unmix_detail::check_dims(y, init_a.data(), init_s.data());

  const std::vector<std::size_t>* labels = nullptr;
  if (p.cluster_mask) {
    if (clusters == nullptr) throw InvalidArgument("the clustered variant needs a cluster assignment");
    if (clusters->labels.size() != image.pixels()) {
      throw InvalidArgument("cluster labels do not cover every pixel");
    }
    labels = &clusters->labels;
  }

  std::optional<NeighborhoodSystem> nbhd;
  if (p.eta != 0.0) {
    nbhd = neighbor_weights(image, build_neighborhood(image.width(), image.height()));
  }

  constexpr double kSignatureFloor = 1e-9;
  Matrix a = init_a.data().cwiseMax(kSignatureFloor);
  Matrix s = init_s.data();
  const auto c = s.rows();
  const auto n = s.cols();
  const bool multiplicative = cfg.variant == AlgorithmVariant::nmf;

  const auto projected = [&](const Matrix& raw) {
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index k = 0; k < raw.cols(); ++k) out.col(k) = project_simplex(raw.col(k));
    return out;
  };

  std::vector<double> trace;
  StopReason reason = StopReason::max_iter;
  std::size_t iter = 0;
  while (iter < cfg.max_iter) {
    ++iter;
    if (cfg.variant != AlgorithmVariant::fcls) a = update_signatures(y, a, s, cfg.signature_guard);

    if (multiplicative) {
      s = update_abundances_multiplicative(y, a, s, cfg.signature_guard);
    } else {
      const Matrix data_term = a.transpose() * y - (a.transpose() * a) * s;
      Matrix next(c, n);
      Vector pull = Vector::Zero(c);
      for (Eigen::Index k = 0; k < n; ++k) {
        if (nbhd) pull = neighbor_pull(static_cast<std::size_t>(k), s, *nbhd, labels);
        next.col(k) = abundance_step(s.col(k), data_term.col(k), pull, p);
      }
      s = std::move(next);
    }

    const double cost = total_cost(y, a, s, nbhd ? &*nbhd : nullptr, labels, p);
    if (!std::isfinite(cost)) throw NumericalFailure("objective became non-finite", iter);
    trace.push_back(cost);
    if (observer) observer(iter, a, multiplicative ? projected(s) : s);
    if (trace.size() >= 2 && converged(trace.back(), trace[trace.size() - 2], cfg.eps)) {
      reason = StopReason::converged;
      break;
    }
  }

  if (multiplicative) s = projected(s);
  return UnmixingResult{SignatureMatrix(std::move(a), init_a.names(), init_a.wavelengths()),
                        AbundanceMatrix(std::move(s)), std::move(trace), iter, reason, p.lambda};
}

enum class InitMethod { vca, random };

inline InitMethod parse_init(std::string_view name) {
  if (name == "vca") return InitMethod::vca;
  if (name == "random") return InitMethod::random;
  throw InvalidArgument("unknown init method '" + std::string(name) + "'");
}

/// Starting point: VCA signatures with FCLS abundances, or random matrices.
inline std::pair<SignatureMatrix, AbundanceMatrix> initialize(const HyperspectralImage& image,
                                                              std::size_t endmembers,
                                                              InitMethod method,
                                                              std::uint64_t seed) {
  if (method == InitMethod::random) {
    return random_init(image.bands(), endmembers, image.pixels(), seed);
  }
  SignatureMatrix a = vca(image, endmembers, seed);
  Matrix s = solve_fcls(a.data(), image.data());
  return {std::move(a), AbundanceMatrix(std::move(s))};
}

struct PipelineOutput {
  UnmixingResult result;
  std::optional<ClusterAssignment> clusters;
};

/// Clustering (when the variant uses it), initialization and the solver loop.
inline PipelineOutput run_pipeline(const HyperspectralImage& image, std::size_t endmembers,
                                   const UnmixingConfig& cfg, InitMethod init,
                                   const FcmOptions& fcm_options = {}) {
  cfg.validate();
  std::optional<ClusterAssignment> clusters;
  if (uses_clusters(cfg.variant)) {
    FcmOptions opts = fcm_options;
    opts.seed = cfg.seed;
    clusters = fcm(image, cfg.clusters, opts);
  }
  auto [a0, s0] = initialize(image, endmembers, init, cfg.seed);
  auto result = run_unmixing(image, cfg, a0, s0, clusters ? &*clusters : nullptr);
  return PipelineOutput{std::move(result), std::move(clusters)};
}

}  // namespace hsu
