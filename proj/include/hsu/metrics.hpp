#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hsu/datamodel.hpp"
#include "hsu/regularizers.hpp"
#include "hsu/unmix.hpp"

namespace hsu {

/// Spectral angle distance in radians, in [0, pi].
///
/// Evaluated as 2 atan2(|u - v|, |u + v|) on the unit vectors, which equals
/// acos(cos theta) but keeps full precision near 0 and pi where acos does not.
template <typename DerivedA, typename DerivedB>
double sad(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("spectral angle of a zero vector");
  const Vector u = a.template cast<double>() / na;
  const Vector v = b.template cast<double>() / nb;
  return 2.0 * std::atan2((u - v).norm(), (u + v).norm());
}

/// Abundance angle distance: the same angle between abundance vectors.
template <typename DerivedA, typename DerivedB>
double aad(const Eigen::MatrixBase<DerivedA>& s, const Eigen::MatrixBase<DerivedB>& t) {
  return sad(s, t);
}

struct EvaluationReport {
  std::vector<double> per_endmember_sad;  // indexed by true endmember
  double rms_sad = 0.0;
  double rms_aad = 0.0;
  std::vector<std::size_t> matching;  // matching[i] = true column paired with estimated column i
};

/// Assignment of estimated to true columns minimizing the summed SAD.
/// Exact dynamic program over subsets of true columns, O(c^2 2^c).
inline std::vector<std::size_t> match_endmembers(const Matrix& a_true, const Matrix& a_est) {
  if (a_true.cols() != a_est.cols()) {
    throw InvalidArgument("cannot match " + std::to_string(a_est.cols()) + " estimated against " +
                          std::to_string(a_true.cols()) + " true endmembers");
  }
  if (a_true.rows() != a_est.rows()) throw InvalidArgument("band count mismatch in matching");
  const auto c = static_cast<std::size_t>(a_true.cols());
  if (c == 0) return {};
  if (c > 20) throw InvalidArgument("matching supports at most 20 endmembers");

  std::vector<double> cost(c * c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      cost[i * c + j] = sad(a_est.col(static_cast<Eigen::Index>(i)),
                            a_true.col(static_cast<Eigen::Index>(j)));
    }
  }

  // best[mask]: minimal cost of assigning estimated columns 0..popcount(mask)-1
  // to the true columns in `mask`.
  const std::size_t full = (std::size_t{1} << c) - 1;
  std::vector<double> best(full + 1, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> choice(full + 1, 0);
  best[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!std::isfinite(best[mask])) continue;
    const auto i = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t j = 0; j < c; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      const double value = best[mask] + cost[i * c + j];
      if (value < best[next]) {
        best[next] = value;
        choice[next] = j;
      }
    }
  }

  std::vector<std::size_t> matching(c);
  std::size_t mask = full;
  for (std::size_t i = c; i-- > 0;) {
    const std::size_t j = choice[mask];
    matching[i] = j;
    mask &= ~(std::size_t{1} << j);
  }
  return matching;
}

/// Matches estimated endmembers to the truth, then reports per-endmember SAD,
/// rms SAD over endmembers and rms AAD over pixels.
inline EvaluationReport evaluate(const Matrix& a_true, const Matrix& s_true, const Matrix& a_est,
                                 const Matrix& s_est) {
  if (s_true.rows() != a_true.cols() || s_est.rows() != a_est.cols()) {
    throw InvalidArgument("abundance rows must equal endmember count");
  }
  if (s_true.cols() != s_est.cols()) throw InvalidArgument("pixel count mismatch in evaluation");

  EvaluationReport report;
  report.matching = match_endmembers(a_true, a_est);
  const auto c = static_cast<std::size_t>(a_true.cols());

  report.per_endmember_sad.assign(c, 0.0);
  Matrix s_aligned(s_est.rows(), s_est.cols());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const auto ti = static_cast<Eigen::Index>(report.matching[i]);
    const auto ei = static_cast<Eigen::Index>(i);
    const double angle = sad(a_est.col(ei), a_true.col(ti));
    report.per_endmember_sad[report.matching[i]] = angle;
    sum_sq += angle * angle;
    s_aligned.row(ti) = s_est.row(ei);
  }
  report.rms_sad = std::sqrt(sum_sq / static_cast<double>(c));

  double aad_sq = 0.0;
  for (Eigen::Index k = 0; k < s_true.cols(); ++k) {
    const double angle = aad(s_aligned.col(k), s_true.col(k));
    aad_sq += angle * angle;
  }
  report.rms_aad = std::sqrt(aad_sq / static_cast<double>(s_true.cols()));
  return report;
}

inline EvaluationReport evaluate(const SignatureMatrix& a_true, const AbundanceMatrix& s_true,
                                 const SignatureMatrix& a_est, const AbundanceMatrix& s_est) {
  return evaluate(a_true.data(), s_true.data(), a_est.data(), s_est.data());
}

inline EvaluationReport evaluate(const SignatureMatrix& a_true, const AbundanceMatrix& s_true,
                                 const UnmixingResult& result) {
  return evaluate(a_true, s_true, result.A, result.S);
}

}  // namespace hsu
