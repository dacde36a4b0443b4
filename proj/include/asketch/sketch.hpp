#pragma once

#include <asketch/matrices.hpp>

namespace asketch {

enum class SketchKind { AdaptiveGaussian, ObliviousGaussian, LeverageScore, UniformColumns, Power };

inline const char* to_string(SketchKind k) {
  switch (k) {
    case SketchKind::AdaptiveGaussian: return "adaptive-gaussian";
    case SketchKind::ObliviousGaussian: return "oblivious-gaussian";
    case SketchKind::LeverageScore: return "leverage-score";
    case SketchKind::UniformColumns: return "uniform-columns";
    case SketchKind::Power: return "power";
  }
  return "?";
}

/// A materialized sketching matrix S in R^{d x m} together with how it was
/// built. Adaptive-family sketches keep the right factor S-tilde (n x m) so
/// that S = A^T S~ (or (A^T A)^q A^T S~ for the power variant) holds exactly.
struct SketchOperator {
  SketchKind kind = SketchKind::ObliviousGaussian;
  Matrix S;
  Matrix stilde;
  int power_q = 0;
  Index target_rank = 0;
  std::uint64_t seed = 0;

  Index d() const { return S.rows(); }
  Index m() const { return S.cols(); }
};

namespace detail {

inline void require_m(Index m) {
  if (m < 1) throw std::invalid_argument("sketch: dimension m must be at least 1");
}

}  // namespace detail

/// Adaptive Gaussian sketch S = A^T S~ with S~ i.i.d. standard normal.
inline SketchOperator adaptive_gaussian(const Matrix& a, Index m, std::uint64_t seed) {
  detail::require_m(m);
  if (!is_finite(a)) throw std::invalid_argument("adaptive_gaussian: data matrix has non-finite entries");
  Rng rng(seed);
  SketchOperator op;
  op.kind = SketchKind::AdaptiveGaussian;
  op.stilde = gaussian_matrix(a.rows(), m, rng);
  op.S = a.transpose() * op.stilde;
  op.seed = seed;
  return op;
}

/// Test hook: adaptive sketch with an injected right factor.
inline SketchOperator adaptive_from(const Matrix& a, Matrix stilde) {
  if (stilde.rows() != a.rows())
    throw std::invalid_argument("adaptive_from: S~ must have n rows");
  SketchOperator op;
  op.kind = SketchKind::AdaptiveGaussian;
  op.S = a.transpose() * stilde;
  op.stilde = std::move(stilde);
  return op;
}

/// Oblivious Gaussian sketch, entries i.i.d. N(0, 1/d).
inline SketchOperator oblivious_gaussian(Index d, Index m, std::uint64_t seed) {
  detail::require_m(m);
  if (d < 1) throw std::invalid_argument("oblivious_gaussian: d must be at least 1");
  Rng rng(seed);
  SketchOperator op;
  op.kind = SketchKind::ObliviousGaussian;
  op.S = gaussian_matrix(d, m, rng) / std::sqrt(static_cast<double>(d));
  op.seed = seed;
  return op;
}

/// Exact rank-k leverage scores of the Gram matrix A A^T, p_j =
/// ||U_1 row j||^2 / k over the top-k left singular vectors; sums to 1.
inline Vector leverage_scores(const Matrix& a, Index k) {
  auto factors = svd(a);
  const Index rank = numerical_rank(factors.singulars, a.rows(), a.cols());
  if (k < 1 || k > rank)
    throw std::invalid_argument("leverage_scores: target rank " + std::to_string(k) +
                                " exceeds rank(A) = " + std::to_string(rank));
  Vector scores(a.rows());
  for (Index j = 0; j < a.rows(); ++j)
    scores[j] = factors.left.row(j).head(k).squaredNorm() / static_cast<double>(k);
  return scores;
}

namespace detail {

/// m i.i.d. inverse-CDF draws with replacement from `scores`, rescaled by
/// D_ll = (m p_i)^{-1/2}; one column per draw.
inline Matrix sampling_stilde(const Vector& scores, Index m, Rng& rng) {
  const Index n = scores.size();
  Vector cdf(n);
  double acc = 0.0;
  for (Index j = 0; j < n; ++j) {
    acc += scores[j];
    cdf[j] = acc;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix stilde = Matrix::Zero(n, m);
  for (Index l = 0; l < m; ++l) {
    const double u = unif(rng) * acc;  // acc absorbs round-off in the tail
    Index pick = 0;
    while (pick + 1 < n && cdf[pick] < u) ++pick;
    // u == 0 can stop on a leading zero-probability row; step past it
    while (pick + 1 < n && scores[pick] == 0.0) ++pick;
    stilde(pick, l) = 1.0 / std::sqrt(static_cast<double>(m) * scores[pick]);
  }
  return stilde;
}

}  // namespace detail

/// Leverage-score column sampling: m i.i.d. draws with replacement from the
/// rank-k leverage distribution, rescaled by D_ll = (m p_i)^{-1/2};
/// S = A^T (R D).
inline SketchOperator leverage_score_sampling(const Matrix& a, Index m, Index k,
                                              std::uint64_t seed) {
  detail::require_m(m);
  Vector scores = leverage_scores(a, k);
  Rng rng(seed);
  SketchOperator op;
  op.kind = SketchKind::LeverageScore;
  op.stilde = detail::sampling_stilde(scores, m, rng);
  op.S = a.transpose() * op.stilde;
  op.target_rank = k;
  op.seed = seed;
  return op;
}

/// Nystrom-style adaptive column sub-sampling: S~ selects m rows of A
/// uniformly at random (with replacement), S = A^T S~.
inline SketchOperator uniform_columns(const Matrix& a, Index m, std::uint64_t seed) {
  detail::require_m(m);
  Rng rng(seed);
  std::uniform_int_distribution<Index> row(0, a.rows() - 1);
  Matrix stilde = Matrix::Zero(a.rows(), m);
  for (Index l = 0; l < m; ++l) stilde(row(rng), l) = 1.0;
  SketchOperator op;
  op.kind = SketchKind::UniformColumns;
  op.S = a.transpose() * stilde;
  op.stilde = std::move(stilde);
  op.seed = seed;
  return op;
}

namespace detail {

inline Matrix power_iterate(const Matrix& a, Matrix t, int q) {
  // repeated products, no re-orthonormalization; small q keeps drift bounded
  for (int i = 0; i < q; ++i) t = a.transpose() * (a * t);
  return t;
}

}  // namespace detail

/// Power-method sketch S = (A^T A)^q A^T S~; q = 0 reduces exactly to the
/// adaptive Gaussian sketch. Supported range q in [0, 4].
inline SketchOperator power_sketch(const Matrix& a, Index m, int q, std::uint64_t seed) {
  detail::require_m(m);
  if (q < 0 || q > 4) throw std::invalid_argument("power_sketch: q must lie in [0, 4]");
  Rng rng(seed);
  SketchOperator op;
  op.kind = q == 0 ? SketchKind::AdaptiveGaussian : SketchKind::Power;
  op.stilde = gaussian_matrix(a.rows(), m, rng);
  op.S = detail::power_iterate(a, a.transpose() * op.stilde, q);
  op.power_q = q;
  op.seed = seed;
  return op;
}

/// Test hook: power sketch with an injected right factor.
inline SketchOperator power_from(const Matrix& a, Matrix stilde, int q) {
  if (q < 0 || q > 4) throw std::invalid_argument("power_from: q must lie in [0, 4]");
  SketchOperator op;
  op.kind = q == 0 ? SketchKind::AdaptiveGaussian : SketchKind::Power;
  op.S = detail::power_iterate(a, a.transpose() * stilde, q);
  op.stilde = std::move(stilde);
  op.power_q = q;
  return op;
}

}  // namespace asketch
