#pragma once

#include <asketch/sketch.hpp>

namespace asketch {

/// Universal constant of the high-probability bounds (Gaussian concentration
/// for randomized p.s.d. factorizations).
inline constexpr double kConcentrationConstant = 36.0;

/// Computable surrogate for the restricted quantity Z_f:
/// ||(I - P_S) A^T||_2 with P_S the orthogonal projector onto range(S).
/// Exact for unconstrained conjugate domains (the quadratic family).
inline double zf_surrogate(const Matrix& a, const Matrix& s) {
  if (s.rows() != a.cols())
    throw std::invalid_argument("zf_surrogate: sketch must have d rows");
  auto f = svd(s);
  const Index r = numerical_rank(f.singulars, s.rows(), s.cols());
  Matrix at = a.transpose();
  if (r == 0) return spectral_norm(at);
  Matrix basis = f.left.leftCols(r);
  return spectral_norm(at - basis * (basis.transpose() * at));
}

inline double zf_surrogate(const Matrix& a, const SketchOperator& s) {
  return zf_surrogate(a, s.S);
}

/// The Gram-side formula for adaptive sketches:
/// sqrt(||K - K S~ (S~^T K S~)^+ S~^T K||_2) with K = A A^T. Agrees with
/// zf_surrogate for S = A^T S~; kept as an independent cross-check route.
inline double zf_surrogate_gram(const Matrix& a, const Matrix& stilde) {
  if (stilde.rows() != a.rows())
    throw std::invalid_argument("zf_surrogate_gram: S~ must have n rows");
  const Index n = a.rows(), m = stilde.cols();
  Matrix k = Matrix::Zero(n, n);
  k.selfadjointView<Eigen::Lower>().rankUpdate(a);
  k = k.selfadjointView<Eigen::Lower>();
  Matrix ks = k * stilde;
  Matrix gram = stilde.transpose() * ks;
  gram = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Vector& evals = es.eigenvalues();
  const double thresh = rank_threshold(n, m, std::max(evals.maxCoeff(), 0.0));
  Vector inv = Vector::Zero(m);
  for (Index i = 0; i < m; ++i)
    if (evals[i] > thresh) inv[i] = 1.0 / evals[i];
  Matrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Matrix resid = k - ks * pinv * ks.transpose();
  resid = 0.5 * (resid + resid.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> res(resid, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(res.eigenvalues().maxCoeff(), 0.0));
}

/// Spectral-tail functional R_k(A) = (sigma_k^2 + (1/k) sum_{j>k} sigma_j^2)^{1/2},
/// the sum running to the numerical rank.
inline double spectral_tail_rk(const Vector& singulars, Index rows, Index cols, Index k) {
  const Index rank = numerical_rank(singulars, rows, cols);
  if (k < 1 || k > rank)
    throw std::invalid_argument("spectral_tail_rk: k must lie in [1, rank], rank = " +
                                std::to_string(rank));
  double tail = 0.0;
  for (Index j = k; j < rank; ++j) tail += singulars[j] * singulars[j];
  return std::sqrt(singulars[k - 1] * singulars[k - 1] + tail / static_cast<double>(k));
}

inline double spectral_tail_rk(const Matrix& a, Index k) {
  return spectral_tail_rk(svd(a).singulars, a.rows(), a.cols(), k);
}

struct Theorem1Bound {
  double bound = 0.0;  // sqrt(mu / 2 lambda) * z * ||x*||
  bool valid = false;  // lambda >= 2 mu z^2
};

inline Theorem1Bound theorem1_bound(double mu, double lambda, double z, double norm_xstar) {
  if (!(lambda > 0.0)) throw std::invalid_argument("theorem1_bound: lambda must be positive");
  if (mu < 0.0 || z < 0.0 || norm_xstar < 0.0)
    throw std::invalid_argument("theorem1_bound: inputs must be non-negative");
  return {std::sqrt(mu / (2.0 * lambda)) * z * norm_xstar, lambda >= 2.0 * mu * z * z};
}

struct Corollary1Bound {
  double bound = 0.0;            // multiplier of ||x*||: c0 sqrt(mu/2 lambda) R_k
  double lambda_required = 0.0;  // 2 c0^2 mu R_k^2
  double failure_prob = 0.0;     // 12 e^{-k}
};

inline Corollary1Bound corollary1_bound(double mu, double lambda, const Matrix& a, Index k) {
  if (!(lambda > 0.0)) throw std::invalid_argument("corollary1_bound: lambda must be positive");
  if (k < 2 || 2 * k > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("corollary1_bound: need 2 <= k <= min(n,d)/2");
  const double rk = spectral_tail_rk(a, k);
  const double c0 = kConcentrationConstant;
  Corollary1Bound out;
  out.bound = c0 * std::sqrt(mu / (2.0 * lambda)) * rk;
  out.lambda_required = 2.0 * c0 * c0 * mu * rk * rk;
  out.failure_prob = 12.0 * std::exp(-static_cast<double>(k));
  return out;
}

/// Iterative-refinement factor (mu z^2 / 2 lambda)^{T/2} from Theorem 2.
inline double theorem2_bound(double mu, double lambda, double z, int rounds) {
  if (!(lambda > 0.0)) throw std::invalid_argument("theorem2_bound: lambda must be positive");
  if (rounds < 1) throw std::invalid_argument("theorem2_bound: T must be at least 1");
  return std::pow(mu * z * z / (2.0 * lambda), 0.5 * rounds);
}

/// Non-smooth recovery bound (6 L / lambda) sqrt(sigma_1 z).
inline double theorem4_nonsmooth_bound(double lipschitz, double lambda, double sigma1, double z) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("theorem4_nonsmooth_bound: lambda must be positive");
  if (lipschitz < 0.0 || sigma1 < 0.0 || z < 0.0)
    throw std::invalid_argument("theorem4_nonsmooth_bound: inputs must be non-negative");
  return 6.0 * lipschitz / lambda * std::sqrt(sigma1 * z);
}

/// Empirical check of the concentration lemma behind Corollary 1: with m = 2k
/// adaptive Gaussian sketches, ||P_S-perp A^T||_2 <= c0 R_k(A) should hold in
/// all but a ~12 e^{-k} fraction of trials. Returns the success rate.
inline double lemma1_check(const Matrix& a, Index k, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("lemma1_check: need at least one trial");
  const Index m = 2 * k;
  if (m > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("lemma1_check: m = 2k exceeds min(n, d)");
  const double budget = kConcentrationConstant * spectral_tail_rk(a, k);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto op = adaptive_gaussian(a, m, seed + static_cast<std::uint64_t>(t));
    if (zf_surrogate(a, op.S) <= budget) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Sketch sizes sufficient for an (epsilon, eta)-guarantee on the relative
/// error, per decay regime. Order-level quantities: callers round up and read
/// them as scaling laws, not constants.
struct DimensionPrediction {
  DecayKind regime = DecayKind::FiniteRank;
  double m_adaptive = 0.0;
  double m_oblivious = 0.0;
  double m_leverage = 0.0;
  double ratio_oblivious = 0.0;  // m_O / m_A
  double ratio_leverage = 0.0;   // m_S / m_A
  double epsilon = 0.0, eta = 0.0, lambda = 0.0;
  Index d = 0;
  double regime_parameter = 0.0;  // rho, kappa, or beta
};

inline DimensionPrediction predict_dimensions(DecayKind regime, double epsilon, double eta,
                                              double lambda, Index d, double parameter) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("predict_dimensions: epsilon must lie in (0,1)");
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("predict_dimensions: eta must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("predict_dimensions: lambda must be positive");
  if (d < 1) throw std::invalid_argument("predict_dimensions: d must be at least 1");

  DimensionPrediction out;
  out.regime = regime;
  out.epsilon = epsilon;
  out.eta = eta;
  out.lambda = lambda;
  out.d = d;
  out.regime_parameter = parameter;

  const double oversample = std::log(12.0 / eta);
  switch (regime) {
    case DecayKind::FiniteRank: {
      if (parameter < 1.0)
        throw std::invalid_argument("predict_dimensions: rank must be at least 1");
      const double rho = parameter;
      out.m_adaptive = rho + 1.0 + oversample;
      out.m_oblivious = (rho + 1.0) / (epsilon * epsilon) * std::log(2.0 * rho / eta);
      out.m_leverage = (rho + 1.0) * std::log(4.0 * rho / eta);
      break;
    }
    case DecayKind::Exponential: {
      if (!(parameter > 0.0))
        throw std::invalid_argument("predict_dimensions: kappa must be positive");
      const double kappa = parameter;
      out.m_adaptive = std::log(1.0 / (lambda * epsilon)) / kappa + oversample;
      out.m_oblivious = std::log(1.0 / lambda) / (kappa * epsilon * epsilon) *
                        std::log(2.0 * static_cast<double>(d) / eta);
      out.m_leverage = std::log(1.0 / (lambda * epsilon)) / kappa * std::log(1.0 / eta);
      break;
    }
    case DecayKind::Polynomial: {
      if (!(parameter > 0.5))
        throw std::invalid_argument("predict_dimensions: beta must exceed 1/2");
      const double beta = parameter;
      const double base = std::pow(lambda, -0.5 / beta) * std::pow(epsilon, -1.0 / beta);
      // the leverage exponent 2 ^ beta/(beta-1) degenerates to 2 for beta <= 1
      const double exponent = beta > 1.0 ? std::min(2.0, beta / (beta - 1.0)) : 2.0;
      out.m_adaptive = base + oversample;
      out.m_oblivious = std::pow(lambda, -0.5 / beta) / (epsilon * epsilon) *
                        std::log(2.0 * static_cast<double>(d) / eta);
      out.m_leverage = std::pow(base, exponent) * std::log(1.0 / eta);
      break;
    }
    case DecayKind::Explicit:
      throw std::invalid_argument("predict_dimensions: no closed form for explicit spectra");
  }
  out.ratio_oblivious = out.m_oblivious / out.m_adaptive;
  out.ratio_leverage = out.m_leverage / out.m_adaptive;
  return out;
}

/// Everything Theorem 1 needs about one (A, S, mu, lambda, k) instance.
struct BoundReport {
  double zf = 0.0;
  double r_k = 0.0;
  Index k = 0;
  double c0 = kConcentrationConstant;
  double lambda_threshold = 0.0;          // 2 mu zf^2
  double predicted_relative_error = 0.0;  // sqrt(mu / 2 lambda) zf
  bool hypothesis_satisfied = false;
};

inline BoundReport bound_report(const Matrix& a, const SketchOperator& s, double mu,
                                double lambda, Index k) {
  if (!(lambda > 0.0)) throw std::invalid_argument("bound_report: lambda must be positive");
  BoundReport out;
  out.zf = zf_surrogate(a, s);
  out.r_k = spectral_tail_rk(a, k);
  out.k = k;
  out.lambda_threshold = 2.0 * mu * out.zf * out.zf;
  out.predicted_relative_error = std::sqrt(mu / (2.0 * lambda)) * out.zf;
  out.hypothesis_satisfied = lambda >= out.lambda_threshold;
  return out;
}

}  // namespace asketch
