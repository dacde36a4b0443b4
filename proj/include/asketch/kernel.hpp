#pragma once

#include <asketch/solver.hpp>

#include <numbers>

namespace asketch {

struct KernelMatrix {
  Matrix K;

  Index n() const { return K.rows(); }
};

/// Gaussian kernel K_ij = exp(-gamma ||x_i - x_j||^2) over the rows of X.
inline KernelMatrix gaussian_kernel(const Matrix& x, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gaussian_kernel: gamma must be positive");
  Vector sq = x.rowwise().squaredNorm();
  Matrix k = -2.0 * (x * x.transpose());
  k.colwise() += sq;
  k.rowwise() += sq.transpose();
  k = ((-gamma) * k.cwiseMax(0.0).array()).exp().matrix();
  k.diagonal().setOnes();
  return KernelMatrix{0.5 * (k + k.transpose())};
}

/// Random Fourier feature map phi(x) = sqrt(2/D) cos(W x + b) whose inner
/// products approximate the Gaussian kernel with bandwidth gamma.
struct RffMap {
  Matrix frequencies;  // D x d_in, rows i.i.d. N(0, 2*gamma*I)
  Vector phases;       // D, uniform on [0, 2*pi)
  double gamma = 0.0;
  Index dimension = 0;
};

inline RffMap rff_map(Index d_in, Index dimension, double gamma, std::uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("rff_map: dimension must be at least 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("rff_map: gamma must be positive");
  Rng rng(seed);
  RffMap map;
  map.frequencies = std::sqrt(2.0 * gamma) * gaussian_matrix(dimension, d_in, rng);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  map.phases.resize(dimension);
  for (Index i = 0; i < dimension; ++i) map.phases[i] = unif(rng);
  map.gamma = gamma;
  map.dimension = dimension;
  return map;
}

inline Matrix rff_apply(const RffMap& map, const Matrix& x) {
  Matrix features = x * map.frequencies.transpose();  // n x D
  features.rowwise() += map.phases.transpose();
  features = features.array().cos();
  features *= std::sqrt(2.0 / static_cast<double>(map.dimension));
  return features;
}

inline Matrix rff_features(const Matrix& x, Index dimension, double gamma, std::uint64_t seed) {
  return rff_apply(rff_map(x.cols(), dimension, gamma, seed), x);
}

namespace detail {

inline void require_symmetric(const Matrix& k, const char* who) {
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  if (k.rows() != k.cols() || (k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": kernel matrix must be symmetric");
}

}  // namespace detail

/// Symmetric p.s.d. square root with negative eigenvalues clamped to zero.
/// Rejects matrices that are indefinite beyond round-off.
inline Matrix kernel_sqrt(const KernelMatrix& kernel) {
  detail::require_symmetric(kernel.K, "kernel_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(kernel.K);
  const Vector& evals = es.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  if (evals.minCoeff() < -1e-8 * std::max(top, 1.0))
    throw std::invalid_argument("kernel_sqrt: matrix is indefinite beyond tolerance");
  Vector root = evals.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Z for Theorem-3 style bounds: ||P-perp_{K^{1/2} S~} K^{1/2}||_2.
inline double kernel_zf(const KernelMatrix& kernel, const Matrix& stilde) {
  Matrix half = kernel_sqrt(kernel);
  Matrix sk = half * stilde;
  auto f = svd(sk);
  const Index r = numerical_rank(f.singulars, sk.rows(), sk.cols());
  if (r == 0) return spectral_norm(half);
  Matrix basis = f.left.leftCols(r);
  return spectral_norm(half - basis * (basis.transpose() * half));
}

struct KernelSketchedSolution {
  Vector alpha;    // minimizer of the sketched kernel program, K S~ alpha = fitted scores
  Vector w_tilde;  // recovered kernel weights, w~ = -(1/lambda) grad_f(K S~ alpha)
  SolveReport report;
};

/// Sketched kernelized program min_a f(K S~ a) + (lambda/2) a^T S~^T K S~ a,
/// solved through the rescaled formulation with R = (S~^T K S~)^{-1/2}.
/// The adaptive feature-space sketch S = A^T S~ with K = A A^T solves the
/// identical m-dimensional program, so x~ = A^T w~ holds.
inline KernelSketchedSolution solve_kernel_sketched_with(const KernelMatrix& kernel,
                                                         const SmoothObjective& f, double lambda,
                                                         const Matrix& stilde,
                                                         const SolverOptions& opts) {
  detail::require_symmetric(kernel.K, "solve_kernel_sketched");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_kernel_sketched: lambda must be positive");
  if (stilde.rows() != kernel.n())
    throw std::invalid_argument("solve_kernel_sketched: S~ must have n rows");
  const Index n = kernel.n(), m = stilde.cols();
  if (f.dim != n) throw std::invalid_argument("solve_kernel_sketched: objective dimension mismatch");

  // exact p.s.d. check at desk scale; larger matrices are vetted through the
  // sketched Gram below
  if (n <= 512) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(kernel.K, Eigen::EigenvaluesOnly);
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(top, 1.0))
      throw std::invalid_argument("solve_kernel_sketched: kernel is indefinite beyond tolerance");
  }

  Matrix ks = kernel.K * stilde;        // n x m
  Matrix gram = stilde.transpose() * ks;  // S~^T K S~
  gram = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Vector& evals = es.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  if (evals.minCoeff() < -1e-8 * std::max(top, 1.0))
    throw std::invalid_argument("solve_kernel_sketched: kernel is indefinite beyond tolerance");
  const double thresh = rank_threshold(n, m, top);
  Vector inv_root = Vector::Zero(m);
  for (Index i = 0; i < m; ++i)
    if (evals[i] > thresh) inv_root[i] = 1.0 / std::sqrt(evals[i]);
  Matrix rescaler = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();

  Matrix rescaled = ks * rescaler;  // K S~ R, the kernel analogue of A_{S,+}
  auto report = detail::minimize_ridge_smooth(rescaled, f, lambda, opts, {}, {});

  KernelSketchedSolution out;
  out.alpha = rescaler * report.solution;
  out.w_tilde = (-1.0 / lambda) * report.dual_certificate;
  out.report = std::move(report);
  return out;
}

inline KernelSketchedSolution solve_kernel_sketched(const KernelMatrix& kernel,
                                                    const SmoothObjective& f, double lambda,
                                                    Index m, std::uint64_t seed,
                                                    const SolverOptions& opts) {
  if (m < 1) throw std::invalid_argument("solve_kernel_sketched: m must be at least 1");
  Rng rng(seed);
  return solve_kernel_sketched_with(kernel, f, lambda, gaussian_matrix(kernel.n(), m, rng), opts);
}

/// Representer-theorem primal min_w f(K w) + (lambda/2) w^T K w, solved by
/// Newton on the score equation lambda u + K grad_f(u) = 0 and w = -grad_f(u)
/// / lambda. Solutions are reported up to Ker(K).
inline SolveReport solve_kernel_primal(const KernelMatrix& kernel, const SmoothObjective& f,
                                       double lambda, const SolverOptions& opts) {
  detail::require_symmetric(kernel.K, "solve_kernel_primal");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_kernel_primal: lambda must be positive");
  if (opts.method != Method::Newton)
    throw std::invalid_argument("solve_kernel_primal: only the newton method is supported");
  const Matrix& k = kernel.K;
  const Index n = kernel.n();
  if (f.dim != n) throw std::invalid_argument("solve_kernel_primal: objective dimension mismatch");
  detail::StopWatch watch;

  SolveReport report;
  Vector u = Vector::Zero(n);
  int it = 0;
  for (; it <= opts.max_iter; ++it) {
    Vector grad_f = f.gradient(u);
    Vector w = (-1.0 / lambda) * grad_f;
    Vector scores = k * w;
    Vector z = f.gradient(scores);
    Vector residual = k * z + lambda * scores;  // gradient of the kernel program at w
    const double rnorm = residual.norm();
    if (opts.on_iteration)
      opts.on_iteration(it, f.value(scores) + 0.5 * lambda * w.dot(scores), rnorm);
    if (rnorm <= opts.tol * (1.0 + w.norm()) || it == opts.max_iter) {
      report.converged = rnorm <= opts.tol * (1.0 + w.norm());
      report.final_gradient_norm = rnorm;
      report.objective_value = f.value(scores) + 0.5 * lambda * w.dot(scores);
      report.dual_certificate = std::move(z);
      report.solution = std::move(w);
      break;
    }
    Vector h = f.hessian_diagonal(u);
    Matrix jac = k * h.asDiagonal();
    jac.diagonal().array() += lambda;
    Vector step = Eigen::PartialPivLU<Matrix>(jac).solve(-(lambda * u + k * grad_f));
    const double eta = it < opts.newton_damped_iters ? opts.newton_damped_step : 1.0;
    u += eta * step;
  }
  report.iterations = it;
  report.wall_time_s = watch.seconds();
  return report;
}

}  // namespace asketch
