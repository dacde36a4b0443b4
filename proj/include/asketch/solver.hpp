#pragma once

#include <asketch/objectives.hpp>
#include <asketch/sketch.hpp>

#include <chrono>
#include <memory>
#include <variant>

namespace asketch {

enum class Method { Gd, Newton, Sgd, Svrg, Subgradient };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Gd: return "gd";
    case Method::Newton: return "newton";
    case Method::Sgd: return "sgd";
    case Method::Svrg: return "svrg";
    case Method::Subgradient: return "subgradient";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "gd") return Method::Gd;
  if (s == "newton") return Method::Newton;
  if (s == "sgd") return Method::Sgd;
  if (s == "svrg") return Method::Svrg;
  if (s == "subgradient") return Method::Subgradient;
  throw std::invalid_argument("unknown method '" + s + "'");
}

struct SolverOptions {
  Method method = Method::Newton;
  double tol = 1e-10;       // on ||grad|| <= tol * (1 + ||solution||)
  int max_iter = 200;
  double step_size = 0.0;   // gd: 0 = auto 1/L; sgd/svrg: required; subgradient: c in c/sqrt(t)
  int batch = 128;
  int svrg_update_every = 400;
  int newton_damped_iters = 5;
  double newton_damped_step = 0.2;
  // strongly-convex subgradient schedule 2/(lambda (t+1)) with tail averaging;
  // the default c/sqrt(t) schedule cannot reach tight objective precision
  bool subgradient_averaging = false;
  std::uint64_t rng_seed = 0;
  Vector warm_start;  // empty = start at zero
  std::function<void(int iter, double objective, double grad_norm)> on_iteration;
};

struct SolveReport {
  Vector solution;
  Vector dual_certificate;  // gradient (or subgradient) of f at the fitted scores
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double wall_time_s = 0.0;
  double objective_value = 0.0;
  bool converged = false;
};

/// min_x f(A x) + (lambda/2) ||x||^2 over x in R^d.
struct PrimalProblem {
  Matrix A;
  std::variant<SmoothObjective, LipschitzObjective> objective;
  double lambda = 0.0;

  Index n() const { return A.rows(); }
  Index d() const { return A.cols(); }
  bool is_smooth() const { return std::holds_alternative<SmoothObjective>(objective); }
  const SmoothObjective& smooth() const { return std::get<SmoothObjective>(objective); }
  const LipschitzObjective& lipschitz() const { return std::get<LipschitzObjective>(objective); }

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("PrimalProblem: lambda must be positive");
    if (!is_finite(A)) throw std::invalid_argument("PrimalProblem: data matrix has non-finite entries");
    const Index dim = is_smooth() ? smooth().dim : lipschitz().dim;
    if (dim != n())
      throw std::invalid_argument("PrimalProblem: objective dimension " + std::to_string(dim) +
                                  " does not match n = " + std::to_string(n()));
  }
};

inline PrimalProblem make_primal(Matrix a, SmoothObjective f, double lambda) {
  PrimalProblem p{std::move(a), std::move(f), lambda};
  p.validate();
  return p;
}

inline PrimalProblem make_primal(Matrix a, LipschitzObjective f, double lambda) {
  PrimalProblem p{std::move(a), std::move(f), lambda};
  p.validate();
  return p;
}

namespace detail {

class StopWatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Largest singular value by power iteration on M^T M (used for step sizing).
inline double spectral_norm_estimate(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Rng rng(0x5eed);
  Vector v = gaussian_matrix(m.cols(), 1, rng).col(0);
  v.normalize();
  double prev = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vector w = m.transpose() * (m * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double est = std::sqrt(norm);
    if (std::abs(est - prev) <= 1e-12 * est) return est;
    prev = est;
  }
  return prev;
}

inline Vector start_point(const SolverOptions& opts, Index p) {
  if (opts.warm_start.size() == 0) return Vector::Zero(p);
  if (opts.warm_start.size() != p)
    throw std::invalid_argument("SolverOptions: warm start has wrong dimension");
  return opts.warm_start;
}

// Shared core: minimize f(M a + scores) + (lambda/2) ||a + reg||^2.
// `scores` and `reg` may be empty; Algorithm 2's inner problems use both.
inline SolveReport minimize_ridge_smooth(const Matrix& m, const SmoothObjective& f, double lambda,
                                         const SolverOptions& opts, const Vector& scores,
                                         const Vector& reg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("minimize_ridge: lambda must be positive");
  const Index p = m.cols();
  const bool has_scores = scores.size() != 0;
  const bool has_reg = reg.size() != 0;
  StopWatch watch;

  auto scores_at = [&](const Vector& a) -> Vector {
    Vector w = m * a;
    if (has_scores) w += scores;
    return w;
  };
  auto ridge_vec = [&](const Vector& a) -> Vector { return has_reg ? Vector(a + reg) : a; };
  auto objective_at = [&](const Vector& a, const Vector& w) {
    return f.value(w) + 0.5 * lambda * ridge_vec(a).squaredNorm();
  };

  Vector alpha = start_point(opts, p);
  SolveReport report;

  if (opts.method == Method::Newton || opts.method == Method::Gd) {
    double gd_step = opts.step_size;
    if (opts.method == Method::Gd && gd_step <= 0.0) {
      const double top = 1.01 * spectral_norm_estimate(m);
      gd_step = 1.0 / (f.mu * top * top + lambda);
    }
    int it = 0;
    for (; it <= opts.max_iter; ++it) {
      Vector w = scores_at(alpha);
      Vector grad_f = f.gradient(w);
      Vector g = m.transpose() * grad_f + lambda * ridge_vec(alpha);
      const double gnorm = g.norm();
      if (opts.on_iteration) opts.on_iteration(it, objective_at(alpha, w), gnorm);
      if (gnorm <= opts.tol * (1.0 + alpha.norm())) {
        report.converged = true;
        report.dual_certificate = std::move(grad_f);
        report.final_gradient_norm = gnorm;
        report.objective_value = objective_at(alpha, w);
        break;
      }
      if (it == opts.max_iter) {
        report.dual_certificate = std::move(grad_f);
        report.final_gradient_norm = gnorm;
        report.objective_value = objective_at(alpha, w);
        break;
      }
      if (opts.method == Method::Newton) {
        Vector h = f.hessian_diagonal(w);
        Matrix root = h.cwiseSqrt().asDiagonal() * m;
        Matrix hess = Matrix::Zero(p, p);
        hess.selfadjointView<Eigen::Lower>().rankUpdate(root.transpose());
        hess.diagonal().array() += lambda;
        Vector step = Eigen::LLT<Matrix, Eigen::Lower>(hess).solve(-g);
        const double eta = it < opts.newton_damped_iters ? opts.newton_damped_step : 1.0;
        alpha += eta * step;
      } else {
        alpha -= gd_step * g;
      }
    }
    report.iterations = it;
    report.solution = std::move(alpha);
    report.wall_time_s = watch.seconds();
    return report;
  }

  if (opts.method == Method::Sgd || opts.method == Method::Svrg) {
    if (!(opts.step_size > 0.0))
      throw std::invalid_argument("minimize_ridge: sgd/svrg need an explicit step size");
    if (!f.coordinate_slope)
      throw std::invalid_argument("minimize_ridge: objective lacks a per-coordinate slope");
    const Index n = m.rows();
    Rng rng(opts.rng_seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    const int batch = std::max(1, opts.batch);
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector snapshot, snapshot_grad;
    auto refresh_snapshot = [&]() {
      snapshot = alpha;
      snapshot_grad = m.transpose() * f.gradient(scores_at(snapshot));
    };

    int it = 0;
    for (; it < opts.max_iter; ++it) {
      if (opts.method == Method::Svrg && it % std::max(1, opts.svrg_update_every) == 0)
        refresh_snapshot();
      Vector g = Vector::Zero(p);
      for (int bi = 0; bi < batch; ++bi) {
        const Index i = pick(rng);
        const double si = m.row(i).dot(alpha) + (has_scores ? scores[i] : 0.0);
        double slope = f.coordinate_slope(si, i) * inv_n;
        if (opts.method == Method::Svrg) {
          const double ssnap = m.row(i).dot(snapshot) + (has_scores ? scores[i] : 0.0);
          slope -= f.coordinate_slope(ssnap, i) * inv_n;
        }
        g += (static_cast<double>(n) * slope / batch) * m.row(i).transpose();
      }
      if (opts.method == Method::Svrg) g += snapshot_grad;
      g += lambda * ridge_vec(alpha);
      alpha -= opts.step_size * g;
      if (opts.on_iteration)
        opts.on_iteration(it, objective_at(alpha, scores_at(alpha)), std::nan(""));
    }
    Vector w = scores_at(alpha);
    Vector grad_f = f.gradient(w);
    report.final_gradient_norm = (m.transpose() * grad_f + lambda * ridge_vec(alpha)).norm();
    report.converged = report.final_gradient_norm <= opts.tol * (1.0 + alpha.norm());
    report.objective_value = objective_at(alpha, w);
    report.dual_certificate = std::move(grad_f);
    report.iterations = it;
    report.solution = std::move(alpha);
    report.wall_time_s = watch.seconds();
    return report;
  }

  throw std::invalid_argument("minimize_ridge: unsupported method for a smooth objective");
}

// Subgradient descent on f(M a + scores) + (lambda/2) ||a + reg||^2 for any
// convex f given by value/subgradient closures. Returns the best objective
// iterate (or the tail average under the strongly-convex schedule, whichever
// evaluates lower).
inline SolveReport minimize_ridge_subgradient(
    const Matrix& m, const std::function<double(const Vector&)>& value,
    const std::function<Vector(const Vector&)>& subgrad, double lambda, const SolverOptions& opts,
    const Vector& scores, const Vector& reg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("minimize_ridge: lambda must be positive");
  const Index p = m.cols();
  const bool has_scores = scores.size() != 0;
  const bool has_reg = reg.size() != 0;
  StopWatch watch;

  auto scores_at = [&](const Vector& a) -> Vector {
    Vector w = m * a;
    if (has_scores) w += scores;
    return w;
  };
  auto ridge_vec = [&](const Vector& a) -> Vector { return has_reg ? Vector(a + reg) : a; };
  auto objective_at = [&](const Vector& a) { return value(scores_at(a)) + 0.5 * lambda * ridge_vec(a).squaredNorm(); };

  Vector alpha = start_point(opts, p);
  Vector average = alpha;
  Vector best = alpha;
  double best_value = objective_at(alpha);
  const double c = opts.step_size > 0.0 ? opts.step_size : 1.0;

  int it = 1;
  for (; it <= opts.max_iter; ++it) {
    Vector g = m.transpose() * subgrad(scores_at(alpha)) + lambda * ridge_vec(alpha);
    const double step = opts.subgradient_averaging ? 2.0 / (lambda * (it + 1))
                                                   : c / std::sqrt(static_cast<double>(it));
    alpha -= step * g;
    if (opts.subgradient_averaging) {
      const double theta = 2.0 / (it + 1);
      average = (1.0 - theta) * average + theta * alpha;
    } else {
      const double v = objective_at(alpha);
      if (v < best_value) {
        best_value = v;
        best = alpha;
      }
    }
    if (opts.on_iteration && it % 1024 == 0) opts.on_iteration(it, objective_at(alpha), std::nan(""));
  }
  if (opts.subgradient_averaging) {
    const double av = objective_at(average);
    if (av < best_value) {
      best_value = av;
      best = average;
    }
    const double lv = objective_at(alpha);
    if (lv < best_value) {
      best_value = lv;
      best = alpha;
    }
  }

  SolveReport report;
  Vector w = scores_at(best);
  report.dual_certificate = subgrad(w);
  report.final_gradient_norm = (m.transpose() * report.dual_certificate + lambda * ridge_vec(best)).norm();
  report.converged = report.final_gradient_norm <= opts.tol * (1.0 + best.norm());
  report.objective_value = best_value;
  report.iterations = it - 1;
  report.solution = std::move(best);
  report.wall_time_s = watch.seconds();
  return report;
}

// Newton in score space: find u with lambda u + K grad_f(u) = 0, K = A A^T.
// The primal solution is x = -(1/lambda) A^T grad_f(u); convergence is judged
// on the true primal KKT residual. Avoids ever forming a d x d system.
inline SolveReport solve_primal_scores_newton(const Matrix& a, const SmoothObjective& f,
                                              double lambda, const SolverOptions& opts,
                                              const Matrix* gram) {
  const Index n = a.rows();
  StopWatch watch;
  Matrix own_gram;
  if (gram == nullptr) {
    own_gram = Matrix::Zero(n, n);
    own_gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
    own_gram = own_gram.selfadjointView<Eigen::Lower>();
    gram = &own_gram;
  }
  const Matrix& k = *gram;

  SolveReport report;
  Vector u = Vector::Zero(n);
  int it = 0;
  for (; it <= opts.max_iter; ++it) {
    Vector grad_f = f.gradient(u);
    Vector x = (-1.0 / lambda) * (a.transpose() * grad_f);
    Vector w = a * x;
    Vector z = f.gradient(w);
    Vector residual = a.transpose() * z + lambda * x;
    const double rnorm = residual.norm();
    if (opts.on_iteration)
      opts.on_iteration(it, f.value(w) + 0.5 * lambda * x.squaredNorm(), rnorm);
    if (rnorm <= opts.tol * (1.0 + x.norm()) || it == opts.max_iter) {
      report.converged = rnorm <= opts.tol * (1.0 + x.norm());
      report.final_gradient_norm = rnorm;
      report.objective_value = f.value(w) + 0.5 * lambda * x.squaredNorm();
      report.dual_certificate = std::move(z);
      report.solution = std::move(x);
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

}  // namespace detail

/// Solves the ridge-regularized primal program. Smooth objectives accept all
/// methods; non-smooth ones require the subgradient method. With Newton and
/// d > n the solve runs in score space through the Gram matrix (optionally
/// supplied precomputed) and never forms a d x d system.
inline SolveReport solve_primal(const PrimalProblem& p, const SolverOptions& opts,
                                const Matrix* gram = nullptr) {
  p.validate();
  if (!p.is_smooth()) {
    if (opts.method != Method::Subgradient)
      throw std::invalid_argument("solve_primal: non-smooth objectives require the subgradient method");
    const auto& f = p.lipschitz();
    return detail::minimize_ridge_subgradient(p.A, f.value, f.subgradient, p.lambda, opts, {}, {});
  }
  const auto& f = p.smooth();
  if (opts.method == Method::Subgradient)
    return detail::minimize_ridge_subgradient(p.A, f.value, f.gradient, p.lambda, opts, {}, {});
  if (opts.method == Method::Newton && p.d() > p.n())
    return detail::solve_primal_scores_newton(p.A, f, p.lambda, opts, gram);
  return detail::minimize_ridge_smooth(p.A, f, p.lambda, opts, {}, {});
}

/// The rescaled sketched program of Algorithm 1: data A_{S,+} = A S R with
/// R = (S^T S)^{-1/2} (pseudo-inverse square root), so the low-dimensional
/// variable carries a plain ridge penalty.
struct SketchedProblem {
  std::shared_ptr<const PrimalProblem> parent;
  SketchOperator sketch;
  Matrix rescaler;       // R, symmetric p.s.d.
  Matrix rescaler_pinv;  // R^+ = (S^T S)^{1/2}, used for warm starts across m
  Matrix a_s_dagger;     // A S R, n x m

  Index m() const { return rescaler.rows(); }
};

inline SketchedProblem build_sketched(std::shared_ptr<const PrimalProblem> p, SketchOperator s) {
  if (!p) throw std::invalid_argument("build_sketched: null parent problem");
  p->validate();
  if (s.d() != p->d())
    throw std::invalid_argument("build_sketched: sketch has " + std::to_string(s.d()) +
                                " rows but A has " + std::to_string(p->d()) + " columns");
  const Index m = s.m();
  Matrix gram = Matrix::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(s.S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success)
    throw NumericalError("build_sketched: eigendecomposition of S^T S failed");
  const Vector& evals = es.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  const double thresh = rank_threshold(std::max(s.d(), m), m, top);
  Vector root = Vector::Zero(m), inv_root = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (evals[i] > thresh) {
      root[i] = std::sqrt(evals[i]);
      inv_root[i] = 1.0 / root[i];
    }
  }
  SketchedProblem sp;
  sp.rescaler = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
  sp.rescaler_pinv = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  sp.a_s_dagger = (p->A * s.S) * sp.rescaler;
  sp.sketch = std::move(s);
  sp.parent = std::move(p);
  return sp;
}

inline SketchedProblem build_sketched(const PrimalProblem& p, SketchOperator s) {
  return build_sketched(std::make_shared<PrimalProblem>(p), std::move(s));
}

inline SolveReport solve_sketched(const SketchedProblem& sp, const SolverOptions& opts) {
  const auto& p = *sp.parent;
  if (!p.is_smooth()) {
    if (opts.method != Method::Subgradient)
      throw std::invalid_argument("solve_sketched: non-smooth objectives require the subgradient method");
    const auto& f = p.lipschitz();
    return detail::minimize_ridge_subgradient(sp.a_s_dagger, f.value, f.subgradient, p.lambda,
                                              opts, {}, {});
  }
  const auto& f = p.smooth();
  if (opts.method == Method::Subgradient)
    return detail::minimize_ridge_subgradient(sp.a_s_dagger, f.value, f.gradient, p.lambda, opts,
                                              {}, {});
  return detail::minimize_ridge_smooth(sp.a_s_dagger, f, p.lambda, opts, {}, {});
}

/// Dual recovery: x~ = -(1/lambda) A^T grad_f(A_{S,+} alpha*), taken from the
/// report's fitted dual certificate.
inline Vector recover(const SketchedProblem& sp, const SolveReport& report) {
  return (-1.0 / sp.parent->lambda) * (sp.parent->A.transpose() * report.dual_certificate);
}

struct ConditionNumbers {
  double primal = 0.0;     // kappa
  double sketched = 0.0;   // kappa_S, the unscaled sketched program
  double rescaled = 0.0;   // kappa_dagger
};

/// Condition numbers of the primal, sketched, and rescaled sketched programs
/// for objectives with a constant Hessian diagonal (the quadratic family,
/// where the sup/inf over iterates collapse).
inline ConditionNumbers condition_numbers(const PrimalProblem& p, const SketchedProblem& sp) {
  p.validate();
  if (!p.is_smooth() || !p.smooth().constant_hessian)
    throw std::invalid_argument("condition_numbers: requires a constant-Hessian objective");
  if (sp.sketch.stilde.size() == 0)
    throw std::invalid_argument("condition_numbers: kappa_S needs an adaptive-family sketch");

  const Vector h = p.smooth().hessian_diagonal(Vector::Zero(p.n()));
  const double lambda = p.lambda;
  auto extremes = [](const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return std::pair<double, double>(std::max(es.eigenvalues().minCoeff(), 0.0),
                                     std::max(es.eigenvalues().maxCoeff(), 0.0));
  };

  Matrix root = h.cwiseSqrt().asDiagonal() * p.A;
  Matrix curvature = root.transpose() * root;  // A^T H A, d x d
  auto [lo, hi] = extremes(curvature);

  Matrix sa = sp.sketch.stilde.transpose() * p.A;  // m x d
  Matrix inner = curvature;
  inner.diagonal().array() += lambda;
  Matrix sketched = sa * inner * sa.transpose();
  auto [slo, shi] = extremes(sketched);

  Matrix root_dagger = h.cwiseSqrt().asDiagonal() * sp.a_s_dagger;
  Matrix curvature_dagger = root_dagger.transpose() * root_dagger;
  auto [dlo, dhi] = extremes(curvature_dagger);

  ConditionNumbers out;
  out.primal = (lambda + hi) / (lambda + lo);
  out.sketched = slo > 0.0 ? shi / slo : std::numeric_limits<double>::infinity();
  out.rescaled = (lambda + dhi) / (lambda + dlo);
  return out;
}

}  // namespace asketch
