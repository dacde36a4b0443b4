#pragma once

#include <asketch/solver.hpp>

namespace asketch {

struct RefineRecord {
  int t = 0;
  double objective = 0.0;        // primal objective at the iterate
  double error_to_oracle = 0.0;  // ||x(t) - x*||, NaN when no oracle is given
  double step_norm = 0.0;        // ||x(t) - x(t-1)||
  bool inner_converged = false;
};

struct RefineReport {
  Vector solution;  // x(T)
  std::vector<RefineRecord> history;
  int iterations = 0;
  bool converged = true;  // every inner solve met its tolerance
  double wall_time_s = 0.0;
};

/// Inner-solver defaults for iterative refinement: Newton to 1e-12 so the
/// geometric decay of the outer loop is not polluted by inner error.
inline SolverOptions refine_options() {
  SolverOptions o;
  o.method = Method::Newton;
  o.tol = 1e-12;
  o.newton_damped_iters = 0;
  return o;
}

/// Iterative adaptive sketching: the sketch and A_{S,+} are built once (they
/// live in `sp`); each round re-centers the sketched program at the current
/// iterate and applies the dual recovery map.
///
///   a(t) = A x(t-1),  b(t) = (S^T S)^{-1/2} S^T x(t-1)
///   alpha(t) = argmin f(A_{S,+} alpha + a(t)) + (lambda/2) ||alpha + b(t)||^2
///   x(t) = -(1/lambda) A^T grad_f(A_{S,+} alpha(t) + a(t))
inline RefineReport iterative_solve(const SketchedProblem& sp, int rounds,
                                    const SolverOptions& opts, const Vector* oracle = nullptr) {
  if (rounds < 1) throw std::invalid_argument("iterative_solve: need at least one round");
  const auto& p = *sp.parent;
  if (!p.is_smooth())
    throw std::invalid_argument("iterative_solve: requires a smooth objective");
  const auto& f = p.smooth();
  const double lambda = p.lambda;
  detail::StopWatch watch;

  RefineReport out;
  Vector iterate = Vector::Zero(p.d());
  SolverOptions inner = opts;
  for (int t = 1; t <= rounds; ++t) {
    Vector scores = p.A * iterate;                            // a(t), recomputed each round
    Vector reg = sp.rescaler * (sp.sketch.S.transpose() * iterate);  // b(t)
    auto report = detail::minimize_ridge_smooth(sp.a_s_dagger, f, lambda, inner, scores, reg);
    Vector next = (-1.0 / lambda) * (p.A.transpose() * report.dual_certificate);

    RefineRecord rec;
    rec.t = t;
    rec.inner_converged = report.converged;
    rec.step_norm = (next - iterate).norm();
    rec.error_to_oracle = oracle ? (next - *oracle).norm() : std::nan("");
    rec.objective = f.value(p.A * next) + 0.5 * lambda * next.squaredNorm();
    out.history.push_back(rec);
    out.converged = out.converged && report.converged;
    inner.warm_start = report.solution;

    iterate = std::move(next);
    out.iterations = t;
    if (rec.step_norm <= 1e-14 * (1.0 + iterate.norm())) break;
  }
  out.solution = std::move(iterate);
  out.wall_time_s = watch.seconds();
  return out;
}

/// Remark-2 variant: run the iterative scheme on top of a power-method sketch
/// S = (A^T A)^q A^T S~. q = 0 reduces to plain adaptive Gaussian refinement.
inline RefineReport refine_with_power(std::shared_ptr<const PrimalProblem> p, Index m, int q,
                                      int rounds, std::uint64_t seed, const SolverOptions& opts,
                                      const Vector* oracle = nullptr) {
  if (!p) throw std::invalid_argument("refine_with_power: null problem");
  auto sketch = power_sketch(p->A, m, q, seed);
  auto sp = build_sketched(std::move(p), std::move(sketch));
  return iterative_solve(sp, rounds, opts, oracle);
}

}  // namespace asketch
