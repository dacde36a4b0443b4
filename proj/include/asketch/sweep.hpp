#pragma once

#include <asketch/bounds.hpp>
#include <asketch/kernel.hpp>
#include <asketch/refine.hpp>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <thread>

namespace asketch {

namespace detail {

/// Per-trial seed stream: a splitmix64 step keeps trial streams far apart.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Worker count: ASKETCH_THREADS caps it, hardware concurrency is the default.
inline int thread_budget(int jobs) {
  int budget = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ASKETCH_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) budget = requested;
  }
  return std::max(1, std::min(budget, jobs));
}

template <typename Fn>
void parallel_for(int jobs, Fn&& fn) {
  const int workers = thread_budget(jobs);
  if (workers <= 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        fn(j);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline Vector gaussian_vector(Index n, Rng& rng) { return gaussian_matrix(n, 1, rng).col(0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep: relative error versus sketching dimension
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  // problem: either a generator profile or a matrix file
  Index n = 1000;
  Index d = 2000;
  SpectralProfile profile = SpectralProfile::exponential(0.1);  // scale 0 = sqrt(n)
  std::string matrix_path;
  std::string objective = "logistic";  // logistic | relu | quadratic
  double lambda = 1e-4;

  // sketch
  SketchKind sketch_kind = SketchKind::AdaptiveGaussian;
  std::vector<Index> m_grid;
  int power_q = 0;
  Index target_rank = 0;  // leverage sampling

  // solver for the sketched programs; the oracle always runs Newton
  SolverOptions solver;
  double oracle_tol = 1e-10;

  int trials = 10;
  std::uint64_t seed = 0;
  std::string output_dir;

  // per-m mean errors at or below this floor sit at solver precision and are
  // excluded from the decay fit
  double slope_floor = 1e-7;

  void validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be at least 1");
    if (m_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty m grid");
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
      if (m_grid[i] < 1) throw std::invalid_argument("ExperimentConfig: m must be positive");
      if (i > 0 && m_grid[i] <= m_grid[i - 1])
        throw std::invalid_argument("ExperimentConfig: m grid must be strictly increasing");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("ExperimentConfig: lambda must be positive");
    if (objective != "logistic" && objective != "relu" && objective != "quadratic")
      throw std::invalid_argument("ExperimentConfig: unknown objective '" + objective + "'");
  }
};

struct SweepResult {
  std::vector<Index> m_grid;
  Matrix errors;              // trials x |grid|; NaN marks flagged solves
  std::vector<int> flagged;   // per-m count of non-converged sketched solves
  std::vector<double> mean_error;
  std::vector<double> std_error;  // sample standard deviation over trials
  double slope = std::nan("");
  std::string slope_fit;  // "log-linear" or "log-log"
  int slope_points = 0;

  bool empty() const { return m_grid.empty() || errors.size() == 0; }
};

namespace detail {

struct SlopeFit {
  double slope = std::nan("");
  int points = 0;
};

/// Least squares of ln(mean error) against m (log-linear) or ln m (log-log),
/// skipping saturated points at or below the floor.
inline SlopeFit fit_decay_slope(const std::vector<Index>& grid, const std::vector<double>& mean,
                                bool log_x, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(mean[i]) || mean[i] <= floor) continue;
    const double x = static_cast<double>(grid[i]);
    xs.push_back(log_x ? std::log(x) : x);
    ys.push_back(std::log(mean[i]));
  }
  SlopeFit fit;
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double nn = static_cast<double>(xs.size());
  fit.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return fit;
}

inline SmoothObjective planted_objective(const std::string& name, const Matrix& a,
                                         const Vector& x_planted) {
  Vector scores = a * x_planted;
  if (name == "logistic") {
    Vector y(scores.size());
    for (Index i = 0; i < scores.size(); ++i) y[i] = scores[i] > 0.0 ? 1.0 : 0.0;
    return logistic_objective(y);
  }
  if (name == "relu") return relu_relaxation_objective(scores.cwiseMax(0.0));
  if (name == "quadratic") return quadratic_objective(scores);
  throw std::invalid_argument("unknown objective '" + name + "'");
}

/// One full-width draw whose column prefixes reproduce the per-m constructors
/// with the same seed.
inline SketchOperator full_width_sketch(const ExperimentConfig& config, const Matrix& a,
                                        const Vector* lev_scores, std::uint64_t seed) {
  const Index m_max = config.m_grid.back();
  switch (config.sketch_kind) {
    case SketchKind::AdaptiveGaussian:
      return adaptive_gaussian(a, m_max, seed);
    case SketchKind::ObliviousGaussian:
      return oblivious_gaussian(a.cols(), m_max, seed);
    case SketchKind::Power:
      return power_sketch(a, m_max, config.power_q, seed);
    case SketchKind::UniformColumns:
      return uniform_columns(a, m_max, seed);
    case SketchKind::LeverageScore: {
      SketchOperator op;
      op.kind = SketchKind::LeverageScore;
      Rng rng(seed);
      op.stilde = sampling_stilde(*lev_scores, m_max, rng);
      op.S = a.transpose() * op.stilde;
      op.target_rank = config.target_rank;
      op.seed = seed;
      return op;
    }
  }
  throw std::invalid_argument("unknown sketch kind");
}

inline SketchOperator prefix_sketch(const SketchOperator& full, Index m) {
  SketchOperator op;
  op.kind = full.kind;
  op.S = full.S.leftCols(m);
  if (full.stilde.size() != 0) op.stilde = full.stilde.leftCols(m);
  // the sampling rescaler D = (m p)^{-1/2} is width-dependent
  if (full.kind == SketchKind::LeverageScore && m != full.m()) {
    const double correction =
        std::sqrt(static_cast<double>(full.m()) / static_cast<double>(m));
    op.S *= correction;
    op.stilde *= correction;
  }
  op.power_q = full.power_q;
  op.target_rank = full.target_rank;
  op.seed = full.seed;
  return op;
}

}  // namespace detail

/// Relative-error sweep over the m grid, averaged over trials. The data
/// matrix is fixed across trials; the planted vector, labels, and sketches
/// are redrawn per trial from seeds derived off config.seed, so runs are
/// reproducible and trials can execute in parallel.
inline SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const Matrix a = config.matrix_path.empty()
                       ? generate_decay_matrix(
                             config.n, config.d,
                             [&] {
                               SpectralProfile p = config.profile;
                               if (p.scale <= 0.0)
                                 p.scale = std::sqrt(static_cast<double>(config.n));
                               return p;
                             }(),
                             detail::mix_seed(config.seed, 0))
                       : load_matrix(config.matrix_path);
  const Index n = a.rows(), d = a.cols();

  // shared read-only context for all trials
  std::optional<Matrix> gram;
  if (d > n) {
    Matrix k = Matrix::Zero(n, n);
    k.selfadjointView<Eigen::Lower>().rankUpdate(a);
    gram = k.selfadjointView<Eigen::Lower>();
  }
  std::optional<Vector> lev_scores;
  if (config.sketch_kind == SketchKind::LeverageScore)
    lev_scores = leverage_scores(a, config.target_rank);

  const auto grid = config.m_grid;
  SweepResult result;
  result.m_grid = grid;
  result.errors = Matrix::Constant(config.trials, static_cast<Index>(grid.size()),
                                   std::nan(""));
  std::vector<std::string> failures(static_cast<std::size_t>(config.trials));

  detail::parallel_for(config.trials, [&](int trial) {
    Rng rng(detail::mix_seed(config.seed, static_cast<std::uint64_t>(trial) + 1));
    Vector x_planted = detail::gaussian_vector(d, rng);
    SmoothObjective f = detail::planted_objective(config.objective, a, x_planted);
    PrimalProblem problem{a, f, config.lambda};

    SolverOptions oracle_opts;
    oracle_opts.method = Method::Newton;
    oracle_opts.tol = config.oracle_tol;
    oracle_opts.max_iter = 300;
    auto oracle = solve_primal(problem, oracle_opts, gram ? &*gram : nullptr);
    if (!oracle.converged) {
      failures[static_cast<std::size_t>(trial)] =
          "trial " + std::to_string(trial) + ": oracle solve stalled at residual " +
          std::to_string(oracle.final_gradient_norm) + " after " +
          std::to_string(oracle.iterations) + " iterations";
      return;
    }
    const Vector& xstar = oracle.solution;
    const double xnorm = std::max(xstar.norm(), 1e-300);

    const std::uint64_t sketch_seed =
        detail::mix_seed(config.seed, 0x5ce7c800ULL + static_cast<std::uint64_t>(trial));
    SketchOperator full =
        detail::full_width_sketch(config, a, lev_scores ? &*lev_scores : nullptr, sketch_seed);

    auto parent = std::make_shared<const PrimalProblem>(problem);
    Vector carried;  // previous solution in original sketch coordinates
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      auto sp = build_sketched(parent, detail::prefix_sketch(full, grid[gi]));
      SolverOptions opts = config.solver;
      if (carried.size() != 0) {
        Vector extended = Vector::Zero(grid[gi]);
        extended.head(carried.size()) = carried;
        opts.warm_start = sp.rescaler_pinv * extended;
      }
      auto report = solve_sketched(sp, opts);
      if (report.converged) {
        Vector recovered = recover(sp, report);
        result.errors(trial, static_cast<Index>(gi)) = (recovered - xstar).norm() / xnorm;
      }
      carried = sp.rescaler * report.solution;
    }
  });

  for (const auto& failure : failures)
    if (!failure.empty()) throw NumericalError("run_sweep: " + failure);

  const Index cols = result.errors.cols();
  result.flagged.assign(static_cast<std::size_t>(cols), 0);
  result.mean_error.assign(static_cast<std::size_t>(cols), std::nan(""));
  result.std_error.assign(static_cast<std::size_t>(cols), std::nan(""));
  for (Index j = 0; j < cols; ++j) {
    double sum = 0;
    int count = 0;
    for (Index t = 0; t < result.errors.rows(); ++t) {
      const double e = result.errors(t, j);
      if (std::isfinite(e)) {
        sum += e;
        ++count;
      } else {
        ++result.flagged[static_cast<std::size_t>(j)];
      }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    double var = 0;
    for (Index t = 0; t < result.errors.rows(); ++t) {
      const double e = result.errors(t, j);
      if (std::isfinite(e)) var += (e - mean) * (e - mean);
    }
    result.mean_error[static_cast<std::size_t>(j)] = mean;
    result.std_error[static_cast<std::size_t>(j)] =
        count > 1 ? std::sqrt(var / (count - 1)) : 0.0;
  }

  const bool exponential = config.profile.kind == DecayKind::Exponential &&
                           config.matrix_path.empty();
  auto fit = detail::fit_decay_slope(grid, result.mean_error, !exponential, config.slope_floor);
  result.slope = fit.slope;
  result.slope_points = fit.points;
  result.slope_fit = exponential ? "log-linear" : "log-log";
  return result;
}

// ---------------------------------------------------------------------------
// Baseline comparison: sketched classifiers on random-feature data
// ---------------------------------------------------------------------------

struct CompareConfig {
  Index n_train = 1000;
  Index n_test = 1000;
  Index input_dim = 10;
  Index feature_dim = 1000;  // random Fourier features
  double gamma = 0.05;
  double class_separation = 3.0;
  // 0 = two plain blobs; otherwise each class is a mixture of this many
  // Gaussian clusters, which raises the task's effective dimension
  Index clusters_per_class = 0;
  double cluster_spread = 2.5;
  double cluster_radius = 0.6;
  double lambda = 1e-4;
  std::vector<Index> m_grid;
  int trials = 3;
  std::uint64_t seed = 0;
  SolverOptions solver;
  double oracle_tol = 1e-9;

  void validate() const {
    if (trials < 1 || m_grid.empty())
      throw std::invalid_argument("CompareConfig: need trials >= 1 and a non-empty m grid");
    for (std::size_t i = 1; i < m_grid.size(); ++i)
      if (m_grid[i] <= m_grid[i - 1])
        throw std::invalid_argument("CompareConfig: m grid must be strictly increasing");
    if (!(lambda > 0.0)) throw std::invalid_argument("CompareConfig: lambda must be positive");
  }
};

struct CompareRow {
  SketchKind method;
  Index m = 0;
  int trial = 0;
  double test_error = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;            // |methods| x |grid| x trials
  std::vector<double> primal_test_error;   // per trial
  std::vector<SketchKind> methods;
};

namespace detail {

struct LabeledData {
  Matrix features_train, features_test;
  Vector y_train, y_test;
};

/// Synthetic binary classification mapped through a trial-specific random
/// Fourier feature basis. Default: two Gaussian blobs separated along a
/// random direction. With clusters_per_class > 0, each class is a mixture of
/// small Gaussian clusters instead.
inline LabeledData synthetic_classification(const CompareConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const Index total = config.n_train + config.n_test;
  Matrix x(total, config.input_dim);
  Vector y(total);
  if (config.clusters_per_class > 0) {
    const Index groups = 2 * config.clusters_per_class;
    Matrix centers = config.cluster_spread * gaussian_matrix(groups, config.input_dim, rng);
    std::uniform_int_distribution<Index> pick(0, groups - 1);
    for (Index i = 0; i < total; ++i) {
      const Index g = pick(rng);
      x.row(i) = centers.row(g) +
                 config.cluster_radius * gaussian_vector(config.input_dim, rng).transpose();
      y[i] = (g % 2 == 0) ? 1.0 : 0.0;
    }
  } else {
    Vector direction = gaussian_vector(config.input_dim, rng).normalized();
    for (Index i = 0; i < total; ++i) {
      const double cls = (i % 2 == 0) ? 1.0 : 0.0;
      Vector point = gaussian_vector(config.input_dim, rng) +
                     (cls > 0.5 ? 0.5 : -0.5) * config.class_separation * direction;
      x.row(i) = point.transpose();
      y[i] = cls;
    }
  }
  auto map = rff_map(config.input_dim, config.feature_dim, config.gamma,
                     mix_seed(seed, 0xfea7));
  LabeledData data;
  data.features_train = rff_apply(map, x.topRows(config.n_train));
  data.features_test = rff_apply(map, x.bottomRows(config.n_test));
  data.y_train = y.head(config.n_train);
  data.y_test = y.tail(config.n_test);
  return data;
}

inline double classification_error(const Matrix& features, const Vector& y, const Vector& x) {
  Vector scores = features * x;
  Index wrong = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] > 0.0 ? 1.0 : 0.0;
    if (predicted != y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(scores.size());
}

}  // namespace detail

/// Test-error table over {adaptive, oblivious, uniform} x m on synthetic
/// random-feature classification, against the full primal classifier.
inline CompareResult run_baseline_comparison(const CompareConfig& config) {
  config.validate();
  CompareResult result;
  result.methods = {SketchKind::AdaptiveGaussian, SketchKind::ObliviousGaussian,
                    SketchKind::UniformColumns};
  result.primal_test_error.assign(static_cast<std::size_t>(config.trials), std::nan(""));
  const std::size_t per_trial = result.methods.size() * config.m_grid.size();
  result.rows.resize(static_cast<std::size_t>(config.trials) * per_trial);

  detail::parallel_for(config.trials, [&](int trial) {
    auto data = detail::synthetic_classification(
        config, detail::mix_seed(config.seed, static_cast<std::uint64_t>(trial) + 1));
    auto f = logistic_objective(data.y_train);
    PrimalProblem problem{data.features_train, f, config.lambda};

    SolverOptions oracle_opts;
    oracle_opts.method = Method::Newton;
    oracle_opts.tol = config.oracle_tol;
    oracle_opts.max_iter = 300;
    auto primal = solve_primal(problem, oracle_opts);
    if (!primal.converged)
      throw NumericalError("run_baseline_comparison: primal solve did not converge in trial " +
                           std::to_string(trial));
    result.primal_test_error[static_cast<std::size_t>(trial)] =
        detail::classification_error(data.features_test, data.y_test, primal.solution);

    auto parent = std::make_shared<const PrimalProblem>(problem);
    std::size_t row = static_cast<std::size_t>(trial) * per_trial;
    for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
      const SketchKind kind = result.methods[mi];
      const std::uint64_t sketch_seed =
          detail::mix_seed(config.seed, 0xc0ffee00ULL + static_cast<std::uint64_t>(trial) * 8 +
                                            static_cast<std::uint64_t>(mi));
      for (Index m : config.m_grid) {
        SketchOperator op;
        switch (kind) {
          case SketchKind::AdaptiveGaussian:
            op = adaptive_gaussian(data.features_train, m, sketch_seed);
            break;
          case SketchKind::ObliviousGaussian:
            op = oblivious_gaussian(config.feature_dim, m, sketch_seed);
            break;
          default:
            op = uniform_columns(data.features_train, m, sketch_seed);
            break;
        }
        auto sp = build_sketched(parent, std::move(op));
        auto report = solve_sketched(sp, config.solver);
        Vector recovered = recover(sp, report);
        result.rows[row++] = CompareRow{
            kind, m, trial,
            detail::classification_error(data.features_test, data.y_test, recovered)};
      }
    }
  });
  return result;
}

}  // namespace asketch
