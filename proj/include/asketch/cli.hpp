#pragma once

#include <asketch/asketch.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

namespace asketch::cli {

namespace detail_cli {

inline Vector load_vector(const std::string& path) {
  Matrix m = load_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::invalid_argument("expected a vector in " + path + ", got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline MatrixFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary;
}

inline std::vector<Index> parse_grid(const std::string& spec) {
  std::vector<Index> grid;
  std::size_t at = 0;
  while (at < spec.size()) {
    std::size_t next = spec.find(',', at);
    if (next == std::string::npos) next = spec.size();
    grid.push_back(static_cast<Index>(std::stoll(spec.substr(at, next - at))));
    at = next + 1;
  }
  return grid;
}

inline SpectralProfile profile_from(const std::string& kind, Index rank, double kappa,
                                    double beta, double scale) {
  if (kind == "rank") return SpectralProfile::finite_rank(rank, scale > 0 ? scale : 1.0);
  if (kind == "exp") return SpectralProfile::exponential(kappa, scale);
  if (kind == "poly") return SpectralProfile::polynomial(beta, scale);
  throw std::invalid_argument("unknown profile '" + kind + "' (expected rank|exp|poly)");
}

inline SketchKind sketch_from(const std::string& name) {
  if (name == "adaptive") return SketchKind::AdaptiveGaussian;
  if (name == "oblivious") return SketchKind::ObliviousGaussian;
  if (name == "leverage") return SketchKind::LeverageScore;
  if (name == "uniform") return SketchKind::UniformColumns;
  if (name == "power") return SketchKind::Power;
  throw std::invalid_argument("unknown sketch '" + name + "'");
}

inline SketchOperator make_sketch(const std::string& name, const Matrix& a, Index m, int q,
                                  Index target_rank, std::uint64_t seed) {
  switch (sketch_from(name)) {
    case SketchKind::AdaptiveGaussian: return adaptive_gaussian(a, m, seed);
    case SketchKind::ObliviousGaussian: return oblivious_gaussian(a.cols(), m, seed);
    case SketchKind::LeverageScore: return leverage_score_sampling(a, m, target_rank, seed);
    case SketchKind::UniformColumns: return uniform_columns(a, m, seed);
    case SketchKind::Power: return power_sketch(a, m, q, seed);
  }
  throw std::invalid_argument("unknown sketch '" + name + "'");
}

struct ObjectiveSpec {
  std::string name = "quadratic";
  std::string labels_path;

  bool is_smooth() const { return name != "absdev"; }
  SmoothObjective smooth() const {
    Vector y = load_vector(labels_path);
    if (name == "logistic") return logistic_objective(y);
    if (name == "relu") return relu_relaxation_objective(y);
    if (name == "quadratic") return quadratic_objective(y);
    throw std::invalid_argument("unknown objective '" + name + "'");
  }
  LipschitzObjective lipschitz() const {
    if (name != "absdev") throw std::invalid_argument("unknown objective '" + name + "'");
    return absolute_deviation_objective(load_vector(labels_path));
  }
  PrimalProblem problem(Matrix a, double lambda) const {
    return is_smooth() ? make_primal(std::move(a), smooth(), lambda)
                       : make_primal(std::move(a), lipschitz(), lambda);
  }
};

inline void write_solve_report(const SolveReport& report, const std::string& solution_path,
                               const std::filesystem::path& path) {
  nlohmann::json j;
  j["solution_path"] = solution_path;
  j["iterations"] = report.iterations;
  j["grad_norm"] = report.final_gradient_norm;
  j["objective"] = report.objective_value;
  j["wall_time_s"] = report.wall_time_s;
  j["converged"] = report.converged;
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline std::string json_to_flag_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return detail::fmt(v.get<double>());
  if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!joined.empty()) joined += ',';
      joined += json_to_flag_value(item);
    }
    return joined;
  }
  throw std::invalid_argument("config values must be scalars or arrays");
}

/// Config-file support: JSON keys become flag defaults, explicit flags win.
/// Implemented by injecting "--key=value" tokens ahead of the user's own
/// arguments under a take-last option policy.
inline std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw std::invalid_argument("--config needs a path");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty()) return args;
  if (args.empty())
    throw std::invalid_argument("--config requires a subcommand on the command line");

  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open config file " + config_path);
  nlohmann::json config = nlohmann::json::parse(in, nullptr, true, true);
  if (!config.is_object()) throw std::invalid_argument("config file must hold a JSON object");

  std::vector<std::string> injected;
  injected.push_back(args.front());  // subcommand first
  for (const auto& [key, value] : config.items())
    injected.push_back("--" + key + "=" + json_to_flag_value(value));
  injected.insert(injected.end(), args.begin() + 1, args.end());
  return injected;
}

}  // namespace detail_cli

/// Builds and runs the command-line interface. Exit codes: 0 on success,
/// 1 on parameter/parse errors, 2 when a solve fails to converge.
inline int run(std::vector<std::string> args) {
  using detail_cli::ObjectiveSpec;
  int exit_code = 0;

  CLI::App app{"convex solvers in adaptive random subspaces"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // --- gen -----------------------------------------------------------------
  struct {
    Index n = 1000, d = 2000;
    std::string profile = "exp";
    Index rank = 10;
    double kappa = 0.1, beta = 1.0, scale = 0.0;
    std::uint64_t seed = 0;
    std::string output = "a.askm";
  } gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic decay matrix");
  gen_cmd->add_option("--n", gen.n);
  gen_cmd->add_option("--d", gen.d);
  gen_cmd->add_option("--profile", gen.profile, "rank|exp|poly");
  gen_cmd->add_option("--rank", gen.rank);
  gen_cmd->add_option("--kappa", gen.kappa);
  gen_cmd->add_option("--beta", gen.beta);
  gen_cmd->add_option("--scale", gen.scale, "0 = sqrt(n)");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--output", gen.output);
  gen_cmd->callback([&] {
    const double scale = gen.scale > 0 ? gen.scale : std::sqrt(static_cast<double>(gen.n));
    auto profile = detail_cli::profile_from(gen.profile, gen.rank, gen.kappa, gen.beta, scale);
    Matrix a = generate_decay_matrix(gen.n, gen.d, profile, gen.seed);
    save_matrix(a, gen.output, detail_cli::format_for(gen.output));
    std::cout << gen.output << '\n';
  });

  // --- shared solver flags ---------------------------------------------------
  struct SolveArgs {
    std::string input, output = "solution.askm", report = "report.json";
    ObjectiveSpec objective;
    double lambda = 1e-4;
    std::string method = "newton";
    double tol = 1e-10;
    int max_iter = 200;
    double step = 0.0;
    int batch = 128;
    int svrg_every = 400;
    std::uint64_t solver_seed = 0;
    bool averaging = false;

    SolverOptions options() const {
      SolverOptions o;
      o.method = method_from_string(method);
      o.tol = tol;
      o.max_iter = max_iter;
      o.step_size = step;
      o.batch = batch;
      o.svrg_update_every = svrg_every;
      o.rng_seed = solver_seed;
      o.subgradient_averaging = averaging;
      return o;
    }
  };
  auto add_solver_flags = [](CLI::App* cmd, SolveArgs& s) {
    cmd->add_option("--input", s.input)->required();
    cmd->add_option("--labels", s.objective.labels_path)->required();
    cmd->add_option("--objective", s.objective.name, "logistic|relu|quadratic|absdev");
    cmd->add_option("--lambda", s.lambda);
    cmd->add_option("--method", s.method, "gd|newton|sgd|svrg|subgradient");
    cmd->add_option("--tol", s.tol);
    cmd->add_option("--max-iter", s.max_iter);
    cmd->add_option("--step", s.step);
    cmd->add_option("--batch", s.batch);
    cmd->add_option("--svrg-every", s.svrg_every);
    cmd->add_option("--solver-seed", s.solver_seed);
    cmd->add_flag("--subgradient-averaging", s.averaging);
    cmd->add_option("--output", s.output);
    cmd->add_option("--report", s.report);
  };

  // --- solve -----------------------------------------------------------------
  auto solve_args = std::make_shared<SolveArgs>();
  auto* solve_cmd = app.add_subcommand("solve", "solve the ridge-regularized primal program");
  add_solver_flags(solve_cmd, *solve_args);
  solve_cmd->callback([&, solve_args] {
    auto problem = solve_args->objective.problem(load_matrix(solve_args->input),
                                                 solve_args->lambda);
    auto report = solve_primal(problem, solve_args->options());
    save_matrix(report.solution, solve_args->output, detail_cli::format_for(solve_args->output));
    detail_cli::write_solve_report(report, solve_args->output, solve_args->report);
    std::cout << solve_args->report << '\n';
    if (!report.converged) exit_code = 2;
  });

  // --- sketch flags shared by sketch-solve / iterate --------------------------
  struct SketchArgs {
    std::string kind = "adaptive";
    Index m = 64;
    int q = 0;
    Index target_rank = 0;
    std::uint64_t seed = 0;
  };
  auto add_sketch_flags = [](CLI::App* cmd, SketchArgs& s) {
    cmd->add_option("--sketch", s.kind, "adaptive|oblivious|leverage|uniform|power");
    cmd->add_option("--m", s.m);
    cmd->add_option("--q", s.q);
    cmd->add_option("--target-rank", s.target_rank);
    cmd->add_option("--seed", s.seed);
  };

  // --- sketch-solve ------------------------------------------------------------
  auto sk_args = std::make_shared<SolveArgs>();
  auto sk_sketch = std::make_shared<SketchArgs>();
  auto sk_bounds = std::make_shared<std::string>();
  auto* sk_cmd = app.add_subcommand("sketch-solve",
                                    "solve the rescaled sketched program and recover x~");
  add_solver_flags(sk_cmd, *sk_args);
  add_sketch_flags(sk_cmd, *sk_sketch);
  sk_cmd->add_option("--bound-report", *sk_bounds,
                     "emit the theorem-1 quantities (zf, R_k, thresholds) as JSON");
  sk_cmd->callback([&, sk_args, sk_sketch, sk_bounds] {
    Matrix a = load_matrix(sk_args->input);
    auto parent = std::make_shared<const PrimalProblem>(
        sk_args->objective.problem(a, sk_args->lambda));
    auto sp = build_sketched(parent, detail_cli::make_sketch(sk_sketch->kind, a, sk_sketch->m,
                                                             sk_sketch->q,
                                                             sk_sketch->target_rank,
                                                             sk_sketch->seed));
    auto report = solve_sketched(sp, sk_args->options());
    Vector recovered = recover(sp, report);
    save_matrix(recovered, sk_args->output, detail_cli::format_for(sk_args->output));
    detail_cli::write_solve_report(report, sk_args->output, sk_args->report);
    if (!sk_bounds->empty()) {
      const double mu = parent->is_smooth() ? parent->smooth().mu : 0.0;
      const Index rank = numerical_rank(a);
      const Index k = sk_sketch->target_rank > 0
                          ? std::min(sk_sketch->target_rank, rank)
                          : std::min(rank, std::max<Index>(1, sk_sketch->m / 2));
      auto b = bound_report(a, sp.sketch, mu, parent->lambda, k);
      nlohmann::json j;
      j["zf_surrogate"] = b.zf;
      j["r_k"] = b.r_k;
      j["k"] = b.k;
      j["c0"] = b.c0;
      j["lambda_threshold"] = b.lambda_threshold;
      j["predicted_relative_error"] = b.predicted_relative_error;
      j["hypothesis_satisfied"] = b.hypothesis_satisfied;
      auto out = detail::open_out(*sk_bounds);
      out << j.dump(2) << '\n';
    }
    std::cout << sk_args->report << '\n';
    if (!report.converged) exit_code = 2;
  });

  // --- iterate -------------------------------------------------------------------
  auto it_args = std::make_shared<SolveArgs>();
  auto it_sketch = std::make_shared<SketchArgs>();
  struct {
    int rounds = 5;
    std::string oracle_path, history = "history.csv";
  } it_extra;
  auto* it_cmd = app.add_subcommand("iterate", "iterative refinement with a fixed sketch");
  add_solver_flags(it_cmd, *it_args);
  add_sketch_flags(it_cmd, *it_sketch);
  it_cmd->add_option("--rounds,--T", it_extra.rounds);
  it_cmd->add_option("--oracle", it_extra.oracle_path, "optional x* for error columns");
  it_cmd->add_option("--history", it_extra.history);
  it_args->tol = 1e-12;  // refined inner solves default tighter
  it_cmd->callback([&, it_args, it_sketch] {
    Matrix a = load_matrix(it_args->input);
    auto parent = std::make_shared<const PrimalProblem>(
        it_args->objective.problem(a, it_args->lambda));
    auto sp = build_sketched(parent, detail_cli::make_sketch(it_sketch->kind, a, it_sketch->m,
                                                             it_sketch->q,
                                                             it_sketch->target_rank,
                                                             it_sketch->seed));
    std::optional<Vector> oracle;
    if (!it_extra.oracle_path.empty()) oracle = detail_cli::load_vector(it_extra.oracle_path);
    auto refined = iterative_solve(sp, it_extra.rounds, it_args->options(),
                                   oracle ? &*oracle : nullptr);
    save_matrix(refined.solution, it_args->output, detail_cli::format_for(it_args->output));
    {
      auto out = detail::open_out(it_extra.history);
      out << "t,error_if_oracle_known,objective\n";
      for (const auto& rec : refined.history) {
        out << rec.t << ',';
        if (std::isfinite(rec.error_to_oracle)) out << detail::fmt(rec.error_to_oracle);
        out << ',' << detail::fmt(rec.objective) << '\n';
      }
    }
    std::cout << it_extra.history << '\n';
    if (!refined.converged) exit_code = 2;
  });

  // --- sweep ---------------------------------------------------------------------
  struct {
    Index n = 1000, d = 2000;
    std::string profile = "exp";
    Index rank = 10;
    double kappa = 0.1, beta = 1.0, scale = 0.0;
    std::string matrix_path;
    std::string objective = "logistic";
    double lambda = 1e-4;
    std::string sketch = "adaptive";
    std::string m_grid = "8,16,32,64,128,256,512,1024";
    int q = 0;
    Index target_rank = 0;
    int trials = 10;
    std::uint64_t seed = 0;
    std::string output_dir = "sweep-out";
    double tol = 1e-10, oracle_tol = 1e-10;
    bool small = false;
    bool with_oblivious = false;
  } sw;
  auto* sw_cmd = app.add_subcommand("sweep", "relative error versus sketching dimension");
  sw_cmd->add_option("--n", sw.n);
  sw_cmd->add_option("--d", sw.d);
  sw_cmd->add_option("--profile", sw.profile, "rank|exp|poly");
  sw_cmd->add_option("--rank", sw.rank);
  sw_cmd->add_option("--kappa", sw.kappa);
  sw_cmd->add_option("--beta", sw.beta);
  sw_cmd->add_option("--scale", sw.scale);
  sw_cmd->add_option("--matrix", sw.matrix_path, "use a stored matrix instead of generating");
  sw_cmd->add_option("--objective", sw.objective, "logistic|relu|quadratic");
  sw_cmd->add_option("--lambda", sw.lambda);
  sw_cmd->add_option("--sketch", sw.sketch);
  sw_cmd->add_option("--m-grid", sw.m_grid, "comma-separated, strictly increasing");
  sw_cmd->add_option("--q", sw.q);
  sw_cmd->add_option("--target-rank", sw.target_rank);
  sw_cmd->add_option("--trials", sw.trials);
  sw_cmd->add_option("--seed", sw.seed);
  sw_cmd->add_option("--output-dir", sw.output_dir);
  sw_cmd->add_option("--tol", sw.tol);
  sw_cmd->add_option("--oracle-tol", sw.oracle_tol);
  sw_cmd->add_flag("--small", sw.small, "CI-scale problem (n=200, d=400)");
  sw_cmd->add_flag("--with-oblivious", sw.with_oblivious,
                   "also sweep an oblivious baseline into the same figure");
  sw_cmd->callback([&] {
    ExperimentConfig config;
    config.n = sw.small ? 200 : sw.n;
    config.d = sw.small ? 400 : sw.d;
    config.profile = detail_cli::profile_from(sw.profile, sw.rank, sw.kappa, sw.beta,
                                              sw.scale > 0 ? sw.scale : 0.0);
    if (sw.scale <= 0) config.profile.scale = std::sqrt(static_cast<double>(config.n));
    config.matrix_path = sw.matrix_path;
    config.objective = sw.objective;
    config.lambda = sw.lambda;
    config.sketch_kind = detail_cli::sketch_from(sw.sketch);
    config.m_grid = detail_cli::parse_grid(sw.m_grid);
    config.power_q = sw.q;
    config.target_rank = sw.target_rank;
    config.trials = sw.trials;
    config.seed = sw.seed;
    config.output_dir = sw.output_dir;
    config.solver.method = Method::Newton;
    config.solver.tol = sw.tol;
    config.oracle_tol = sw.oracle_tol;

    auto result = run_sweep(config);
    const auto base = std::filesystem::path(sw.output_dir) / "sweep";
    write_sweep_csv(result, base.string() + ".csv");
    write_sweep_json(result, config, base.string() + ".json");
    std::vector<SweepSeries> series{to_series(result, to_string(config.sketch_kind))};
    if (sw.with_oblivious && config.sketch_kind != SketchKind::ObliviousGaussian) {
      auto baseline = config;
      baseline.sketch_kind = SketchKind::ObliviousGaussian;
      auto oblivious = run_sweep(baseline);
      write_sweep_csv(oblivious, base.string() + "_oblivious.csv");
      write_sweep_json(oblivious, baseline, base.string() + "_oblivious.json");
      series.push_back(to_series(oblivious, "oblivious-gaussian"));
    }
    write_sweep_svg(series, base.string() + ".svg");
    std::cout << base.string() + ".json" << '\n';
  });

  // --- compare ----------------------------------------------------------------------
  struct {
    Index n_train = 1000, n_test = 1000, input_dim = 10, feature_dim = 1000;
    double gamma = 0.05, separation = 3.0, lambda = 1e-4;
    Index clusters = 0;
    double cluster_spread = 2.5, cluster_radius = 0.6;
    std::string m_grid = "32,64,128,256";
    int trials = 3;
    std::uint64_t seed = 0;
    std::string output = "compare.csv";
    double tol = 1e-9;
  } cp;
  auto* cp_cmd = app.add_subcommand("compare",
                                    "test-error of sketching baselines on feature data");
  cp_cmd->add_option("--n-train", cp.n_train);
  cp_cmd->add_option("--n-test", cp.n_test);
  cp_cmd->add_option("--input-dim", cp.input_dim);
  cp_cmd->add_option("--D", cp.feature_dim);
  cp_cmd->add_option("--gamma", cp.gamma);
  cp_cmd->add_option("--separation", cp.separation);
  cp_cmd->add_option("--clusters-per-class", cp.clusters,
                     "0 = plain blobs; otherwise mixture classes");
  cp_cmd->add_option("--cluster-spread", cp.cluster_spread);
  cp_cmd->add_option("--cluster-radius", cp.cluster_radius);
  cp_cmd->add_option("--lambda", cp.lambda);
  cp_cmd->add_option("--m-grid", cp.m_grid);
  cp_cmd->add_option("--trials", cp.trials);
  cp_cmd->add_option("--seed", cp.seed);
  cp_cmd->add_option("--output", cp.output);
  cp_cmd->add_option("--tol", cp.tol);
  cp_cmd->callback([&] {
    CompareConfig config;
    config.n_train = cp.n_train;
    config.n_test = cp.n_test;
    config.input_dim = cp.input_dim;
    config.feature_dim = cp.feature_dim;
    config.gamma = cp.gamma;
    config.class_separation = cp.separation;
    config.clusters_per_class = cp.clusters;
    config.cluster_spread = cp.cluster_spread;
    config.cluster_radius = cp.cluster_radius;
    config.lambda = cp.lambda;
    config.m_grid = detail_cli::parse_grid(cp.m_grid);
    config.trials = cp.trials;
    config.seed = cp.seed;
    config.solver.method = Method::Newton;
    config.solver.tol = cp.tol;
    write_compare_csv(run_baseline_comparison(config), cp.output);
    std::cout << cp.output << '\n';
  });

  // --- predict ----------------------------------------------------------------------
  struct {
    std::string regime = "rank";
    double eps = 0.1, eta = 0.01, lambda = 1e-4;
    Index d = 2000;
    Index rho = 10;
    double kappa = 0.1, beta = 1.0;
    std::string output;
  } pr;
  auto* pr_cmd = app.add_subcommand("predict", "sketch dimensions for an (eps,eta)-guarantee");
  pr_cmd->add_option("--regime", pr.regime, "rank|exp|poly");
  pr_cmd->add_option("--eps", pr.eps);
  pr_cmd->add_option("--eta", pr.eta);
  pr_cmd->add_option("--lambda", pr.lambda);
  pr_cmd->add_option("--d", pr.d);
  pr_cmd->add_option("--rho", pr.rho);
  pr_cmd->add_option("--kappa", pr.kappa);
  pr_cmd->add_option("--beta", pr.beta);
  pr_cmd->add_option("--output", pr.output, "write JSON here instead of stdout");
  pr_cmd->callback([&] {
    DecayKind regime;
    double parameter;
    if (pr.regime == "rank") {
      regime = DecayKind::FiniteRank;
      parameter = static_cast<double>(pr.rho);
    } else if (pr.regime == "exp") {
      regime = DecayKind::Exponential;
      parameter = pr.kappa;
    } else if (pr.regime == "poly") {
      regime = DecayKind::Polynomial;
      parameter = pr.beta;
    } else {
      throw std::invalid_argument("unknown regime '" + pr.regime + "'");
    }
    auto p = predict_dimensions(regime, pr.eps, pr.eta, pr.lambda, pr.d, parameter);
    nlohmann::json j;
    j["regime"] = pr.regime;
    j["m_adaptive"] = p.m_adaptive;
    j["m_oblivious"] = p.m_oblivious;
    j["m_leverage"] = p.m_leverage;
    j["ratio_oblivious"] = p.ratio_oblivious;
    j["ratio_leverage"] = p.ratio_leverage;
    j["eps"] = p.epsilon;
    j["eta"] = p.eta;
    j["lambda"] = p.lambda;
    j["d"] = p.d;
    j["parameter"] = p.regime_parameter;
    if (pr.output.empty()) {
      std::cout << j.dump(2) << '\n';
    } else {
      auto out = detail::open_out(pr.output);
      out << j.dump(2) << '\n';
      std::cout << pr.output << '\n';
    }
  });

  // --- kernel-solve -------------------------------------------------------------------
  struct {
    std::string input, labels;
    std::string objective = "logistic";
    double gamma = 0.02;
    Index feature_dim = 0;  // 0 = exact kernel path
    Index m = 64;
    double lambda = 1e-4;
    std::uint64_t seed = 0;
    double tol = 1e-10;
    std::string output = "weights.askm", report = "report.json", features_out;
  } kn;
  auto* kn_cmd = app.add_subcommand("kernel-solve",
                                    "sketched kernel program (exact kernel or random features)");
  kn_cmd->add_option("--input", kn.input)->required();
  kn_cmd->add_option("--labels", kn.labels)->required();
  kn_cmd->add_option("--objective", kn.objective, "logistic|relu|quadratic");
  kn_cmd->add_option("--gamma", kn.gamma);
  kn_cmd->add_option("--D", kn.feature_dim, "random-feature dimension; 0 = exact kernel");
  kn_cmd->add_option("--m", kn.m);
  kn_cmd->add_option("--lambda", kn.lambda);
  kn_cmd->add_option("--seed", kn.seed);
  kn_cmd->add_option("--tol", kn.tol);
  kn_cmd->add_option("--output", kn.output);
  kn_cmd->add_option("--report", kn.report);
  kn_cmd->add_option("--save-features", kn.features_out,
                     "store the feature matrix (binary format)");
  kn_cmd->callback([&] {
    Matrix x = load_matrix(kn.input);
    ObjectiveSpec spec{kn.objective, kn.labels};
    SolverOptions opts;
    opts.method = Method::Newton;
    opts.tol = kn.tol;
    if (kn.feature_dim > 0) {
      Matrix features = rff_features(x, kn.feature_dim, kn.gamma, kn.seed);
      if (!kn.features_out.empty())
        save_matrix(features, kn.features_out, MatrixFormat::Binary);
      auto parent = std::make_shared<const PrimalProblem>(spec.problem(features, kn.lambda));
      auto sp = build_sketched(parent,
                               adaptive_gaussian(features, kn.m, detail::mix_seed(kn.seed, 1)));
      auto report = solve_sketched(sp, opts);
      Vector recovered = recover(sp, report);
      save_matrix(recovered, kn.output, detail_cli::format_for(kn.output));
      detail_cli::write_solve_report(report, kn.output, kn.report);
      if (!report.converged) exit_code = 2;
    } else {
      auto kernel = gaussian_kernel(x, kn.gamma);
      auto solution = solve_kernel_sketched(kernel, spec.smooth(), kn.lambda, kn.m, kn.seed, opts);
      save_matrix(solution.w_tilde, kn.output, detail_cli::format_for(kn.output));
      detail_cli::write_solve_report(solution.report, kn.output, kn.report);
      if (!solution.report.converged) exit_code = 2;
    }
    std::cout << kn.report << '\n';
  });

  // --- report -----------------------------------------------------------------------
  struct {
    std::string input;
    std::string format = "svg";
    std::string output = "report";
    std::string name = "sweep";
  } rp;
  auto* rp_cmd = app.add_subcommand("report", "re-emit a stored sweep CSV as csv/json/svg");
  rp_cmd->add_option("--input", rp.input)->required();
  rp_cmd->add_option("--format", rp.format, "csv|json|svg");
  rp_cmd->add_option("--output", rp.output, "output path without extension");
  rp_cmd->add_option("--name", rp.name, "series name in figures");
  rp_cmd->callback([&] {
    auto result = load_sweep_csv(rp.input);
    const auto format = report_format_from_string(rp.format);
    std::filesystem::path path = rp.output;
    switch (format) {
      case ReportFormat::Csv:
        path += ".csv";
        write_sweep_csv(result, path);
        break;
      case ReportFormat::Json: {
        path += ".json";
        nlohmann::json j;
        j["config"] = {{"source", rp.input}};
        j["per_m"] = nlohmann::json::array();
        for (std::size_t i = 0; i < result.m_grid.size(); ++i)
          j["per_m"].push_back({{"m", result.m_grid[i]},
                                {"mean", result.mean_error[i]},
                                {"std", result.std_error[i]},
                                {"flagged", result.flagged[i]}});
        auto out = detail::open_out(path);
        out << j.dump(2) << '\n';
        break;
      }
      case ReportFormat::Svg:
        path += ".svg";
        write_sweep_svg({to_series(result, rp.name)}, path);
        break;
    }
    std::cout << path.string() << '\n';
  });

  try {
    auto final_args = detail_cli::apply_config_file(std::move(args));
    std::reverse(final_args.begin(), final_args.end());  // CLI11 parses reversed vectors
    app.parse(final_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}

}  // namespace asketch::cli
