#include <catch2/catch_amalgamated.hpp>

#include <asketch/refine.hpp>

using namespace asketch;

namespace {

Vector random_vector(Index n, Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, spread);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Vector ridge_oracle(const Matrix& a, const Vector& b, double lambda) {
  const Index d = a.cols();
  Matrix lhs = a.transpose() * a + lambda * Matrix::Identity(d, d);
  return lhs.llt().solve(a.transpose() * b);
}

double residual_norm(const Matrix& a, const Matrix& s) {
  auto f = svd(s);
  const Index r = numerical_rank(f.singulars, s.rows(), s.cols());
  Matrix at = a.transpose();
  if (r == 0) return spectral_norm(at);
  Matrix basis = f.left.leftCols(r);
  return spectral_norm(at - basis * (basis.transpose() * at));
}

}  // namespace

TEST_CASE("one round reproduces the single-shot recovery", "[refine]") {
  Rng rng(211);
  Matrix a = generate_decay_matrix(24, 40, SpectralProfile::exponential(0.3, 2.0), 4);
  Vector b = random_vector(24, rng);
  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), 0.8));
  auto sp = build_sketched(p, adaptive_gaussian(a, 8, 5));

  auto single = solve_sketched(sp, refine_options());
  Vector one_shot = recover(sp, single);
  auto refined = iterative_solve(sp, 1, refine_options());
  REQUIRE((refined.solution - one_shot).norm() <= 1e-10 * (1.0 + one_shot.norm()));
}

TEST_CASE("geometric decay at the theorem-2 rate", "[refine]") {
  Rng rng(223);
  Matrix a = generate_decay_matrix(30, 50, SpectralProfile::exponential(0.35, 3.0), 9);
  Vector b = random_vector(30, rng);
  auto sketch = adaptive_gaussian(a, 8, 77);
  const double z = residual_norm(a, sketch.S);
  const double mu = 1.0;
  const double target_contraction = 0.45;
  const double lambda = mu * z * z / (2.0 * target_contraction * target_contraction);
  const double c = std::sqrt(mu / (2.0 * lambda)) * z;
  REQUIRE(c <= 0.5);

  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), lambda));
  auto sp = build_sketched(p, sketch);
  Vector oracle = ridge_oracle(a, b, lambda);

  const int rounds = 5;
  auto report = iterative_solve(sp, rounds, refine_options(), &oracle);
  REQUIRE(report.converged);
  REQUIRE(report.history.size() == rounds);
  REQUIRE((report.solution - oracle).norm() <=
          std::pow(c, rounds) * oracle.norm() + 1e-7);

  double prev = oracle.norm();  // x(0) = 0
  for (const auto& rec : report.history) {
    REQUIRE(rec.error_to_oracle <= (c + 0.05) * prev + 1e-10);
    prev = rec.error_to_oracle;
  }
}

TEST_CASE("error history is monotone below the contraction threshold", "[refine]") {
  Rng rng(227);
  Matrix a = generate_decay_matrix(20, 30, SpectralProfile::exponential(0.5, 2.0), 13);
  Vector b = random_vector(20, rng);
  auto sketch = adaptive_gaussian(a, 6, 3);
  const double z = residual_norm(a, sketch.S);
  const double lambda = 2.5 * z * z;
  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), lambda));
  auto sp = build_sketched(p, sketch);
  Vector oracle = ridge_oracle(a, b, lambda);
  auto report = iterative_solve(sp, 6, refine_options(), &oracle);
  for (std::size_t t = 1; t < report.history.size(); ++t)
    REQUIRE(report.history[t].error_to_oracle <=
            report.history[t - 1].error_to_oracle + 1e-12);
}

TEST_CASE("full-rank sketch converges in one round and then stays fixed", "[refine]") {
  Rng rng(229);
  Matrix a = generate_decay_matrix(18, 28, SpectralProfile::finite_rank(6, 2.0), 21);
  Vector b = random_vector(18, rng);
  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), 0.05));
  auto sp = build_sketched(p, adaptive_gaussian(a, 8, 31));
  Vector oracle = ridge_oracle(a, b, 0.05);
  auto report = iterative_solve(sp, 5, refine_options(), &oracle);
  REQUIRE(report.history.front().error_to_oracle <= 1e-8 * (1.0 + oracle.norm()));
  // early stopping kicks in once iterates stop moving
  REQUIRE(report.iterations < 5);
  REQUIRE((report.solution - oracle).norm() <= 1e-8 * (1.0 + oracle.norm()));
}

TEST_CASE("power refinement with q = 0 follows the adaptive trajectory", "[refine]") {
  Rng rng(233);
  Matrix a = generate_decay_matrix(16, 24, SpectralProfile::polynomial(1.0, 2.0), 41);
  Vector b = random_vector(16, rng);
  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), 0.5));

  auto via_power = refine_with_power(p, 5, 0, 3, 91, refine_options());
  auto sp = build_sketched(p, adaptive_gaussian(a, 5, 91));
  auto via_adaptive = iterative_solve(sp, 3, refine_options());
  REQUIRE(via_power.iterations == via_adaptive.iterations);
  REQUIRE((via_power.solution - via_adaptive.solution).norm() == 0.0);
}

TEST_CASE("power iterations help on noisy low-rank data", "[refine]") {
  Rng rng(239);
  int wins = 0;
  for (int t = 0; t < 20; ++t) {
    Matrix base = generate_decay_matrix(24, 36, SpectralProfile::finite_rank(3, 6.0),
                                        500 + static_cast<std::uint64_t>(t));
    Matrix a = base + 0.15 * gaussian_matrix(24, 36, rng);
    Vector b = random_vector(24, rng);
    auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), 0.6));
    Vector oracle = ridge_oracle(a, b, 0.6);
    auto q0 = refine_with_power(p, 5, 0, 2, 800 + static_cast<std::uint64_t>(t),
                                refine_options(), &oracle);
    auto q2 = refine_with_power(p, 5, 2, 2, 800 + static_cast<std::uint64_t>(t),
                                refine_options(), &oracle);
    if (q2.history.back().error_to_oracle <= q0.history.back().error_to_oracle + 1e-12) ++wins;
  }
  REQUIRE(wins >= 16);
}

TEST_CASE("three rounds improve on one round by the squared contraction", "[refine]") {
  Rng rng(241);
  Matrix a = generate_decay_matrix(26, 40, SpectralProfile::exponential(0.4, 2.5), 53);
  Vector b = random_vector(26, rng);
  auto sketch = adaptive_gaussian(a, 7, 11);
  const double z = residual_norm(a, sketch.S);
  const double lambda = 3.0 * z * z;  // contraction c = sqrt(1/6)
  const double c = std::sqrt(1.0 / (2.0 * lambda)) * z;
  auto p = std::make_shared<PrimalProblem>(make_primal(a, quadratic_objective(b), lambda));
  auto sp = build_sketched(p, sketch);
  Vector oracle = ridge_oracle(a, b, lambda);
  auto report = iterative_solve(sp, 3, refine_options(), &oracle);
  const double e1 = report.history[0].error_to_oracle;
  const double e3 = report.history[2].error_to_oracle;
  REQUIRE(e3 <= e1 * c * c + 1e-9);
}
