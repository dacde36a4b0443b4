#include <catch2/catch_amalgamated.hpp>

#include <asketch/bounds.hpp>

#include <algorithm>

using namespace asketch;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("projector residual vanishes on a complete sketch", "[bounds]") {
  Rng rng(401);
  Matrix a = gaussian_matrix(6, 10, rng);
  Matrix s = svd(a).right_t.transpose();  // spans row(A)
  REQUIRE(zf_surrogate(a, s) < 1e-10);
}

TEST_CASE("projector residual hand value", "[bounds]") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  Matrix s = Matrix::Zero(2, 1);
  s(0, 0) = 1.0;
  REQUIRE(zf_surrogate(a, s) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feature-side and gram-side formulas agree", "[bounds]") {
  Rng rng(409);
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<Index> dim(3, 24);
    const Index n = dim(rng), d = dim(rng);
    Matrix a = gaussian_matrix(n, d, rng);
    const Index m = std::max<Index>(1, std::min(n, d) / 2);
    auto op = adaptive_gaussian(a, m, 4000 + static_cast<std::uint64_t>(t));
    const double via_features = zf_surrogate(a, op.S);
    const double via_gram = zf_surrogate_gram(a, op.stilde);
    REQUIRE(via_features == Catch::Approx(via_gram).margin(1e-8));
  }
}

TEST_CASE("projector residual never exceeds the top singular value", "[bounds]") {
  Rng rng(419);
  for (int t = 0; t < 20; ++t) {
    Matrix a = gaussian_matrix(10, 14, rng);
    auto op = adaptive_gaussian(a, 3, static_cast<std::uint64_t>(t));
    REQUIRE(zf_surrogate(a, op) <= spectral_norm(a) + 1e-12);
  }
}

TEST_CASE("median projector residual shrinks as m doubles", "[bounds]") {
  Matrix a = generate_decay_matrix(32, 48, SpectralProfile::polynomial(1.0, 4.0), 6);
  double prev = std::numeric_limits<double>::infinity();
  for (Index m : {4, 8, 16, 32}) {
    std::vector<double> samples;
    for (int t = 0; t < 50; ++t)
      samples.push_back(zf_surrogate(a, adaptive_gaussian(a, m, 100 + static_cast<std::uint64_t>(t))));
    const double med = median(samples);
    REQUIRE(med <= prev + 1e-12);
    prev = med;
  }
}

TEST_CASE("spectral tail hand values", "[bounds]") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  REQUIRE(spectral_tail_rk(a, 1) == Catch::Approx(std::sqrt(5.0)).epsilon(1e-12));
  REQUIRE(spectral_tail_rk(a, 2) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral tail respects the numerical rank", "[bounds]") {
  Matrix a = generate_decay_matrix(10, 16, SpectralProfile::finite_rank(4, 3.0), 5);
  Vector s = svd(a).singulars;
  REQUIRE(spectral_tail_rk(a, 4) == Catch::Approx(s[3]).epsilon(1e-8));
  // k = rank - 1 picks up exactly one tail term
  REQUIRE(spectral_tail_rk(a, 3) ==
          Catch::Approx(std::sqrt(s[2] * s[2] + s[3] * s[3] / 3.0)).epsilon(1e-8));
  REQUIRE_THROWS_AS(spectral_tail_rk(a, 5), std::invalid_argument);
}

TEST_CASE("spectral tail monotonicity", "[bounds]") {
  Rng rng(431);
  Matrix a = gaussian_matrix(12, 20, rng);
  Vector s = svd(a).singulars;
  double prev = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= 12; ++k) {
    const double rk = spectral_tail_rk(a, k);
    REQUIRE(rk >= s[k - 1] - 1e-12);
    REQUIRE(rk <= prev + 1e-12);
    prev = rk;
  }
}

TEST_CASE("theorem-1 bound formula", "[bounds]") {
  REQUIRE(theorem1_bound(1.0, 2.0, 0.0, 5.0).bound == 0.0);
  auto at_threshold = theorem1_bound(1.0, 2.0, 1.0, 1.0);
  REQUIRE(at_threshold.bound == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(at_threshold.valid);
  REQUIRE_FALSE(theorem1_bound(1.0, 0.5, 1.0, 1.0).valid);
  REQUIRE_THROWS_AS(theorem1_bound(1.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("corollary-1 formula and preconditions", "[bounds]") {
  Matrix full = generate_decay_matrix(20, 32, SpectralProfile::polynomial(1.0, 2.0), 3);
  auto out = corollary1_bound(1.0, 2.0, full, 5);
  REQUIRE(out.failure_prob == Catch::Approx(12.0 * std::exp(-5.0)).epsilon(1e-12));
  REQUIRE(out.failure_prob == Catch::Approx(0.0809).epsilon(1e-2));
  REQUIRE(out.lambda_required ==
          Catch::Approx(2.0 * 36.0 * 36.0 * std::pow(spectral_tail_rk(full, 5), 2)).epsilon(1e-10));

  // at k = rank the tail is empty, so the bound collapses to sigma_rho;
  // k above the rank is rejected through the R_k precondition
  Matrix a = generate_decay_matrix(20, 32, SpectralProfile::finite_rank(4, 2.0), 3);
  Vector s = svd(a).singulars;
  auto at_rank = corollary1_bound(1.0, 2.0, a, 4);
  REQUIRE(at_rank.bound == Catch::Approx(36.0 * std::sqrt(1.0 / 4.0) * s[3]).epsilon(1e-8));
  REQUIRE_THROWS_AS(corollary1_bound(1.0, 2.0, a, 5), std::invalid_argument);

  REQUIRE_THROWS_AS(corollary1_bound(1.0, 2.0, a, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(corollary1_bound(1.0, 2.0, a, 11), std::invalid_argument);
}

TEST_CASE("theorem-2 factor", "[bounds]") {
  REQUIRE(theorem2_bound(1.0, 2.0, 1.0, 1) ==
          Catch::Approx(theorem1_bound(1.0, 2.0, 1.0, 1.0).bound).epsilon(1e-12));
  // (mu z^2 / 2 lambda)^{T/2} = 0.25^2; the per-round contraction 0.5 enters
  // squared per two rounds
  REQUIRE(theorem2_bound(1.0, 2.0, 1.0, 4) == Catch::Approx(0.0625).epsilon(1e-12));
  REQUIRE(theorem2_bound(1.0, 2.0, 1.0, 2) == Catch::Approx(0.25).epsilon(1e-12));
  REQUIRE(theorem2_bound(1.0, 2.0, 0.0, 7) == 0.0);
}

TEST_CASE("theorem-4 non-smooth bound", "[bounds]") {
  REQUIRE(theorem4_nonsmooth_bound(1.0, 6.0, 4.0, 0.0) == 0.0);
  REQUIRE(theorem4_nonsmooth_bound(1.0, 6.0, 4.0, 1.0) == Catch::Approx(2.0).epsilon(1e-12));
  REQUIRE(theorem4_nonsmooth_bound(1.0, 12.0, 4.0, 1.0) == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(theorem4_nonsmooth_bound(1.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("concentration lemma holds empirically", "[bounds]") {
  Matrix a = generate_decay_matrix(64, 128, SpectralProfile::polynomial(1.0, 8.0), 9);
  const double rate = lemma1_check(a, 8, 200, 71);
  REQUIRE(rate >= 1.0 - 6.0 * std::exp(-8.0) - 0.02);
  REQUIRE(rate == 1.0);  // the constant 36 is loose at this scale
}

TEST_CASE("concentration check is trivial at full rank", "[bounds]") {
  Matrix a = generate_decay_matrix(16, 24, SpectralProfile::finite_rank(4, 2.0), 10);
  REQUIRE(lemma1_check(a, 4, 50, 3) == 1.0);
}

TEST_CASE("sketch-size predictions at pinned points", "[bounds]") {
  auto fr = predict_dimensions(DecayKind::FiniteRank, 0.1, 0.01, 1e-4, 2000, 10.0);
  REQUIRE(fr.m_adaptive == Catch::Approx(18.09007683577609).epsilon(1e-10));
  REQUIRE(fr.m_oblivious == Catch::Approx(8360.992705496288).epsilon(1e-10));
  REQUIRE(fr.m_leverage == Catch::Approx(91.2345460411223).epsilon(1e-10));

  auto fr2 = predict_dimensions(DecayKind::FiniteRank, 0.25, 0.05, 1.0, 100, 5.0);
  REQUIRE(fr2.m_adaptive == Catch::Approx(11.480638923341992).epsilon(1e-10));
  REQUIRE(fr2.m_oblivious == Catch::Approx(508.63846718861146).epsilon(1e-10));
  REQUIRE(fr2.m_leverage == Catch::Approx(35.94878728264789).epsilon(1e-10));

  auto ex = predict_dimensions(DecayKind::Exponential, 0.1, 0.01, 1e-4, 2000, 0.1);
  REQUIRE(ex.m_adaptive == Catch::Approx(122.21933148547836).epsilon(1e-10));
  REQUIRE(ex.m_oblivious == Catch::Approx(118806.2051312334).epsilon(1e-10));
  REQUIRE(ex.m_leverage == Catch::Approx(530.1898110478398).epsilon(1e-10));

  auto ex2 = predict_dimensions(DecayKind::Exponential, 0.05, 0.1, 1e-3, 500, 0.5);
  REQUIRE(ex2.m_adaptive == Catch::Approx(24.5944668478543).epsilon(1e-10));
  REQUIRE(ex2.m_oblivious == Catch::Approx(50898.22186059262).epsilon(1e-10));
  REQUIRE(ex2.m_leverage == Catch::Approx(45.607245614243546).epsilon(1e-10));

  auto po = predict_dimensions(DecayKind::Polynomial, 0.1, 0.01, 1e-4, 2000, 1.0);
  REQUIRE(po.m_adaptive == Catch::Approx(1007.0900768357761).epsilon(1e-10));
  REQUIRE(po.m_oblivious == Catch::Approx(128992.19826090118).epsilon(1e-10));
  REQUIRE(po.m_leverage == Catch::Approx(4605170.185988092).epsilon(1e-10));

  auto po2 = predict_dimensions(DecayKind::Polynomial, 0.1, 0.05, 1e-4, 1000, 2.0);
  REQUIRE(po2.m_adaptive == Catch::Approx(37.10341552502578).epsilon(1e-10));
  REQUIRE(po2.m_oblivious == Catch::Approx(10596.63473309607).epsilon(1e-10));
  REQUIRE(po2.m_leverage == Catch::Approx(2995.73227355399).epsilon(1e-10));

  auto po3 = predict_dimensions(DecayKind::Polynomial, 0.2, 0.01, 1e-3, 500, 3.0);
  REQUIRE(po3.m_adaptive == Catch::Approx(12.497495571377087).epsilon(1e-10));
  REQUIRE(po3.m_leverage == Catch::Approx(57.90694941240607).epsilon(1e-10));

  // beta <= 1 pins the leverage exponent at 2
  auto po4 = predict_dimensions(DecayKind::Polynomial, 0.1, 0.1, 1e-2, 200, 0.75);
  REQUIRE(po4.m_leverage == Catch::Approx(496076.92010966584).epsilon(1e-10));

  auto ex3 = predict_dimensions(DecayKind::Exponential, 0.2, 0.01, 1e-2, 100, 1.0);
  REQUIRE(ex3.m_adaptive == Catch::Approx(13.304684934198283).epsilon(1e-10));

  auto fr3 = predict_dimensions(DecayKind::FiniteRank, 0.5, 0.001, 1.0, 50, 30.0);
  REQUIRE(fr3.m_oblivious == Catch::Approx(1364.2603803093255).epsilon(1e-10));
}

TEST_CASE("oblivious-over-adaptive ratio scales as 1/eps^2 at finite rank", "[bounds]") {
  auto coarse = predict_dimensions(DecayKind::FiniteRank, 0.2, 0.01, 1.0, 100, 10.0);
  auto fine = predict_dimensions(DecayKind::FiniteRank, 0.1, 0.01, 1.0, 100, 10.0);
  REQUIRE(fine.ratio_oblivious / coarse.ratio_oblivious == Catch::Approx(4.0).epsilon(1e-9));
  REQUIRE(coarse.ratio_oblivious > std::log(10.0) / (0.2 * 0.2));
}

TEST_CASE("predictions are monotone in their arguments", "[bounds]") {
  const std::vector<double> eps_grid = {0.05, 0.1, 0.2, 0.4};
  const std::vector<double> eta_grid = {0.001, 0.01, 0.1, 0.5};
  const std::vector<double> lambda_grid = {1e-6, 1e-4, 1e-2, 1.0};

  auto all_dims = [](const DimensionPrediction& p) {
    return std::array<double, 3>{p.m_adaptive, p.m_oblivious, p.m_leverage};
  };

  for (auto [regime, parameter] :
       std::vector<std::pair<DecayKind, double>>{{DecayKind::FiniteRank, 8.0},
                                                 {DecayKind::Exponential, 0.2},
                                                 {DecayKind::Polynomial, 1.5}}) {
    // non-increasing in epsilon
    for (std::size_t i = 1; i < eps_grid.size(); ++i) {
      auto lo = all_dims(predict_dimensions(regime, eps_grid[i - 1], 0.01, 1e-3, 200, parameter));
      auto hi = all_dims(predict_dimensions(regime, eps_grid[i], 0.01, 1e-3, 200, parameter));
      for (int j = 0; j < 3; ++j) REQUIRE(hi[j] <= lo[j] + 1e-12);
    }
    // non-increasing in eta
    for (std::size_t i = 1; i < eta_grid.size(); ++i) {
      auto lo = all_dims(predict_dimensions(regime, 0.1, eta_grid[i - 1], 1e-3, 200, parameter));
      auto hi = all_dims(predict_dimensions(regime, 0.1, eta_grid[i], 1e-3, 200, parameter));
      for (int j = 0; j < 3; ++j) REQUIRE(hi[j] <= lo[j] + 1e-12);
    }
    // non-decreasing as lambda shrinks (exponential/polynomial regimes)
    if (regime != DecayKind::FiniteRank) {
      for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
        auto small = all_dims(predict_dimensions(regime, 0.1, 0.01, lambda_grid[i - 1], 200, parameter));
        auto large = all_dims(predict_dimensions(regime, 0.1, 0.01, lambda_grid[i], 200, parameter));
        for (int j = 0; j < 3; ++j) REQUIRE(small[j] >= large[j] - 1e-12);
      }
    }
  }
}

TEST_CASE("predictions reject invalid parameters", "[bounds]") {
  REQUIRE_THROWS_AS(predict_dimensions(DecayKind::FiniteRank, 0.0, 0.01, 1.0, 10, 5.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(predict_dimensions(DecayKind::FiniteRank, 0.1, 1.0, 1.0, 10, 5.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(predict_dimensions(DecayKind::Polynomial, 0.1, 0.01, 1.0, 10, 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(predict_dimensions(DecayKind::Exponential, 0.1, 0.01, 0.0, 10, 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(predict_dimensions(DecayKind::Explicit, 0.1, 0.01, 1.0, 10, 1.0),
                    std::invalid_argument);
}

TEST_CASE("bound report summarizes an instance", "[bounds]") {
  Matrix a = generate_decay_matrix(16, 24, SpectralProfile::exponential(0.5, 2.0), 13);
  auto op = adaptive_gaussian(a, 6, 17);
  auto report = bound_report(a, op, 1.0, 5.0, 3);
  REQUIRE(report.zf == Catch::Approx(zf_surrogate(a, op)).epsilon(1e-12));
  REQUIRE(report.r_k == Catch::Approx(spectral_tail_rk(a, 3)).epsilon(1e-12));
  REQUIRE(report.c0 == 36.0);
  REQUIRE(report.lambda_threshold == Catch::Approx(2.0 * report.zf * report.zf).epsilon(1e-12));
  REQUIRE(report.predicted_relative_error ==
          Catch::Approx(std::sqrt(0.1) * report.zf).epsilon(1e-12));
  REQUIRE(report.hypothesis_satisfied == (5.0 >= report.lambda_threshold));
}
