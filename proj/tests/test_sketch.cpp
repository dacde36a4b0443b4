#include <catch2/catch_amalgamated.hpp>

#include <asketch/sketch.hpp>

using namespace asketch;

namespace {

// Independent projector-residual oracle: ||(I - P_S) A^T||_2 via an
// orthonormal basis of range(S).
double residual_norm(const Matrix& a, const Matrix& s) {
  auto f = svd(s);
  const Index r = numerical_rank(f.singulars, s.rows(), s.cols());
  Matrix at = a.transpose();
  if (r == 0) return spectral_norm(at);
  Matrix basis = f.left.leftCols(r);
  return spectral_norm(at - basis * (basis.transpose() * at));
}

Matrix diag21() {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  return a;
}

}  // namespace

TEST_CASE("adaptive sketch of the identity is the Gaussian factor", "[sketch]") {
  auto op = adaptive_gaussian(Matrix::Identity(6, 6), 3, 42);
  REQUIRE(op.S == op.stilde);
  REQUIRE(op.S.rows() == 6);
  REQUIRE(op.S.cols() == 3);
}

TEST_CASE("adaptive sketch with an injected factor", "[sketch]") {
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  auto op = adaptive_from(diag21(), e1);
  REQUIRE(op.S(0, 0) == 2.0);
  REQUIRE(op.S(1, 0) == 0.0);
}

TEST_CASE("adaptive sketches live in the row space of A", "[sketch]") {
  Rng rng(31);
  Matrix a = gaussian_matrix(10, 20, rng);
  Matrix v = svd(a).right_t;  // rows span row(A)
  for (auto& op : {adaptive_gaussian(a, 5, 1), power_sketch(a, 5, 2, 2),
                   uniform_columns(a, 5, 3), leverage_score_sampling(a, 5, 4, 4)}) {
    Matrix off = op.S - v.transpose() * (v * op.S);
    REQUIRE(off.norm() < 1e-10);
  }
}

TEST_CASE("adaptive sketch captures the full row space at m = rank + 2", "[sketch]") {
  Matrix a = generate_decay_matrix(12, 20, SpectralProfile::finite_rank(5, 3.0), 8);
  auto op = adaptive_gaussian(a, 7, 9);
  REQUIRE(residual_norm(a, op.S) < 1e-10);
}

TEST_CASE("oblivious sketch has variance 1/d and is seed-deterministic", "[sketch]") {
  const Index d = 4096, m = 8;
  auto op = oblivious_gaussian(d, m, 77);
  const double var = op.S.array().square().mean();
  REQUIRE(var == Catch::Approx(1.0 / d).epsilon(0.10));

  auto again = oblivious_gaussian(d, m, 77);
  REQUIRE(op.S == again.S);

  auto other = oblivious_gaussian(d, m, 78);
  const auto differing = (op.S.array() != other.S.array()).count();
  REQUIRE(differing >= static_cast<Index>(0.99 * d * m));
}

TEST_CASE("adaptive sketch rejects m = 0", "[sketch]") {
  REQUIRE_THROWS_AS(adaptive_gaussian(Matrix::Identity(3, 3), 0, 1), std::invalid_argument);
}

TEST_CASE("leverage scores of orthonormal rows are uniform", "[sketch]") {
  // rows of a wide orthonormal-rows matrix have identical leverage
  Rng rng(5);
  Matrix q = random_orthonormal(12, 4, rng);  // 4 orthonormal columns
  Matrix a = q.transpose();                   // 4 x 12, orthonormal rows
  Vector p = leverage_scores(a, 4);
  for (Index j = 0; j < 4; ++j) REQUIRE(p[j] == Catch::Approx(0.25).epsilon(1e-10));

  auto op = leverage_score_sampling(a, 6, 4, 21);
  // D rescaling makes every non-zero entry of S~ equal sqrt(n/m)
  for (Index l = 0; l < 6; ++l) {
    Vector col = op.stilde.col(l);
    REQUIRE((col.array() != 0.0).count() == 1);
    REQUIRE(col.cwiseAbs().maxCoeff() == Catch::Approx(std::sqrt(4.0 / 6.0)).epsilon(1e-10));
  }
}

TEST_CASE("rank-1 leverage distribution concentrates on the top direction", "[sketch]") {
  Matrix a = diag21();
  Vector p = leverage_scores(a, 1);
  REQUIRE(p[0] == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(p[1] == Catch::Approx(0.0).margin(1e-12));
  auto op = leverage_score_sampling(a, 5, 1, 3);
  for (Index l = 0; l < 5; ++l) {
    REQUIRE(op.stilde(0, l) > 0.0);
    REQUIRE(op.stilde(1, l) == 0.0);
  }
}

TEST_CASE("leverage scores sum to one", "[sketch]") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<Index> dim(2, 24);
    Index n = dim(rng), d = dim(rng);
    Matrix a = gaussian_matrix(n, d, rng);
    Index k = 1 + static_cast<Index>(t % std::min(n, d));
    Vector p = leverage_scores(a, std::min<Index>(k, std::min(n, d)));
    REQUIRE(p.sum() == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("leverage sampling rejects k above the rank", "[sketch]") {
  Matrix a = generate_decay_matrix(6, 9, SpectralProfile::finite_rank(2, 1.0), 4);
  REQUIRE_THROWS_AS(leverage_score_sampling(a, 4, 3, 0), std::invalid_argument);
}

TEST_CASE("uniform column sampling picks rows of A", "[sketch]") {
  Rng rng(23);
  Matrix a = gaussian_matrix(7, 11, rng);
  auto op = uniform_columns(a, 9, 15);
  for (Index l = 0; l < 9; ++l) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < a.rows(); ++i)
      best = std::min(best, (op.S.col(l) - a.row(i).transpose()).norm());
    REQUIRE(best < 1e-14);
  }
  auto again = uniform_columns(a, 9, 15);
  REQUIRE(op.S == again.S);
}

TEST_CASE("full uniform selection reproduces A^T up to column order", "[sketch]") {
  Rng rng(29);
  Matrix a = gaussian_matrix(4, 6, rng);
  // hunt for a seed whose 4 draws are distinct; deterministic thereafter
  for (std::uint64_t seed = 0;; ++seed) {
    auto op = uniform_columns(a, 4, seed);
    std::vector<Index> picked;
    for (Index l = 0; l < 4; ++l)
      for (Index i = 0; i < 4; ++i)
        if (op.stilde(i, l) == 1.0) picked.push_back(i);
    std::sort(picked.begin(), picked.end());
    if (std::unique(picked.begin(), picked.end()) == picked.end() && picked.size() == 4) {
      Matrix sorted_s = op.S, at = a.transpose();
      REQUIRE((op.stilde * op.stilde.transpose() - Matrix::Identity(4, 4)).norm() < 1e-14);
      REQUIRE((op.S * op.stilde.transpose() - at).norm() < 1e-14);
      break;
    }
    REQUIRE(seed < 1000);
  }
}

TEST_CASE("power sketch reduces to the adaptive sketch at q = 0", "[sketch]") {
  Rng rng(37);
  Matrix a = gaussian_matrix(8, 12, rng);
  auto p0 = power_sketch(a, 4, 0, 55);
  auto ad = adaptive_gaussian(a, 4, 55);
  REQUIRE(p0.S == ad.S);
  REQUIRE(p0.stilde == ad.stilde);
  REQUIRE(p0.kind == SketchKind::AdaptiveGaussian);
}

TEST_CASE("power sketch with an injected factor", "[sketch]") {
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  auto op = power_from(diag21(), e1, 1);
  REQUIRE(op.S(0, 0) == Catch::Approx(8.0));
  REQUIRE(op.S(1, 0) == 0.0);
}

TEST_CASE("power iterations sharpen noisy low-rank matrices", "[sketch]") {
  Rng rng(41);
  int wins = 0;
  for (int t = 0; t < 20; ++t) {
    Matrix base = generate_decay_matrix(24, 32, SpectralProfile::finite_rank(3, 8.0),
                                        1000 + static_cast<std::uint64_t>(t));
    Matrix noise = 0.1 * gaussian_matrix(24, 32, rng);
    Matrix a = base + noise;
    auto q0 = power_sketch(a, 6, 0, 2000 + static_cast<std::uint64_t>(t));
    auto q2 = power_sketch(a, 6, 2, 2000 + static_cast<std::uint64_t>(t));
    if (residual_norm(a, q2.S) <= residual_norm(a, q0.S) + 1e-12) ++wins;
  }
  REQUIRE(wins >= 18);
}

TEST_CASE("power sketch rejects q outside the supported range", "[sketch]") {
  REQUIRE_THROWS_AS(power_sketch(Matrix::Identity(3, 3), 2, 5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(power_sketch(Matrix::Identity(3, 3), 2, -1, 0), std::invalid_argument);
}
