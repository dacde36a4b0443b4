#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace asketch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Malformed matrix file; the message names the offending byte or line offset.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool is_finite(const Matrix& a) { return a.allFinite(); }

// ---------------------------------------------------------------------------
// Spectral profiles
// ---------------------------------------------------------------------------

enum class DecayKind { FiniteRank, Exponential, Polynomial, Explicit };

/// Prescribed singular spectrum for synthetic test matrices. Exponential and
/// polynomial rates are stated for the eigenvalues nu_j of A A^T, so the
/// singular values decay as scale*exp(-rate*j/2) and scale*j^(-exponent).
struct SpectralProfile {
  DecayKind kind = DecayKind::Explicit;
  Index rank = 0;            // finite-rank only
  double decay_rate = 0.0;   // exponential: nu_j ~ exp(-decay_rate * j)
  double exponent = 0.0;     // polynomial: nu_j ~ j^(-2*exponent), exponent > 1/2
  double scale = 1.0;        // sigma_1 scale factor (e.g. sqrt(n))
  std::vector<double> values;

  static SpectralProfile finite_rank(Index rho, double scale = 1.0) {
    SpectralProfile p;
    p.kind = DecayKind::FiniteRank;
    p.rank = rho;
    p.scale = scale;
    return p;
  }
  static SpectralProfile exponential(double rate, double scale = 1.0) {
    SpectralProfile p;
    p.kind = DecayKind::Exponential;
    p.decay_rate = rate;
    p.scale = scale;
    return p;
  }
  static SpectralProfile polynomial(double exponent, double scale = 1.0) {
    SpectralProfile p;
    p.kind = DecayKind::Polynomial;
    p.exponent = exponent;
    p.scale = scale;
    return p;
  }
  static SpectralProfile explicit_values(std::vector<double> v) {
    SpectralProfile p;
    p.kind = DecayKind::Explicit;
    p.values = std::move(v);
    return p;
  }

  void validate() const {
    if (scale <= 0.0) throw std::invalid_argument("SpectralProfile: scale must be positive");
    switch (kind) {
      case DecayKind::FiniteRank:
        if (rank < 1) throw std::invalid_argument("SpectralProfile: finite-rank profile needs rank >= 1");
        break;
      case DecayKind::Exponential:
        if (decay_rate <= 0.0) throw std::invalid_argument("SpectralProfile: exponential decay rate must be positive");
        break;
      case DecayKind::Polynomial:
        if (exponent <= 0.5) throw std::invalid_argument("SpectralProfile: polynomial exponent must exceed 1/2");
        break;
      case DecayKind::Explicit: {
        if (values.empty()) throw std::invalid_argument("SpectralProfile: explicit profile needs values");
        double prev = std::numeric_limits<double>::infinity();
        for (double v : values) {
          if (!(v > 0.0)) throw std::invalid_argument("SpectralProfile: explicit values must be strictly positive");
          if (v > prev) throw std::invalid_argument("SpectralProfile: explicit values must be non-increasing");
          prev = v;
        }
        break;
      }
    }
  }

  /// Singular values sigma_1..sigma_count (1-based index into the decay law).
  Vector singular_values(Index count) const {
    validate();
    Vector s = Vector::Zero(count);
    for (Index j = 0; j < count; ++j) {
      const double jj = static_cast<double>(j + 1);
      switch (kind) {
        case DecayKind::FiniteRank:
          s[j] = (j < rank) ? scale : 0.0;
          break;
        case DecayKind::Exponential:
          s[j] = scale * std::exp(-0.5 * decay_rate * jj);
          break;
        case DecayKind::Polynomial:
          s[j] = scale * std::pow(jj, -exponent);
          break;
        case DecayKind::Explicit:
          s[j] = (j < static_cast<Index>(values.size())) ? values[static_cast<std::size_t>(j)] : 0.0;
          break;
      }
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Random matrices
// ---------------------------------------------------------------------------

/// i.i.d. standard normal entries, filled in column-major order so that a
/// wider draw from the same generator state is a column-wise extension.
inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

/// Matrix with orthonormal columns drawn uniformly (Haar) via the QR
/// factorization of a Gaussian matrix, with R's diagonal signs fixed.
inline Matrix random_orthonormal(Index rows, Index cols, Rng& rng) {
  if (cols > rows) throw std::invalid_argument("random_orthonormal: cols must not exceed rows");
  Matrix g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const auto r_diag = qr.matrixQR().diagonal();
  for (Index j = 0; j < cols; ++j)
    if (r_diag[j] < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// Synthetic n x d matrix A = U diag(sigma) V^T with Haar-random orthonormal
/// factors and the profile's singular values. Requires n <= d.
inline Matrix generate_decay_matrix(Index n, Index d, const SpectralProfile& profile,
                                    std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_decay_matrix: empty shape");
  if (n > d) throw std::invalid_argument("generate_decay_matrix: requires n <= d (transpose afterwards)");
  profile.validate();
  Vector sigma = profile.singular_values(n);
  Index r = 0;
  while (r < n && sigma[r] > 0.0) ++r;
  Rng rng(seed);
  Matrix u = random_orthonormal(n, r, rng);
  Matrix v = random_orthonormal(d, r, rng);
  return u * sigma.head(r).asDiagonal() * v.transpose();
}

// ---------------------------------------------------------------------------
// SVD
// ---------------------------------------------------------------------------

struct SvdFactors {
  Matrix left;      // n x r, orthonormal columns
  Vector singulars; // length r = min(n, d), non-increasing
  Matrix right_t;   // r x d, orthonormal rows
};

inline SvdFactors svd(const Matrix& a) {
  if (!is_finite(a)) throw std::invalid_argument("svd: input has non-finite entries");
  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw NumericalError("svd: decomposition failed to converge on a " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " matrix");
  return SvdFactors{dec.matrixU(), dec.singularValues(), dec.matrixV().transpose()};
}

/// Threshold under which singular values are treated as exactly zero:
/// max(rows, cols) * eps * sigma_max.
inline double rank_threshold(Index rows, Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

inline Index numerical_rank(const Vector& singulars, Index rows, Index cols) {
  if (singulars.size() == 0) return 0;
  const double thresh = rank_threshold(rows, cols, singulars[0]);
  Index r = 0;
  while (r < singulars.size() && singulars[r] > thresh) ++r;
  return r;
}

inline Index numerical_rank(const Matrix& a) {
  return numerical_rank(svd(a).singulars, a.rows(), a.cols());
}

/// Largest singular value (by full SVD; sizes here are desk scale).
inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::BDCSVD<Matrix>(a).singularValues()[0];
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------
//
// Binary layout, all little-endian: magic "ASKM", u32 version (= 1),
// u64 rows, u64 cols, then rows*cols f64 entries in row-major order.

enum class MatrixFormat { Csv, Binary };

namespace detail {

constexpr char kMagic[4] = {'A', 'S', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "matrix binary I/O assumes a little-endian host");

inline void write_exact(std::ofstream& out, const void* p, std::size_t bytes) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

}  // namespace detail

inline void save_matrix(const Matrix& a, const std::filesystem::path& path, MatrixFormat fmt) {
  if (!is_finite(a))
    throw std::invalid_argument("save_matrix: refusing to store non-finite entries");
  std::ofstream out(path, fmt == MatrixFormat::Binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("save_matrix: cannot open " + path.string());
  if (fmt == MatrixFormat::Binary) {
    const std::uint64_t rows = static_cast<std::uint64_t>(a.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(a.cols());
    detail::write_exact(out, detail::kMagic, 4);
    detail::write_exact(out, &detail::kVersion, 4);
    detail::write_exact(out, &rows, 8);
    detail::write_exact(out, &cols, 8);
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) {
        const double v = a(i, j);
        detail::write_exact(out, &v, 8);
      }
  } else {
    char buf[32];
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", a(i, j));
        if (j) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("save_matrix: write failed for " + path.string());
}

namespace detail {

inline Matrix load_binary(std::ifstream& in, const std::string& name) {
  auto fail = [&](const char* what, std::uint64_t offset) -> void {
    throw ParseError("load_matrix: " + name + ": " + what + " at byte " + std::to_string(offset));
  };
  char magic[4];
  if (!in.read(magic, 4)) fail("truncated header", 0);
  if (std::memcmp(magic, kMagic, 4) != 0) fail("bad magic bytes", 0);
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4)) fail("truncated header", 4);
  if (version != kVersion) fail("unsupported version", 4);
  std::uint64_t rows = 0, cols = 0;
  if (!in.read(reinterpret_cast<char*>(&rows), 8)) fail("truncated header", 8);
  if (!in.read(reinterpret_cast<char*>(&cols), 8)) fail("truncated header", 16);
  Matrix a(static_cast<Index>(rows), static_cast<Index>(cols));
  std::uint64_t offset = 24;
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), 8)) fail("truncated payload", offset);
      a(static_cast<Index>(i), static_cast<Index>(j)) = v;
      offset += 8;
    }
  return a;
}

inline Matrix load_csv(std::ifstream& in, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    std::vector<double> row;
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (true) {
      char* next = nullptr;
      const double v = std::strtod(p, &next);
      if (next == p)
        throw ParseError("load_matrix: " + name + ": expected a number at line " +
                         std::to_string(lineno));
      row.push_back(v);
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p >= end) break;
      if (*p != ',')
        throw ParseError("load_matrix: " + name + ": expected ',' at line " + std::to_string(lineno));
      ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("load_matrix: " + name + ": ragged row at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("load_matrix: " + name + ": empty file at line 1");
  Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return a;
}

}  // namespace detail

/// Loads either format; binary is detected by its magic bytes.
inline Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("load_matrix: cannot open " + path.string());
  char magic[4] = {};
  probe.read(magic, 4);
  const bool binary = probe.gcount() == 4 && std::memcmp(magic, detail::kMagic, 4) == 0;
  probe.close();
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  Matrix a = binary ? detail::load_binary(in, path.filename().string())
                    : detail::load_csv(in, path.filename().string());
  if (!is_finite(a))
    throw ParseError("load_matrix: " + path.filename().string() + ": non-finite entries");
  return a;
}

}  // namespace asketch
