#pragma once

#include <asketch/matrices.hpp>

#include <functional>
#include <utility>

namespace asketch {

// Losses are coordinate-separable, f(w) = (1/n) sum_i l_i(w_i) up to the
// quadratic case, which keeps Hessians diagonal and sketched Newton steps
// cheap. `coordinate_slope(w_i, i)` returns n * gradient_i, i.e. the slope of
// the per-sample term, which is what mini-batch estimators average.

/// Convex loss with gradient, diagonal Hessian and smoothness bound mu
/// (hessian_diagonal <= mu entrywise everywhere).
struct SmoothObjective {
  std::string name;
  Vector labels;
  Index dim = 0;
  double mu = 0.0;
  bool constant_hessian = false;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&)> hessian_diagonal;
  std::function<double(double, Index)> coordinate_slope;
};

/// Convex, possibly non-smooth loss with a subgradient oracle and Lipschitz
/// constant L with respect to the Euclidean norm.
struct LipschitzObjective {
  std::string name;
  Vector labels;
  Index dim = 0;
  double lipschitz = 0.0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgradient;
};

namespace detail {

inline double log1pexp(double z) {
  // stable softplus: max(z, 0) + log(1 + exp(-|z|))
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// Binary logistic loss, f(w) = (1/n) sum_i [y_i log(1+e^{-w_i}) +
/// (1-y_i) log(1+e^{w_i})], with mu = 1/(4n).
inline SmoothObjective logistic_objective(const Vector& y) {
  const Index n = y.size();
  if (n == 0) throw std::invalid_argument("logistic_objective: empty labels");
  for (Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("logistic_objective: labels must lie in {0,1}");
  SmoothObjective f;
  f.name = "logistic";
  f.labels = y;
  f.dim = n;
  f.mu = 1.0 / (4.0 * static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  f.value = [y, inv_n](const Vector& w) {
    double acc = 0.0;
    for (Index i = 0; i < w.size(); ++i)
      acc += y[i] * detail::log1pexp(-w[i]) + (1.0 - y[i]) * detail::log1pexp(w[i]);
    return inv_n * acc;
  };
  f.gradient = [y, inv_n](const Vector& w) {
    Vector g(w.size());
    for (Index i = 0; i < w.size(); ++i) g[i] = inv_n * (detail::sigmoid(w[i]) - y[i]);
    return g;
  };
  f.hessian_diagonal = [inv_n](const Vector& w) {
    Vector h(w.size());
    for (Index i = 0; i < w.size(); ++i) {
      const double s = detail::sigmoid(w[i]);
      h[i] = inv_n * s * (1.0 - s);
    }
    return h;
  };
  f.coordinate_slope = [y](double wi, Index i) { return detail::sigmoid(wi) - y[i]; };
  return f;
}

/// Convex relaxation of the ReLU fitting penalty,
/// f(w) = (1/2n) sum_i [(w_i)_+^2 - 2 w_i y_i], with mu = 1/n.
inline SmoothObjective relu_relaxation_objective(const Vector& y) {
  const Index n = y.size();
  if (n == 0 || !y.allFinite())
    throw std::invalid_argument("relu_relaxation_objective: labels must be finite and non-empty");
  SmoothObjective f;
  f.name = "relu";
  f.labels = y;
  f.dim = n;
  f.mu = 1.0 / static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  f.value = [y, inv_n](const Vector& w) {
    double acc = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
      const double p = std::max(w[i], 0.0);
      acc += p * p - 2.0 * w[i] * y[i];
    }
    return 0.5 * inv_n * acc;
  };
  f.gradient = [y, inv_n](const Vector& w) {
    Vector g(w.size());
    for (Index i = 0; i < w.size(); ++i) g[i] = inv_n * (std::max(w[i], 0.0) - y[i]);
    return g;
  };
  f.hessian_diagonal = [inv_n](const Vector& w) {
    Vector h(w.size());
    for (Index i = 0; i < w.size(); ++i) h[i] = w[i] > 0.0 ? inv_n : 0.0;
    return h;
  };
  f.coordinate_slope = [y](double wi, Index i) { return std::max(wi, 0.0) - y[i]; };
  return f;
}

/// f(w) = 1/2 ||w - b||^2; mu = 1. Closed-form primal solutions make this the
/// oracle workhorse: x* = (A^T A + lambda I)^{-1} A^T b.
inline SmoothObjective quadratic_objective(const Vector& b) {
  const Index n = b.size();
  if (n == 0 || !b.allFinite())
    throw std::invalid_argument("quadratic_objective: target must be finite and non-empty");
  SmoothObjective f;
  f.name = "quadratic";
  f.labels = b;
  f.dim = n;
  f.mu = 1.0;
  f.constant_hessian = true;
  f.value = [b](const Vector& w) { return 0.5 * (w - b).squaredNorm(); };
  f.gradient = [b](const Vector& w) -> Vector { return w - b; };
  f.hessian_diagonal = [](const Vector& w) -> Vector { return Vector::Ones(w.size()); };
  const double n_d = static_cast<double>(n);
  f.coordinate_slope = [b, n_d](double wi, Index i) { return n_d * (wi - b[i]); };
  return f;
}

/// f(w) = (1/n) sum_i |w_i - y_i|, L = 1/sqrt(n). Subgradient is 0 at ties.
inline LipschitzObjective absolute_deviation_objective(const Vector& y) {
  const Index n = y.size();
  if (n == 0 || !y.allFinite())
    throw std::invalid_argument("absolute_deviation_objective: labels must be finite and non-empty");
  LipschitzObjective f;
  f.name = "absolute-deviation";
  f.labels = y;
  f.dim = n;
  f.lipschitz = 1.0 / std::sqrt(static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  f.value = [y, inv_n](const Vector& w) { return inv_n * (w - y).cwiseAbs().sum(); };
  f.subgradient = [y, inv_n](const Vector& w) {
    Vector g(w.size());
    for (Index i = 0; i < w.size(); ++i) {
      const double r = w[i] - y[i];
      g[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
    }
    return g;
  };
  return f;
}

}  // namespace asketch
