#pragma once

// Poincare ball kernels (curvature -1). Every function is pure and works on
// ambient coordinates in double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hypw2v/error.hpp"

namespace hypw2v::geometry {

using ConstVec = std::span<const double>;
using MutVec = std::span<double>;

/// Largest admissible norm is 1 - kBallEpsilon.
inline constexpr double kBallEpsilon = 1e-5;
/// Distances below this make distance_gradient singular.
inline constexpr double kDerivativeGuard = 1e-8;
/// h_apply saturates above this distance.
inline constexpr double kOverflowGuard = 20.0;

inline double dot(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(ConstVec a) { return dot(a, a); }
inline double norm(ConstVec a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

namespace detail {

inline void require_finite(ConstVec x, const char* name) {
  for (double c : x) {
    if (!std::isfinite(c)) throw DomainError(std::string(name) + " has a non-finite coordinate");
  }
}

inline void require_same_dim(ConstVec x, ConstVec y) {
  if (x.size() != y.size()) {
    throw DomainError("dimension mismatch: " + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()));
  }
}

// Returns ||x||^2 after checking x is finite and strictly inside the unit ball.
inline double require_in_ball(ConstVec x, const char* name) {
  require_finite(x, name);
  const double sq = squared_norm(x);
  if (!(sq < 1.0)) {
    throw DomainError(std::string(name) + " lies outside the open unit ball (norm " +
                      std::to_string(std::sqrt(sq)) + ")");
  }
  return sq;
}

// arcosh(1 + delta) = ln(w + sqrt(w^2 - 1)) with w = 1 + delta, delta clamped to >= 0.
inline double arcosh_one_plus(double delta) {
  delta = std::max(delta, 0.0);
  return std::log1p(delta + std::sqrt(delta * (2.0 + delta)));
}

// Rescales x in place so that its computed norm does not exceed max_norm.
inline void clip_norm(MutVec x, double max_norm) {
  double n = norm(x);
  if (n <= max_norm) return;
  double scale = max_norm / n;
  for (double& c : x) c *= scale;
  // Rounding in the rescale can leave the norm one ulp above the bound.
  while ((n = norm(x)) > max_norm) {
    scale = std::nextafter(max_norm / n, 0.0);
    for (double& c : x) c *= scale;
  }
}

// Mobius addition without input validation; y may sit on the boundary.
inline void mobius_add_unchecked(ConstVec x, ConstVec y, MutVec out) {
  const double xy = dot(x, y);
  const double xx = squared_norm(x);
  const double yy = squared_norm(y);
  const double a = 1.0 + 2.0 * xy + yy;
  const double b = 1.0 - xx;
  const double denom = 1.0 + 2.0 * xy + xx * yy;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a * x[i] + b * y[i]) / denom;
}

}  // namespace detail

/// lambda_x = 2 / (1 - ||x||^2).
inline double conformal_factor(ConstVec x) {
  const double sq = detail::require_in_ball(x, "x");
  return 2.0 / (1.0 - sq);
}

/// Geodesic distance arcosh(1 + 2||x-y||^2 / ((1-||x||^2)(1-||y||^2))).
inline double poincare_distance(ConstVec x, ConstVec y) {
  detail::require_same_dim(x, y);
  const double xx = detail::require_in_ball(x, "x");
  const double yy = detail::require_in_ball(y, "y");
  const double delta = 2.0 * squared_distance(x, y) / ((1.0 - xx) * (1.0 - yy));
  return detail::arcosh_one_plus(delta);
}

/// Ambient partial derivative of poincare_distance(x, y) with respect to x, written into out.
/// Throws SingularityError when d(x, y) < kDerivativeGuard.
inline void distance_gradient(ConstVec x, ConstVec y, MutVec out) {
  detail::require_same_dim(x, y);
  detail::require_same_dim(x, out);
  const double xx = detail::require_in_ball(x, "x");
  const double yy = detail::require_in_ball(y, "y");
  const double alpha = 1.0 - xx;
  const double beta = 1.0 - yy;
  const double delta = 2.0 * squared_distance(x, y) / (alpha * beta);
  if (detail::arcosh_one_plus(delta) < kDerivativeGuard) {
    throw SingularityError("distance gradient at coincident points");
  }
  // d/dx arcosh(gamma) = gamma' / sqrt(gamma^2 - 1), gamma = 1 + delta.
  const double root = std::sqrt(delta * (2.0 + delta));
  const double coef = 4.0 / (beta * root);
  const double cx = (yy - 2.0 * dot(x, y) + 1.0) / (alpha * alpha);
  const double cy = 1.0 / alpha;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = coef * (cx * x[i] - cy * y[i]);
}

inline std::vector<double> distance_gradient(ConstVec x, ConstVec y) {
  std::vector<double> out(x.size());
  distance_gradient(x, y, out);
  return out;
}

/// Mobius addition x (+) y. The result is projected to norm 1 - ball_epsilon if rounding
/// pushes it outward.
inline std::vector<double> mobius_add(ConstVec x, ConstVec y, double ball_epsilon = kBallEpsilon) {
  detail::require_same_dim(x, y);
  detail::require_in_ball(x, "x");
  detail::require_in_ball(y, "y");
  std::vector<double> out(x.size());
  detail::mobius_add_unchecked(x, y, out);
  detail::clip_norm(out, 1.0 - ball_epsilon);
  return out;
}

/// Exponential map exp_x(v) = x (+) tanh(lambda_x ||v|| / 2) v / ||v||, written into out.
/// out may alias x.
inline void exp_map(ConstVec x, ConstVec v, MutVec out, double ball_epsilon = kBallEpsilon) {
  detail::require_same_dim(x, v);
  detail::require_same_dim(x, out);
  const double xx = detail::require_in_ball(x, "x");
  detail::require_finite(v, "v");
  const double vn = norm(v);
  if (vn == 0.0) {
    if (out.data() != x.data()) std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const double lambda = 2.0 / (1.0 - xx);
  const double t = std::tanh(lambda * vn / 2.0) / vn;
  std::vector<double> step(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) step[i] = t * v[i];
  std::vector<double> tmp(x.size());
  detail::mobius_add_unchecked(x, step, tmp);
  detail::clip_norm(tmp, 1.0 - ball_epsilon);
  std::copy(tmp.begin(), tmp.end(), out.begin());
}

inline std::vector<double> exp_map(ConstVec x, ConstVec v, double ball_epsilon = kBallEpsilon) {
  std::vector<double> out(x.size());
  exp_map(x, v, out, ball_epsilon);
  return out;
}

/// Rescales x onto the sphere of radius 1 - ball_epsilon when it lies beyond it.
inline std::vector<double> project_to_ball(ConstVec x, double ball_epsilon = kBallEpsilon) {
  if (!(ball_epsilon > 0.0 && ball_epsilon < 1.0)) {
    throw DomainError("ball_epsilon must lie in (0, 1)");
  }
  detail::require_finite(x, "x");
  std::vector<double> out(x.begin(), x.end());
  detail::clip_norm(out, 1.0 - ball_epsilon);
  return out;
}

/// Inverse-metric scaling (1 - ||x||^2)^2 / 4 that turns a Euclidean gradient into a
/// Riemannian one.
inline double riemannian_scale(ConstVec x) {
  const double sq = detail::require_in_ball(x, "x");
  const double a = 1.0 - sq;
  return a * a / 4.0;
}

inline std::vector<double> riemannian_rescale(ConstVec x, ConstVec euclidean_grad) {
  detail::require_same_dim(x, euclidean_grad);
  detail::require_finite(euclidean_grad, "gradient");
  const double s = riemannian_scale(x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * euclidean_grad[i];
  return out;
}

struct HValue {
  double value;
  double derivative;
};

/// h(d) = cosh^2(d) and h'(d) = sinh(2d).
inline HValue h_apply(double d) {
  if (!(d >= 0.0)) throw DomainError("h_apply requires a nonnegative distance");
  if (d > kOverflowGuard) {
    throw SaturationError("h_apply: distance " + std::to_string(d) + " exceeds overflow guard");
  }
  const double c = std::cosh(d);
  return {c * c, std::sinh(2.0 * d)};
}

}  // namespace hypw2v::geometry
