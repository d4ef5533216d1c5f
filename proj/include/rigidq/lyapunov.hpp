#pragma once

// Closed-form Lyapunov function V(e) = sum_k int_0^{e_k} q(s) ds for each
// quantizer staircase.

#include <cmath>
#include <span>

#include "rigidq/quantizer.hpp"

namespace rigidq {

namespace detail {

// int_0^a q_u for a >= 0. Cell n covers ((n - 1/2) g, (n + 1/2) g] with value
// n g; the integral is continuous, so the boundary convention does not matter.
inline double uniform_sym_integral(double g, double a) {
  const double k = std::floor(a / g + 0.5);
  if (k <= 0.0) return 0.0;
  return g * g * k * (k - 1.0) / 2.0 + k * g * (a - (k - 0.5) * g);
}

// int_0^e q* for the floor staircase (value n g on [n g, (n+1) g)).
inline double uniform_asym_integral(double g, double e) {
  if (e >= 0.0) {
    const double k = std::floor(e / g);
    return g * g * k * (k - 1.0) / 2.0 + k * g * (e - k * g);
  }
  // -q* = m g on (-(m) g, -(m-1) g]
  const double a = -e;
  const double m = std::ceil(a / g);
  return g * g * m * (m - 1.0) / 2.0 + m * g * (a - (m - 1.0) * g);
}

// int_0^a q_l for a > 0. In log space cell j spans ((j-1/2) g, (j+1/2) g] with
// value exp(j g); the cells below the one containing ln a form a geometric
// series: sum_{j<k} exp(2 j g) * 2 sinh(g/2).
inline double logarithmic_integral(double g, double a) {
  if (a <= 0.0) return 0.0;
  const double k = std::floor(std::log(a) / g + 0.5);
  const double below = 2.0 * std::sinh(g / 2.0) * std::exp(2.0 * (k - 1.0) * g) /
                       (-std::expm1(-2.0 * g));
  return below + std::exp(k * g) * (a - std::exp((k - 0.5) * g));
}

}  // namespace detail

/// V_k(e_k) = int_0^{e_k} q(s) ds.
inline double lyapunov_term(const QuantizerSpec& q, double e) {
  switch (q.kind) {
    case QuantizerKind::UniformSym: return detail::uniform_sym_integral(q.gain, std::abs(e));
    case QuantizerKind::Logarithmic: return detail::logarithmic_integral(q.gain, std::abs(e));
    case QuantizerKind::Signum: return std::abs(e);
    case QuantizerKind::UniformAsym: return detail::uniform_asym_integral(q.gain, e);
  }
  return 0.0;
}

inline double lyapunov(const QuantizerSpec& q, std::span<const double> e) {
  double v = 0.0;
  for (double ek : e) v += lyapunov_term(q, ek);
  return v;
}

}  // namespace rigidq
