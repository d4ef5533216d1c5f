#pragma once

// Scalar quantizers applied to distance errors, evaluated single-valued at
// their switching points.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rigidq/errors.hpp"

namespace rigidq {

enum class QuantizerKind { UniformSym, Logarithmic, Signum, UniformAsym };

inline constexpr QuantizerKind kAllQuantizerKinds[] = {
    QuantizerKind::UniformSym, QuantizerKind::Logarithmic, QuantizerKind::Signum,
    QuantizerKind::UniformAsym};

inline std::string_view to_string(QuantizerKind k) {
  switch (k) {
    case QuantizerKind::UniformSym: return "uniform-sym";
    case QuantizerKind::Logarithmic: return "logarithmic";
    case QuantizerKind::Signum: return "signum";
    case QuantizerKind::UniformAsym: return "uniform-asym";
  }
  return "?";
}

inline std::optional<QuantizerKind> parse_quantizer_kind(std::string_view s) {
  for (auto k : kAllQuantizerKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::UniformSym;
  /// delta_u; ignored by Signum.
  double gain = 0.5;
  /// Signum only: hold band epsilon_h. Zero disables hysteresis.
  double hysteresis = 0.0;

  bool uses_gain() const noexcept { return kind != QuantizerKind::Signum; }

  /// delta_l = exp(delta_u / 2) - 1.
  double log_gain() const { return std::expm1(gain / 2.0); }

  void validate() const {
    if (uses_gain() && !(gain > 0.0 && std::isfinite(gain)))
      throw ValidationError("quantizer gain must be finite and > 0");
    if (!(hysteresis >= 0.0 && std::isfinite(hysteresis)))
      throw ValidationError("hysteresis band must be finite and >= 0");
    if (hysteresis > 0.0 && kind != QuantizerKind::Signum)
      throw ValidationError("hysteresis is only defined for the signum quantizer");
  }

  friend bool operator==(const QuantizerSpec&, const QuantizerSpec&) = default;
};

namespace detail {

// Nearest integer with halves resolved downward: round(1/2 + h) = h.
inline double round_half_down(double a) { return std::ceil(a - 0.5); }

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

inline double quantize_uniform_sym(double gain, double x) {
  return gain * detail::round_half_down(x / gain);
}

inline double quantize_uniform_asym(double gain, double x) { return gain * std::floor(x / gain); }

inline double quantize_logarithmic(double gain, double x) {
  if (x == 0.0) return 0.0;
  const double mag = std::exp(quantize_uniform_sym(gain, std::log(std::abs(x))));
  return x > 0.0 ? mag : -mag;
}

/// Stateless evaluation. A Signum spec with a hysteresis band is evaluated
/// here without its memory; use SignumHysteresis for the stateful variant.
inline double quantize(const QuantizerSpec& q, double x) {
  switch (q.kind) {
    case QuantizerKind::UniformSym: return quantize_uniform_sym(q.gain, x);
    case QuantizerKind::Logarithmic: return quantize_logarithmic(q.gain, x);
    case QuantizerKind::Signum: return detail::sign(x);
    case QuantizerKind::UniformAsym: return quantize_uniform_asym(q.gain, x);
  }
  return 0.0;
}

/// Certified bound on |quantize(q, x) - x|.
inline double quantization_error_bound(const QuantizerSpec& q, double x) {
  switch (q.kind) {
    case QuantizerKind::UniformSym: return q.gain / 2.0;
    case QuantizerKind::Logarithmic: return q.log_gain() * std::abs(x);
    case QuantizerKind::Signum: return std::abs(x) + 1.0;
    case QuantizerKind::UniformAsym: return q.gain;
  }
  return 0.0;
}

/// Three-level quantizer with a hold band: the last output is kept while
/// |x| < band and refreshed to sign(x) once |x| >= band. The first call
/// always evaluates sign(x).
class SignumHysteresis {
 public:
  explicit SignumHysteresis(double band = 0.0) : band_(band) {}

  double operator()(double x) {
    if (!armed_ || std::abs(x) >= band_) {
      held_ = detail::sign(x);
      armed_ = true;
    }
    return held_;
  }

  double band() const noexcept { return band_; }

 private:
  double band_;
  double held_ = 0.0;
  bool armed_ = false;
};

/// Per-edge quantizer bank for one simulation run. Stateless kinds forward to
/// quantize(); Signum with a positive band keeps one memory cell per edge.
class EdgeQuantizers {
 public:
  EdgeQuantizers(const QuantizerSpec& spec, std::size_t edges) : spec_(spec) {
    spec_.validate();
    if (is_stateful()) cells_.assign(edges, SignumHysteresis(spec_.hysteresis));
  }

  bool is_stateful() const noexcept {
    return spec_.kind == QuantizerKind::Signum && spec_.hysteresis > 0.0;
  }

  double operator()(std::size_t edge, double x) {
    return is_stateful() ? cells_[edge](x) : quantize(spec_, x);
  }

  const QuantizerSpec& spec() const noexcept { return spec_; }

 private:
  QuantizerSpec spec_;
  std::vector<SignumHysteresis> cells_;
};

}  // namespace rigidq
