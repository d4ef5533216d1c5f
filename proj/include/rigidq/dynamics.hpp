#pragma once

// Gradient formation controller on quantized distance errors with unquantized
// bearings, plus its fixed-step explicit Euler discretisation.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigidq/graph.hpp"
#include "rigidq/lyapunov.hpp"
#include "rigidq/quantizer.hpp"

namespace rigidq {

/// Velocity commands, one column per agent (d x n).
using ControlInput = Points;

/// Stack-allocated vector of at most three components.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

struct IntegratorConfig {
  double step = 1e-3;
  double duration = 50.0;

  void validate() const {
    if (!(step > 0.0 && std::isfinite(step))) throw ValidationError("integrator step must be > 0");
    if (!(duration > 0.0 && std::isfinite(duration)))
      throw ValidationError("integrator duration must be > 0");
    if (step > duration) throw ValidationError("integrator step must not exceed the duration");
  }

  /// Number of Euler steps that cover the duration.
  std::size_t steps() const { return static_cast<std::size_t>(std::llround(duration / step)); }

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

/// e_k = |z_k| - d_k in edge order.
inline std::vector<double> distance_errors(const FormationGraph& g, const Points& p) {
  std::vector<double> e(g.edge_count());
  for (std::size_t k = 0; k < e.size(); ++k)
    e[k] = (p.col(g.edges()[k].head) - p.col(g.edges()[k].tail)).norm() - g.desired()[k];
  return e;
}

inline std::vector<double> distance_errors(const Framework& f) {
  return distance_errors(f.graph(), f.positions());
}

/// u_i = -sum_k b_ik q(e_k) zhat_k written into `u`; the errors e_k go to
/// `errors`. `quant(k, e_k)` supplies the quantized error of edge k.
template <class EdgeQuant>
void control_into(const FormationGraph& g, const Points& p, EdgeQuant&& quant, ControlInput& u,
                  std::span<double> errors) {
  u.setZero(p.rows(), p.cols());
  const auto& edges = g.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto tail = static_cast<Eigen::Index>(edges[k].tail);
    const auto head = static_cast<Eigen::Index>(edges[k].head);
    const Vec z = p.col(head) - p.col(tail);
    const double len = z.norm();
    if (!(len > kCollocationThreshold)) throw CollocatedAgents(k);
    const double ek = len - g.desired()[k];
    errors[k] = ek;
    const double qk = quant(k, ek);
    if (qk == 0.0) continue;
    const double w = qk / len;
    // b_tail = -1, b_head = +1
    u.col(tail) += w * z;
    u.col(head) -= w * z;
  }
}

inline ControlInput control(const Framework& f, const QuantizerSpec& q) {
  q.validate();
  ControlInput u;
  std::vector<double> e(f.graph().edge_count());
  control_into(
      f.graph(), f.positions(), [&](std::size_t, double x) { return quantize(q, x); }, u, e);
  return u;
}

/// Stateful overload; advances the per-edge memory of `q`.
inline ControlInput control(const Framework& f, EdgeQuantizers& q) {
  ControlInput u;
  std::vector<double> e(f.graph().edge_count());
  control_into(f.graph(), f.positions(), q, u, e);
  return u;
}

inline double max_agent_norm(const ControlInput& u) {
  return u.cols() ? u.colwise().norm().maxCoeff() : 0.0;
}

/// One explicit Euler step p + h u(p).
inline Framework step(const Framework& f, const QuantizerSpec& q, const IntegratorConfig& cfg) {
  cfg.validate();
  const ControlInput u = control(f, q);
  return f.with_positions(f.positions() + cfg.step * u);
}

// ---------------------------------------------------------------------------
// Trajectories

struct Sample {
  std::size_t step = 0;
  double t = 0.0;
  Points positions;
  std::vector<double> errors;
  double lyapunov = 0.0;
  /// max_i |u_i| evaluated at this sample's positions.
  double max_control = 0.0;
  Eigen::VectorXd centroid;
};

struct Trajectory {
  std::shared_ptr<const FormationGraph> graph;
  QuantizerSpec quantizer;
  IntegratorConfig integrator;
  std::size_t decimation = 1;
  std::vector<Sample> samples;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::string> warnings;

  const Sample& initial() const { return samples.front(); }
  const Sample& final() const { return samples.back(); }
};

/// Read-only view handed to probes after every integrator step's control
/// evaluation (including the terminal state).
struct StepState {
  std::size_t step;
  double t;
  const Points& positions;
  const ControlInput& control;
  std::span<const double> errors;
};

using Probe = std::function<void(const StepState&)>;

struct SimulationOptions {
  IntegratorConfig integrator;
  /// Record every `decimation`-th step; the first and last states are always kept.
  std::size_t decimation = 1;
};

/// Drives the Euler scheme from f0. The run is deterministic. A collocation
/// during integration ends the run with `aborted` set and the partial
/// trajectory kept.
inline Trajectory simulate(const Framework& f0, const QuantizerSpec& q,
                           const SimulationOptions& opts, std::span<const Probe> probes = {}) {
  q.validate();
  opts.integrator.validate();
  if (opts.decimation == 0) throw ValidationError("decimation must be >= 1");

  Trajectory traj;
  traj.graph = f0.graph_ptr();
  traj.quantizer = q;
  traj.integrator = opts.integrator;
  traj.decimation = opts.decimation;

  const auto& g = f0.graph();
  if (g.edge_count() > 0) {
    const auto rig = rigidity_check(f0);
    if (!rig.infinitesimally_rigid || !rig.minimally_rigid)
      traj.warnings.push_back("initial framework is not infinitesimally minimally rigid (rank " +
                              std::to_string(rig.rank) + ")");
  }

  const double h = opts.integrator.step;
  const std::size_t total = opts.integrator.steps();
  EdgeQuantizers quant(q, g.edge_count());
  Points p = f0.positions();
  ControlInput u;
  std::vector<double> e(g.edge_count());
  traj.samples.reserve(total / opts.decimation + 2);

  for (std::size_t i = 0; i <= total; ++i) {
    const double t = static_cast<double>(i) * h;
    try {
      control_into(g, p, quant, u, e);
    } catch (const CollocatedAgents& err) {
      traj.aborted = true;
      traj.abort_reason = std::string(err.what()) + " at t=" + std::to_string(t);
      break;
    }
    if (i % opts.decimation == 0 || i == total) {
      Sample s;
      s.step = i;
      s.t = t;
      s.positions = p;
      s.errors = e;
      s.lyapunov = lyapunov(q, e);
      s.max_control = max_agent_norm(u);
      s.centroid = p.rowwise().mean();
      traj.samples.push_back(std::move(s));
    }
    const StepState state{i, t, p, u, e};
    for (const auto& probe : probes) probe(state);
    if (i < total) p += h * u;
  }
  return traj;
}

inline Trajectory simulate(const Framework& f0, const QuantizerSpec& q,
                           const IntegratorConfig& cfg) {
  return simulate(f0, q, SimulationOptions{cfg, 1});
}

}  // namespace rigidq
