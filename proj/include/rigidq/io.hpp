#pragma once

// Trajectory CSVs and the convergence-report JSON. Floating-point values use
// the shortest round-trip representation, so identical runs produce
// byte-identical files.

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "rigidq/analysis.hpp"
#include "rigidq/dynamics.hpp"

namespace rigidq {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) return "nan";
  return std::string(buf, res.ptr);
}

/// Long format `t,agent,x,y,z`, agents 1-based; planar runs write z = 0.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,agent,x,y,z\n";
  for (const auto& s : traj.samples) {
    const auto t = format_double(s.t);
    for (Eigen::Index j = 0; j < s.positions.cols(); ++j) {
      os << t << ',' << (j + 1);
      for (Eigen::Index i = 0; i < 3; ++i)
        os << ',' << format_double(i < s.positions.rows() ? s.positions(i, j) : 0.0);
      os << '\n';
    }
  }
}

/// `t,e_1..e_m,V,maxu`.
inline void write_errors_csv(std::ostream& os, const Trajectory& traj) {
  os << 't';
  for (std::size_t k = 0; k < traj.graph->edge_count(); ++k) os << ",e_" << (k + 1);
  os << ",V,maxu\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (double e : s.errors) os << ',' << format_double(e);
    os << ',' << format_double(s.lyapunov) << ',' << format_double(s.max_control) << '\n';
  }
}

inline nlohmann::json to_json(const TargetSet& ts) {
  nlohmann::json j{{"kind", ts.name()}};
  if (ts.kind == TargetSet::Kind::Exact)
    j["tol"] = ts.parameter;
  else
    j["delta_u"] = ts.parameter;
  return j;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
  using nlohmann::json;
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  return {{"converged", r.converged},
          {"t_converged", opt(r.t_converged)},
          {"target_set", to_json(r.target_set)},
          {"t_star_bound", opt(r.t_star_bound)},
          {"final_errors", r.final_errors},
          {"lyapunov_monotone", r.lyapunov_monotone},
          {"stationary", opt(r.stationary)},
          {"lambda_min", opt(r.lambda_min)},
          {"bound_violated", r.bound_violated}};
}

}  // namespace rigidq
