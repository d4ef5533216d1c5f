#pragma once

// Certificates evaluated on frameworks and trajectories: the error-system
// matrix Q(e), its smallest eigenvalue, the finite-time bound for the signum
// controller, convergence-set membership with a dwell window, and the
// closed-form two-agent behaviour under the floor quantizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigidq/dynamics.hpp"
#include "rigidq/graph.hpp"
#include "rigidq/lyapunov.hpp"
#include "rigidq/quantizer.hpp"

namespace rigidq {

/// Consecutive integrator steps a trajectory must stay in a target set.
inline constexpr std::size_t kDwellSteps = 100;

/// Slack on the boundaries of the residual boxes F_approx and F_asym.
inline constexpr double kMembershipSlack = 1e-9;

/// Allowed Lyapunov increase per integrator step, as a multiple of h.
inline constexpr double kLyapunovSlackPerStep = 1e-3;

/// Q(e) = D_ztilde R R^T D_ztilde (m x m). Rows of R are scaled by 1/|z_k|,
/// so every diagonal entry equals 2.
inline Eigen::MatrixXd q_matrix(const FormationGraph& g, const Points& p) {
  Eigen::MatrixXd r = rigidity_matrix(g, p);
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    const auto& e = g.edges()[static_cast<std::size_t>(k)];
    const double len = (p.col(e.head) - p.col(e.tail)).norm();
    if (!(len > kCollocationThreshold)) throw CollocatedAgents(static_cast<std::size_t>(k));
    r.row(k) /= len;
  }
  return r * r.transpose();
}

inline Eigen::MatrixXd q_matrix(const Framework& f) { return q_matrix(f.graph(), f.positions()); }

/// Smallest eigenvalue of a symmetric matrix from a full eigendecomposition.
inline double smallest_eigenvalue(const Eigen::MatrixXd& sym) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Smallest eigenvalue of a symmetric positive semidefinite matrix by inverse
/// power iteration on a slightly shifted LDL^T factorisation. Returns the
/// Rayleigh quotient of the converged iterate.
inline double smallest_eigenvalue_inverse_power(const Eigen::MatrixXd& sym, double rel_tol = 1e-14,
                                                int max_iter = 20000) {
  const Eigen::Index n = sym.rows();
  if (n == 0) throw std::invalid_argument("empty matrix");
  const double scale = std::max(sym.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double shift = 1e-13 * scale;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sym + shift * Eigen::MatrixXd::Identity(n, n));

  // deterministic start vector with components in every direction
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * static_cast<double>(i);
  x.normalize();
  double lambda = x.dot(sym * x);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = ldlt.solve(x);
    const double ny = y.norm();
    if (!(ny > 0.0) || !std::isfinite(ny)) break;
    x = y / ny;
    const double next = x.dot(sym * x);
    const bool done = std::abs(next - lambda) <= rel_tol * scale;
    lambda = next;
    if (done && it > 2) break;
  }
  return lambda;
}

/// T* = |e(0)|_1 / lambda_min. Throws NonPositiveEigenvalue if lambda_min <= 0.
inline double finite_time_bound(std::span<const double> initial_errors, double lambda_min) {
  if (!(lambda_min > 0.0))
    throw NonPositiveEigenvalue("lambda_min must be > 0; the framework left the rigid region");
  double l1 = 0.0;
  for (double e : initial_errors) l1 += std::abs(e);
  return l1 / lambda_min;
}

inline double finite_time_bound(const Framework& f0, double lambda_min) {
  const auto e = distance_errors(f0);
  return finite_time_bound(e, lambda_min);
}

// ---------------------------------------------------------------------------
// Convergence reports

struct TargetSet {
  enum class Kind { Exact, FApprox, FAsym };
  Kind kind = Kind::Exact;
  /// tol for Exact, delta_u for the residual boxes.
  double parameter = 0.0;

  bool contains(std::span<const double> e) const {
    for (double ek : e) {
      switch (kind) {
        case Kind::Exact:
          if (!(std::abs(ek) <= parameter)) return false;
          break;
        case Kind::FApprox:
          if (!(std::abs(ek) <= parameter / 2.0 + kMembershipSlack)) return false;
          break;
        case Kind::FAsym:
          if (!(ek >= -kMembershipSlack && ek <= parameter + kMembershipSlack)) return false;
          break;
      }
    }
    return true;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Exact: return "exact";
      case Kind::FApprox: return "F_approx";
      case Kind::FAsym: return "F_asym";
    }
    return "?";
  }

  friend bool operator==(const TargetSet&, const TargetSet&) = default;
};

/// Chattering band c*h with c = 10 max_i |N_i| used as the signum target.
inline double signum_chatter_band(const FormationGraph& g, double step) {
  return 10.0 * static_cast<double>(g.max_degree()) * step;
}

inline TargetSet target_set_for(const QuantizerSpec& q, const FormationGraph& g, double step,
                                double tol) {
  switch (q.kind) {
    case QuantizerKind::UniformSym: return {TargetSet::Kind::FApprox, q.gain};
    case QuantizerKind::Logarithmic: return {TargetSet::Kind::Exact, tol};
    case QuantizerKind::Signum: return {TargetSet::Kind::Exact, signum_chatter_band(g, step)};
    case QuantizerKind::UniformAsym: return {TargetSet::Kind::FAsym, q.gain};
  }
  return {};
}

struct ConvergenceReport {
  bool converged = false;
  std::optional<double> t_converged;
  TargetSet target_set;
  /// Signum only.
  std::optional<double> t_star_bound;
  std::vector<double> final_errors;
  bool lyapunov_monotone = true;
  /// Max |u_i| stayed <= tol from t_converged on. Not reported for signum,
  /// whose chattering persists after convergence.
  std::optional<bool> stationary;
  /// Minimum sampled lambda_min(Q(e(t))); signum only.
  std::optional<double> lambda_min;
  /// t_converged exceeded t_star_bound.
  bool bound_violated = false;
};

/// Smallest lambda_min(Q) over the recorded samples.
inline double min_sampled_lambda(const Trajectory& traj) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples)
    lo = std::min(lo, smallest_eigenvalue(q_matrix(*traj.graph, s.positions)));
  return lo;
}

/// Applies the quantizer's target set to a trajectory. Converged means the
/// trajectory entered the set and stayed in it through the last sample for
/// at least kDwellSteps integrator steps; t_converged is that entry time.
inline ConvergenceReport check_convergence(const Trajectory& traj, const QuantizerSpec& q,
                                           double tol) {
  ConvergenceReport rep;
  if (traj.samples.empty()) return rep;
  const auto& g = *traj.graph;
  const double h = traj.integrator.step;
  rep.target_set = target_set_for(q, g, h, tol);
  rep.final_errors = traj.final().errors;

  // start of the final uninterrupted run inside the set
  std::optional<std::size_t> entry;
  for (std::size_t i = traj.samples.size(); i-- > 0;) {
    if (!rep.target_set.contains(traj.samples[i].errors)) break;
    entry = i;
  }
  if (!traj.aborted && entry &&
      traj.final().step - traj.samples[*entry].step >= kDwellSteps) {
    rep.converged = true;
    rep.t_converged = traj.samples[*entry].t;
  }

  const bool is_signum = q.kind == QuantizerKind::Signum;
  // the signum run chatters once converged; monotonicity is judged before that
  const std::size_t mono_end =
      is_signum && rep.converged ? *entry : traj.samples.size() - 1;
  for (std::size_t i = 0; i < mono_end; ++i) {
    const auto& a = traj.samples[i];
    const auto& b = traj.samples[i + 1];
    const double slack = kLyapunovSlackPerStep * h * static_cast<double>(b.step - a.step);
    if (b.lyapunov - a.lyapunov > slack) {
      rep.lyapunov_monotone = false;
      break;
    }
  }

  if (!is_signum && rep.converged) {
    bool still = true;
    for (std::size_t i = *entry; i < traj.samples.size(); ++i)
      if (!(traj.samples[i].max_control <= tol)) still = false;
    rep.stationary = still;
  } else if (!is_signum) {
    rep.stationary = false;
  }

  if (is_signum) {
    rep.lambda_min = min_sampled_lambda(traj);
    if (*rep.lambda_min > 0.0) {
      rep.t_star_bound = finite_time_bound(traj.initial().errors, *rep.lambda_min);
      if (rep.converged) rep.bound_violated = *rep.t_converged > *rep.t_star_bound;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two agents under the floor quantizer

struct TwoAgentPrediction {
  double final_distance = 0.0;
  /// Agents never move.
  bool stationary = false;
};

/// Limit of the inter-agent distance for one edge of desired length d12
/// driven by the floor quantizer with gain delta_u.
inline TwoAgentPrediction two_agent_oracle(double initial_distance, double d12, double delta_u) {
  if (!(initial_distance > 0.0)) throw ValidationError("initial distance must be > 0");
  if (!(delta_u > 0.0)) throw ValidationError("quantizer gain must be > 0");
  const double e = initial_distance - d12;
  // e >= delta_u quantizes to at least delta_u and contracts until e < delta_u;
  // e < 0 quantizes negative and expands until e >= 0.
  if (e >= delta_u) return {d12 + delta_u, false};
  if (e < 0.0) return {d12, false};
  return {initial_distance, true};
}

// ---------------------------------------------------------------------------
// Geometry helpers for structural invariants

/// Dimension of the affine hull of the columns of p.
inline std::size_t affine_rank(const Points& p, double rel_tol = kRankRelTol) {
  const Eigen::MatrixXd centered = p.colwise() - p.rowwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

}  // namespace rigidq
