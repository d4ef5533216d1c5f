#pragma once

// Sensing topology and target shape of a distance-based formation: the
// oriented incidence matrix, relative positions, the rigidity matrix and the
// rank test for infinitesimal / minimal rigidity.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rigidq/errors.hpp"

namespace rigidq {

/// Agent positions, one column per agent (d x n). Column-major storage makes
/// the raw buffer equal to the stacked vector p = [p_1; ...; p_n].
using Points = Eigen::MatrixXd;

/// Minimum edge length below which two agents count as collocated.
inline constexpr double kCollocationThreshold = 1e-9;

/// Relative rank tolerance: a singular value counts iff sigma > tol * sigma_max.
inline constexpr double kRankRelTol = 1e-8;

/// Oriented edge with 0-based vertex indices; z = p[head] - p[tail].
struct Edge {
  std::size_t tail = 0;
  std::size_t head = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected graph with oriented edges, desired edge lengths and an ambient
/// dimension. Immutable once built; the constructor enforces every invariant.
class FormationGraph {
 public:
  FormationGraph(std::size_t n, int dim, std::vector<Edge> edges, std::vector<double> desired)
      : n_(n), dim_(dim), edges_(std::move(edges)), desired_(std::move(desired)) {
    validate();
    degree_.assign(n_, 0);
    for (const auto& e : edges_) {
      ++degree_[e.tail];
      ++degree_[e.head];
    }
  }

  /// Orients every pair with tail = smaller index.
  static FormationGraph canonical(std::size_t n, int dim,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                  std::vector<double> desired) {
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (auto [a, b] : pairs) edges.push_back({std::min(a, b), std::max(a, b)});
    return FormationGraph(n, dim, std::move(edges), std::move(desired));
  }

  std::size_t agents() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  int dim() const noexcept { return dim_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<double>& desired() const noexcept { return desired_; }

  /// |N_i|, the number of neighbours of agent i.
  std::size_t degree(std::size_t i) const { return degree_.at(i); }
  std::size_t max_degree() const {
    return degree_.empty() ? 0 : *std::max_element(degree_.begin(), degree_.end());
  }

  /// Rank of an infinitesimally rigid framework, which is also the edge count
  /// of a minimally rigid one: 2n-3 (plane) or 3n-6 (space) once n >= d, and
  /// n(n-1)/2 for the complete graphs on fewer agents.
  std::size_t rigid_edge_count() const {
    const auto d = static_cast<std::size_t>(dim_);
    if (n_ >= d) return d * n_ - d * (d + 1) / 2;
    return n_ * (n_ - 1) / 2;
  }

  friend bool operator==(const FormationGraph& a, const FormationGraph& b) {
    return a.n_ == b.n_ && a.dim_ == b.dim_ && a.edges_ == b.edges_ && a.desired_ == b.desired_;
  }

 private:
  void validate() const {
    if (dim_ != 2 && dim_ != 3) throw ValidationError("dimension must be 2 or 3");
    if (n_ == 0) throw ValidationError("graph needs at least one agent");
    if (desired_.size() != edges_.size())
      throw ValidationError("one desired distance is required per edge");

    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      const std::string tag = "edge " + std::to_string(k + 1);
      if (e.tail >= n_ || e.head >= n_) throw ValidationError(tag + ": vertex index out of range");
      if (e.tail == e.head) throw ValidationError(tag + ": self-loop");
      if (!seen.emplace(std::min(e.tail, e.head), std::max(e.tail, e.head)).second)
        throw ValidationError(tag + ": duplicate undirected edge");
      if (!(desired_[k] > 0.0)) throw ValidationError(tag + ": desired distance must be > 0");
    }

    // union-find connectivity
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n_;
    for (const auto& e : edges_) {
      const auto a = find(e.tail), b = find(e.head);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    if (components != 1) throw ValidationError("graph is not connected");
  }

  std::size_t n_;
  int dim_;
  std::vector<Edge> edges_;
  std::vector<double> desired_;
  std::vector<std::size_t> degree_;
};

/// A graph together with agent positions. Construction rejects collocated
/// edge endpoints.
class Framework {
 public:
  Framework(std::shared_ptr<const FormationGraph> graph, Points positions)
      : graph_(std::move(graph)), positions_(std::move(positions)) {
    if (!graph_) throw ValidationError("framework requires a graph");
    if (positions_.rows() != graph_->dim() ||
        positions_.cols() != static_cast<Eigen::Index>(graph_->agents()))
      throw ValidationError("positions must be a dim x n matrix");
    if (!positions_.allFinite()) throw ValidationError("positions must be finite");
    const auto& edges = graph_->edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const double len = (positions_.col(edges[k].head) - positions_.col(edges[k].tail)).norm();
      if (!(len > kCollocationThreshold)) throw CollocatedAgents(k);
    }
  }

  Framework(const FormationGraph& graph, Points positions)
      : Framework(std::make_shared<const FormationGraph>(graph), std::move(positions)) {}

  const FormationGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const FormationGraph>& graph_ptr() const noexcept { return graph_; }
  const Points& positions() const noexcept { return positions_; }

  Framework with_positions(Points p) const { return Framework(graph_, std::move(p)); }

 private:
  std::shared_ptr<const FormationGraph> graph_;
  Points positions_;
};

/// n x m oriented incidence matrix: -1 at the tail, +1 at the head.
inline Eigen::MatrixXd incidence_matrix(const FormationGraph& g) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.agents()),
                                            static_cast<Eigen::Index>(g.edge_count()));
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    b(static_cast<Eigen::Index>(g.edges()[k].tail), col) = -1.0;
    b(static_cast<Eigen::Index>(g.edges()[k].head), col) = 1.0;
  }
  return b;
}

/// d x m matrix whose column k is z_k = p_head - p_tail.
inline Eigen::MatrixXd relative_positions(const FormationGraph& g, const Points& p) {
  Eigen::MatrixXd z(g.dim(), static_cast<Eigen::Index>(g.edge_count()));
  for (std::size_t k = 0; k < g.edge_count(); ++k)
    z.col(static_cast<Eigen::Index>(k)) = p.col(g.edges()[k].head) - p.col(g.edges()[k].tail);
  return z;
}

inline Eigen::MatrixXd relative_positions(const Framework& f) {
  return relative_positions(f.graph(), f.positions());
}

/// m x (d n) rigidity matrix: row k holds -z_k^T in the tail block and z_k^T
/// in the head block (the Jacobian of half the squared edge lengths).
inline Eigen::MatrixXd rigidity_matrix(const FormationGraph& g, const Points& p) {
  const auto d = static_cast<Eigen::Index>(g.dim());
  const auto z = relative_positions(g, p);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.edge_count()),
                                            d * static_cast<Eigen::Index>(g.agents()));
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const auto zk = z.col(row);
    r.block(row, d * static_cast<Eigen::Index>(g.edges()[k].tail), 1, d) = -zk.transpose();
    r.block(row, d * static_cast<Eigen::Index>(g.edges()[k].head), 1, d) = zk.transpose();
  }
  return r;
}

inline Eigen::MatrixXd rigidity_matrix(const Framework& f) {
  return rigidity_matrix(f.graph(), f.positions());
}

struct RigidityReport {
  std::size_t rank = 0;
  bool infinitesimally_rigid = false;
  bool minimally_rigid = false;
};

/// Numerical rank of any matrix with the relative singular-value cutoff.
/// Throws DegenerateFramework when the matrix is identically zero.
inline std::size_t numerical_rank(const Eigen::MatrixXd& a, double rel_tol = kRankRelTol) {
  if (a.size() == 0) throw DegenerateFramework("empty matrix has no rank scale");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (!(smax > 0.0)) throw DegenerateFramework("all singular values vanish");
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * smax) ++rank;
  return rank;
}

inline RigidityReport rigidity_check(const Framework& f, double rel_tol = kRankRelTol) {
  const auto& g = f.graph();
  if (g.edge_count() == 0) throw DegenerateFramework("framework has no edges");
  RigidityReport rep;
  rep.rank = numerical_rank(rigidity_matrix(f), rel_tol);
  rep.infinitesimally_rigid = g.rigid_edge_count() > 0 && rep.rank == g.rigid_edge_count();
  rep.minimally_rigid = rep.infinitesimally_rigid && g.edge_count() == g.rigid_edge_count();
  return rep;
}

}  // namespace rigidq
