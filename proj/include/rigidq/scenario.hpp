#pragma once

// Scenario presets, seeded perturbation of target shapes and the strict JSON
// scenario file.
//
// File schema (version 1), vertex indices 1-based:
//
//   {
//     "version": 1,
//     "graph":   {"preset": "double-tetrahedron"}
//              | {"vertices": 5, "dim": 3, "edges": [[1,2], ...], "desired": [6, ...]},
//     "initial": {"preset": "double-tetrahedron", "seed": 7, "magnitude": 0.9}
//              | {"positions": [[x, y, z], ...]},
//     "quantizer":  {"kind": "uniform-sym", "gain": 0.5, "hysteresis": 0},
//     "integrator": {"step": 0.001, "duration": 50},
//     "tolerance": 1e-6,
//     "decimation": 1,
//     "output": {"trajectory": "trajectory.csv", "errors": "errors.csv",
//                "report": "report.json"}
//   }
//
// Unknown keys anywhere are rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rigidq/dynamics.hpp"
#include "rigidq/errors.hpp"
#include "rigidq/graph.hpp"
#include "rigidq/quantizer.hpp"

namespace rigidq {

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string name;
  FormationGraph graph;
  /// A realisation of the target shape (all edge errors zero).
  Points target;
};

namespace detail {

inline Points columns(std::initializer_list<std::initializer_list<double>> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto d = static_cast<Eigen::Index>(pts.begin()->size());
  Points p(d, n);
  Eigen::Index j = 0;
  for (const auto& pt : pts) {
    Eigen::Index i = 0;
    for (double v : pt) p(i++, j) = v;
    ++j;
  }
  return p;
}

}  // namespace detail

/// Two regular tetrahedra with edge 6 glued along the face {2,3,4}, centred at
/// the origin. Edges ordered 12,13,14,23,34,24,25,35,45, tail = smaller index.
inline Preset double_tetrahedron_preset() {
  const double s3 = std::sqrt(3.0), h = 2.0 * std::sqrt(6.0);
  auto g = FormationGraph::canonical(
      5, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 3}, {1, 3}, {1, 4}, {2, 4}, {3, 4}},
      std::vector<double>(9, 6.0));
  Points p = detail::columns(
      {{0.0, 0.0, h}, {2.0 * s3, 0.0, 0.0}, {-s3, 3.0, 0.0}, {-s3, -3.0, 0.0}, {0.0, 0.0, -h}});
  return {"double-tetrahedron", std::move(g), std::move(p)};
}

/// Equilateral triangle with side 6 in the plane.
inline Preset triangle_preset() {
  const double s3 = std::sqrt(3.0);
  auto g = FormationGraph::canonical(3, 2, {{0, 1}, {0, 2}, {1, 2}}, {6.0, 6.0, 6.0});
  Points p = detail::columns({{2.0 * s3, 0.0}, {-s3, 3.0}, {-s3, -3.0}});
  return {"triangle", std::move(g), std::move(p)};
}

/// Square with side 6 and diagonal 1-3 in the plane (minimally rigid).
inline Preset braced_square_preset() {
  auto g = FormationGraph::canonical(4, 2, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}},
                                     {6.0, 6.0, 6.0, 6.0, 6.0 * std::sqrt(2.0)});
  Points p = detail::columns({{-3.0, -3.0}, {3.0, -3.0}, {3.0, 3.0}, {-3.0, 3.0}});
  return {"braced-square", std::move(g), std::move(p)};
}

/// Single edge of length 6 along the x axis in space.
inline Preset two_agent_preset() {
  auto g = FormationGraph::canonical(2, 3, {{0, 1}}, {6.0});
  Points p = detail::columns({{-3.0, 0.0, 0.0}, {3.0, 0.0, 0.0}});
  return {"two-agent", std::move(g), std::move(p)};
}

inline std::vector<std::string> preset_names() {
  return {"double-tetrahedron", "triangle", "braced-square", "two-agent"};
}

inline Preset preset(const std::string& name) {
  if (name == "double-tetrahedron") return double_tetrahedron_preset();
  if (name == "triangle") return triangle_preset();
  if (name == "braced-square") return braced_square_preset();
  if (name == "two-agent") return two_agent_preset();
  throw ValidationError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Seeded perturbation

/// Portable stream of uniform doubles: std::mt19937_64 (its output sequence is
/// fixed by the standard) mapped to [0,1) through the top 53 bits, so runs
/// reproduce across standard libraries.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : eng_(seed) {}

  double next() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * next() - 1.0; }

 private:
  std::mt19937_64 eng_;
};

/// Fraction of the shortest desired distance allowed as initial error.
inline constexpr double kNearTargetFraction = 0.3;
inline constexpr int kPerturbationRetries = 10;

struct Perturbed {
  Framework framework;
  std::uint64_t seed_used;
  int retries;
};

/// Displaces each agent of the preset target by a vector of norm at most
/// `magnitude` (components uniform in +-magnitude/sqrt(d)). A draw that is
/// not infinitesimally rigid, collocates an edge, or has an edge error above
/// kNearTargetFraction * min_k d_k is redrawn with seed+1, up to
/// kPerturbationRetries times.
inline Perturbed perturb_preset(const Preset& pre, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0 && std::isfinite(magnitude)))
    throw ValidationError("perturbation magnitude must be >= 0");
  const auto graph = std::make_shared<const FormationGraph>(pre.graph);
  const double per_axis = magnitude / std::sqrt(static_cast<double>(graph->dim()));
  double dmin = std::numeric_limits<double>::infinity();
  for (double d : graph->desired()) dmin = std::min(dmin, d);

  for (int attempt = 0; attempt <= kPerturbationRetries; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    UniformStream rng(s);
    Points p = pre.target;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) += per_axis * rng.symmetric();
    try {
      Framework f(graph, std::move(p));
      const auto e = distance_errors(f);
      bool near = true;
      for (double ek : e) near = near && std::abs(ek) <= kNearTargetFraction * dmin;
      const auto rig = rigidity_check(f);
      if (near && rig.infinitesimally_rigid) return {std::move(f), s, attempt};
    } catch (const CollocatedAgents&) {
    }
  }
  throw ValidationError("no admissible perturbation of preset '" + pre.name + "' within " +
                        std::to_string(kPerturbationRetries) + " retries");
}

// ---------------------------------------------------------------------------
// Simulation config

struct PresetGraph {
  std::string name;
  friend bool operator==(const PresetGraph&, const PresetGraph&) = default;
};

struct PresetPerturbation {
  std::string preset;
  std::uint64_t seed = 0;
  double magnitude = 0.0;
  friend bool operator==(const PresetPerturbation&, const PresetPerturbation&) = default;
};

struct OutputPaths {
  std::string trajectory = "trajectory.csv";
  std::string errors = "errors.csv";
  std::string report = "report.json";
  friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

struct SimulationConfig {
  int version = 1;
  std::variant<PresetGraph, FormationGraph> graph = PresetGraph{"double-tetrahedron"};
  std::variant<PresetPerturbation, Points> initial =
      PresetPerturbation{"double-tetrahedron", 1, 0.9};
  QuantizerSpec quantizer;
  IntegratorConfig integrator;
  double tolerance = 1e-6;
  std::size_t decimation = 1;
  OutputPaths output;

  friend bool operator==(const SimulationConfig& a, const SimulationConfig& b) {
    const bool same_initial = [&] {
      if (a.initial.index() != b.initial.index()) return false;
      if (const auto* pa = std::get_if<PresetPerturbation>(&a.initial))
        return *pa == std::get<PresetPerturbation>(b.initial);
      const auto& pa = std::get<Points>(a.initial);
      const auto& pb = std::get<Points>(b.initial);
      return pa.rows() == pb.rows() && pa.cols() == pb.cols() && pa == pb;
    }();
    return a.version == b.version && a.graph == b.graph && same_initial &&
           a.quantizer == b.quantizer && a.integrator == b.integrator &&
           a.tolerance == b.tolerance && a.decimation == b.decimation && a.output == b.output;
  }
};

inline FormationGraph resolve_graph(const SimulationConfig& cfg) {
  if (const auto* p = std::get_if<PresetGraph>(&cfg.graph)) return preset(p->name).graph;
  return std::get<FormationGraph>(cfg.graph);
}

struct Scenario {
  Framework initial;
  /// Perturbation redraws; 0 for explicit positions.
  int retries = 0;
  std::uint64_t seed_used = 0;
};

/// Builds and validates the initial framework a config describes.
inline Scenario build_scenario(const SimulationConfig& cfg) {
  auto graph = resolve_graph(cfg);
  if (const auto* pp = std::get_if<PresetPerturbation>(&cfg.initial)) {
    const auto pre = preset(pp->preset);
    if (!(pre.graph == graph))
      throw ValidationError("initial preset '" + pp->preset + "' does not match the graph");
    auto res = perturb_preset(pre, pp->seed, pp->magnitude);
    return {std::move(res.framework), res.retries, res.seed_used};
  }
  try {
    return {Framework(graph, std::get<Points>(cfg.initial)), 0, 0};
  } catch (const CollocatedAgents& err) {
    throw ValidationError(std::string("initial positions: ") + err.what());
  }
}

inline void validate(const SimulationConfig& cfg) {
  if (cfg.version != 1) throw ValidationError("unsupported config version");
  cfg.quantizer.validate();
  cfg.integrator.validate();
  if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  if (cfg.decimation == 0) throw ValidationError("decimation must be >= 1");
  (void)build_scenario(cfg);
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

using json = nlohmann::json;

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Strict object reader: tracks consumed keys and rejects leftovers.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "must be an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& at(const std::string& key) {
    if (!obj_.contains(key)) fail(sub(key), "is required");
    used_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) fail(sub(key), "must be a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(sub(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) fail(sub(key), "must be a string");
    return v.get<std::string>();
  }

  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) fail(sub(it.key()), "is not a known field");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
    throw ParseError("field '" + field + "' " + msg, 0, field);
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

inline Points parse_points(const json& arr, const std::string& field) {
  if (!arr.is_array() || arr.empty()) Fields::fail(field, "must be a non-empty array of points");
  const std::size_t d = arr.front().is_array() ? arr.front().size() : 0;
  if (d == 0) Fields::fail(field, "points must be arrays of numbers");
  Points p(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(arr.size()));
  for (std::size_t j = 0; j < arr.size(); ++j) {
    const auto& pt = arr[j];
    if (!pt.is_array() || pt.size() != d) Fields::fail(field, "points must share one dimension");
    for (std::size_t i = 0; i < d; ++i) {
      if (!pt[i].is_number()) Fields::fail(field, "coordinates must be numbers");
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pt[i].get<double>();
    }
  }
  return p;
}

inline json points_to_json(const Points& p) {
  json arr = json::array();
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    json pt = json::array();
    for (Eigen::Index i = 0; i < p.rows(); ++i) pt.push_back(p(i, j));
    arr.push_back(std::move(pt));
  }
  return arr;
}

inline FormationGraph parse_graph(const json& obj) {
  Fields f(obj, "graph");
  const auto n = f.unsigned_int("vertices");
  const auto dim = f.unsigned_int("dim");
  const auto& edges = f.at("edges");
  if (!edges.is_array()) Fields::fail("graph.edges", "must be an array of [tail, head] pairs");
  std::vector<Edge> es;
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      Fields::fail("graph.edges", "entries must be [tail, head] integer pairs");
    const auto a = e[0].get<std::int64_t>(), b = e[1].get<std::int64_t>();
    if (a < 1 || b < 1) throw ValidationError("graph.edges: vertex indices are 1-based");
    es.push_back({static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)});
  }
  const auto& des = f.at("desired");
  if (!des.is_array()) Fields::fail("graph.desired", "must be an array of numbers");
  std::vector<double> d;
  for (const auto& v : des) {
    if (!v.is_number()) Fields::fail("graph.desired", "must be an array of numbers");
    d.push_back(v.get<double>());
  }
  f.finish();
  return FormationGraph(static_cast<std::size_t>(n), static_cast<int>(dim), std::move(es),
                        std::move(d));
}

inline json graph_to_json(const FormationGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.tail + 1, e.head + 1});
  return {{"vertices", g.agents()}, {"dim", g.dim()}, {"edges", edges}, {"desired", g.desired()}};
}

}  // namespace detail

/// Parses and fully validates a scenario document. Syntax errors carry the
/// offending line; schema errors name the field.
inline SimulationConfig parse_config(const std::string& text) {
  using detail::Fields;
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    const auto line = detail::line_of(text, err.byte);
    throw ParseError("line " + std::to_string(line) + ": " + err.what(), line);
  }

  SimulationConfig cfg;
  Fields top(doc, "");
  const auto version = top.unsigned_int("version");
  if (version != 1) throw ValidationError("unsupported config version " + std::to_string(version));
  cfg.version = 1;

  {
    const auto& g = top.at("graph");
    if (g.is_object() && g.contains("preset")) {
      Fields f(g, "graph");
      cfg.graph = PresetGraph{f.string("preset")};
      f.finish();
    } else {
      cfg.graph = detail::parse_graph(g);
    }
  }
  {
    Fields f(top.at("initial"), "initial");
    if (f.has("positions")) {
      cfg.initial = detail::parse_points(f.at("positions"), "initial.positions");
    } else {
      PresetPerturbation pp;
      pp.preset = f.string("preset");
      pp.seed = f.unsigned_int("seed");
      pp.magnitude = f.number("magnitude");
      cfg.initial = pp;
    }
    f.finish();
  }
  {
    Fields f(top.at("quantizer"), "quantizer");
    const auto kind = f.string("kind");
    const auto k = parse_quantizer_kind(kind);
    if (!k) Fields::fail("quantizer.kind", "has unknown value '" + kind + "'");
    cfg.quantizer.kind = *k;
    cfg.quantizer.gain = f.number_or("gain", cfg.quantizer.gain);
    cfg.quantizer.hysteresis = f.number_or("hysteresis", 0.0);
    f.finish();
  }
  if (top.has("integrator")) {
    Fields f(top.at("integrator"), "integrator");
    cfg.integrator.step = f.number_or("step", cfg.integrator.step);
    cfg.integrator.duration = f.number_or("duration", cfg.integrator.duration);
    f.finish();
  }
  if (top.has("tolerance")) cfg.tolerance = top.number("tolerance");
  if (top.has("decimation")) cfg.decimation = top.unsigned_int("decimation");
  if (top.has("output")) {
    Fields f(top.at("output"), "output");
    if (f.has("trajectory")) cfg.output.trajectory = f.string("trajectory");
    if (f.has("errors")) cfg.output.errors = f.string("errors");
    if (f.has("report")) cfg.output.report = f.string("report");
    f.finish();
  }
  top.finish();

  validate(cfg);
  return cfg;
}

inline SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline nlohmann::json config_to_json(const SimulationConfig& cfg) {
  using detail::json;
  json doc;
  doc["version"] = cfg.version;
  if (const auto* p = std::get_if<PresetGraph>(&cfg.graph))
    doc["graph"] = {{"preset", p->name}};
  else
    doc["graph"] = detail::graph_to_json(std::get<FormationGraph>(cfg.graph));
  if (const auto* pp = std::get_if<PresetPerturbation>(&cfg.initial))
    doc["initial"] = {{"preset", pp->preset}, {"seed", pp->seed}, {"magnitude", pp->magnitude}};
  else
    doc["initial"] = {{"positions", detail::points_to_json(std::get<Points>(cfg.initial))}};
  doc["quantizer"] = {{"kind", std::string(to_string(cfg.quantizer.kind))},
                      {"gain", cfg.quantizer.gain},
                      {"hysteresis", cfg.quantizer.hysteresis}};
  doc["integrator"] = {{"step", cfg.integrator.step}, {"duration", cfg.integrator.duration}};
  doc["tolerance"] = cfg.tolerance;
  doc["decimation"] = cfg.decimation;
  doc["output"] = {{"trajectory", cfg.output.trajectory},
                   {"errors", cfg.output.errors},
                   {"report", cfg.output.report}};
  return doc;
}

inline void save_config(const SimulationConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace rigidq
