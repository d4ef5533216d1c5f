#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rigidq {

/// Raised when a graph, framework, quantizer or config violates one of its
/// construction invariants. The message names the violated invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scenario file could not be parsed. `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::string field = {})
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// The two endpoints of an edge are (numerically) at the same point, so the
/// bearing of that edge is undefined.
class CollocatedAgents : public std::runtime_error {
 public:
  explicit CollocatedAgents(std::size_t edge)
      : std::runtime_error("agents of edge " + std::to_string(edge + 1) +
                           " are collocated"),
        edge_(edge) {}

  /// 0-based edge index.
  std::size_t edge() const noexcept { return edge_; }

 private:
  std::size_t edge_;
};

class DegenerateFramework : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveEigenvalue : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace rigidq
