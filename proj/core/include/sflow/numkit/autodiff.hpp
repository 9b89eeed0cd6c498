#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sflow/numkit/array.hpp"

namespace sflow::numkit {

/// Named trainable tensors. Iteration order is lexicographic by name, which
/// keeps checkpoints and optimizer updates deterministic.
class ParameterSet {
 public:
  void add(const std::string& name, Array init);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Array& get(const std::string& name) const;
  Array& get(const std::string& name);

  const std::map<std::string, Array>& entries() const { return entries_; }
  std::map<std::string, Array>& entries() { return entries_; }
  std::size_t scalar_count() const;
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::map<std::string, Array> entries_;
};

using GradientMap = std::map<std::string, Array>;

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// View handed to an op's backward closure.
class BackwardContext {
 public:
  const Array& out_value() const;
  const Array& out_grad() const;
  const Array& input_value(std::size_t i) const;
  /// Accumulation target for input i, or nullptr when that input needs no gradient.
  Array* input_grad(std::size_t i) const;

 private:
  friend class Tape;
  BackwardContext(Tape& tape, int node) : tape_(tape), node_(node) {}
  Tape& tape_;
  int node_;
};

/// Define-by-run reverse-mode autodiff over a single computation.
///
/// Nodes are appended in evaluation order, so creation order is already a
/// topological order and the reverse pass is a single backwards sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(const BackwardContext&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  /// Differentiable leaf without a parameter name; read its gradient with grad().
  Var input(Array value);
  /// Trainable leaf bound to params[name]. Repeated calls return the same node.
  Var parameter(const ParameterSet& params, const std::string& name);

  Var record(Array value, const std::vector<Var>& inputs, BackwardFn backward, const char* op);

  /// Reverse pass from a scalar output. Returns a gradient for every parameter
  /// leaf on the tape (zeros where `output` does not depend on it).
  GradientMap backward(Var output);

  /// Gradient accumulated at `v` by the last backward(); zeros if none reached it.
  Array grad(Var v) const;

  const Array& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id())).requires_grad; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class BackwardContext;

  struct Node {
    Array value;
    Array grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<int> inputs;
    BackwardFn backward;
    std::string param_name;
    const char* op = "leaf";
  };

  Array* grad_slot(int node);
  void check_owner(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_nodes_;
};

/// A tape bound to one parameter set; layers take this to resolve their weights.
struct Scope {
  Tape& tape;
  const ParameterSet& params;

  Var param(const std::string& name) const { return tape.parameter(params, name); }
  Var constant(Array value) const { return tape.constant(std::move(value)); }
};

}  // namespace sflow::numkit
