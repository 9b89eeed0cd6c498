#include "sflow/numkit/autodiff.hpp"

#include <stdexcept>

namespace sflow::numkit {

void ParameterSet::add(const std::string& name, Array init) {
  if (!entries_.emplace(name, std::move(init)).second) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
}

const Array& ParameterSet::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Array& ParameterSet::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, a] : entries_) n += a.size();
  return n;
}

const Array& Var::value() const {
  if (!tape_) throw std::logic_error("value() on an unbound Var");
  return tape_->value(*this);
}

const Array& BackwardContext::out_value() const { return tape_.nodes_[static_cast<std::size_t>(node_)].value; }
const Array& BackwardContext::out_grad() const { return tape_.nodes_[static_cast<std::size_t>(node_)].grad; }

const Array& BackwardContext::input_value(std::size_t i) const {
  const auto& node = tape_.nodes_[static_cast<std::size_t>(node_)];
  return tape_.nodes_[static_cast<std::size_t>(node.inputs.at(i))].value;
}

Array* BackwardContext::input_grad(std::size_t i) const {
  const auto& node = tape_.nodes_[static_cast<std::size_t>(node_)];
  return tape_.grad_slot(node.inputs.at(i));
}

Var Tape::constant(Array value) {
  Node node;
  node.value = std::move(value);
  node.op = "constant";
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::input(Array value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  node.op = "input";
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(const ParameterSet& params, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = params.get(name);
  node.requires_grad = true;
  node.param_name = name;
  node.op = "parameter";
  nodes_.push_back(std::move(node));
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(name, id);
  return Var(this, id);
}

Var Tape::record(Array value, const std::vector<Var>& inputs, BackwardFn backward, const char* op) {
  Node node;
  node.value = std::move(value);
  node.op = op;
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    check_owner(in);
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[static_cast<std::size_t>(in.id())].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Array* Tape::grad_slot(int id) {
  auto& node = nodes_[static_cast<std::size_t>(id)];
  if (!node.requires_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Array(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return &node.grad;
}

GradientMap Tape::backward(Var output) {
  check_owner(output);
  auto& root = nodes_[static_cast<std::size_t>(output.id())];
  if (root.value.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar output, got shape " + shape_to_string(root.value.shape()));
  }
  if (!root.value.all_finite()) throw NumericError("backward(): non-finite output value");

  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad = Array();
  }
  if (Array* g = grad_slot(output.id())) (*g)[0] = 1.0;

  for (int id = output.id(); id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.has_grad || !node.backward) continue;
    node.backward(BackwardContext(*this, id));
    for (int in : node.inputs) {
      const auto& child = nodes_[static_cast<std::size_t>(in)];
      if (child.has_grad && !child.grad.all_finite()) {
        throw NumericError(std::string("backward(): non-finite gradient flowing out of '") + node.op + "'");
      }
    }
  }

  GradientMap grads;
  for (const auto& [name, id] : param_nodes_) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    grads.emplace(name, node.has_grad ? node.grad : Array(node.value.shape(), 0.0));
  }
  return grads;
}

Array Tape::grad(Var v) const {
  check_owner(v);
  const auto& node = nodes_[static_cast<std::size_t>(v.id())];
  return node.has_grad ? node.grad : Array(node.value.shape(), 0.0);
}

const Array& Tape::value(Var v) const {
  check_owner(v);
  return nodes_[static_cast<std::size_t>(v.id())].value;
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this tape");
  }
}

}  // namespace sflow::numkit
