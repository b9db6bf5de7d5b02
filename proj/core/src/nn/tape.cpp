#include "taskgraph/nn/tape.hpp"

#include "taskgraph/errors.hpp"
#include "taskgraph/nn/param_store.hpp"

namespace taskgraph::nn {

const Mat& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, false, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(std::string_view name) {
  if (params_ == nullptr) throw InternalError("tape has no parameter store");
  return param(params_->index(name));
}

Var Tape::param(std::size_t index) {
  if (params_ == nullptr) throw InternalError("tape has no parameter store");
  if (auto it = param_nodes_.find(index); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  const Param& p = params_->at(index);
  nodes_.push_back(
      Node{p.value, Mat(), nullptr, grad_enabled_ && p.trainable, static_cast<int>(index)});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(index, id);
  return Var(this, id);
}

Var Tape::record(Mat value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), Mat(), needs ? std::move(backward) : nullptr, needs, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Mat value, const std::vector<Var>& parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), Mat(), needs ? std::move(backward) : nullptr, needs, -1});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Mat& Tape::ensure_grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& delta) {
  if (!nodes_[id].requires_grad) return;
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw InternalError("backward root belongs to another tape");
  if (root.rows() != 1 || root.cols() != 1) throw DimensionError("backward root must be 1x1");
  if (!nodes_[root.id()].requires_grad) return;
  ensure_grad(root.id())(0, 0) += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
}

void Tape::accumulate_param_grads(GradBuffer& out) const {
  for (const auto& [index, id] : param_nodes_) {
    const Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    out.add(index, n.grad);
  }
}

}  // namespace taskgraph::nn
