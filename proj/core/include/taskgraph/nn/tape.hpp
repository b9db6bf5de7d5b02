#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taskgraph::nn {

/// Dense row-major matrix. Every activation in the model is a 2-D matrix
/// whose rows are tokens; higher-rank tensors are flattened row-major
/// (e.g. node embeddings [N x H x d] are stored as [N*H x d]).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Row = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;
class ParamStore;
struct GradBuffer;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  [[nodiscard]] const Mat& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const { return value()(0, 0); }
  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so
/// the backward sweep is a plain reverse iteration. A tape is single-use and
/// single-threaded; build a fresh one per sample.
class Tape {
 public:
  /// Called with the node's own id once its gradient is complete.
  using Backward = std::function<void(Tape&, int)>;

  explicit Tape(const ParamStore* params = nullptr) : params_(params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// With gradients disabled (inference), parameter leaves are recorded as
  /// constants and no backward closures are kept. Frozen parameters never
  /// require a gradient.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }

  Var constant(Mat value);

  /// Leaf for a stored parameter; repeated lookups share one node.
  Var param(std::string_view name);
  Var param(std::size_t index);

  /// Appends an op result. The node requires a gradient iff any parent does.
  Var record(Mat value, std::initializer_list<Var> parents, Backward backward);
  Var record(Mat value, const std::vector<Var>& parents, Backward backward);

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and sweeps backwards.
  void backward(Var root);

  /// Adds parameter-leaf gradients into `out` (indexed like the ParamStore).
  void accumulate_param_grads(GradBuffer& out) const;

  [[nodiscard]] const Mat& value(int id) const { return nodes_[id].value; }
  [[nodiscard]] const Mat& grad(int id) const { return nodes_[id].grad; }
  [[nodiscard]] bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Adds `delta` into the gradient of node `id` (no-op for constants).
  void accumulate(int id, const Mat& delta);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& delta) {
    if (!nodes_[id].requires_grad) return;
    Mat& g = ensure_grad(id);
    g += delta;
  }

  /// Mutable gradient storage (zero-initialised on first use).
  Mat& ensure_grad(int id);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const ParamStore* params() const { return params_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    bool requires_grad = false;
    int param_index = -1;
  };

  const ParamStore* params_;
  bool grad_enabled_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, int> param_nodes_;
};

}  // namespace taskgraph::nn
