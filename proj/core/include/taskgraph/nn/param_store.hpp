#pragma once

#include "taskgraph/nn/tape.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taskgraph::nn {

struct Param {
  std::string name;
  Mat value;
  bool trainable = true;
};

enum class Init {
  Zeros,
  Ones,
  HeUniform,  // U(-sqrt(6/fan_in), sqrt(6/fan_in)), fan_in = rows
};

/// Named parameter tensors. Insertion order is stable and defines the
/// parameter index used by GradBuffer, OptimizerState and checkpoints.
class ParamStore {
 public:
  ParamStore() = default;

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init,
                  std::mt19937_64& rng);
  std::size_t add(std::string name, Mat value, bool trainable = true);

  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] std::size_t index(std::string_view name) const;
  [[nodiscard]] std::size_t size() const { return params_.size(); }

  [[nodiscard]] const Param& at(std::size_t i) const { return params_.at(i); }
  [[nodiscard]] Param& at(std::size_t i) { return params_.at(i); }
  [[nodiscard]] const Param& at(std::string_view name) const { return params_.at(index(name)); }
  [[nodiscard]] Param& at(std::string_view name) { return params_.at(index(name)); }

  [[nodiscard]] const std::vector<Param>& params() const { return params_; }

  /// Marks every parameter whose name starts with `prefix` as (non-)trainable.
  std::size_t set_trainable_prefix(std::string_view prefix, bool trainable);

  [[nodiscard]] std::size_t scalar_count() const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Gradients aligned with a ParamStore. Empty matrices mean "no gradient".
struct GradBuffer {
  std::vector<Mat> grads;

  explicit GradBuffer(std::size_t n = 0) : grads(n) {}
  void add(std::size_t index, const Mat& g);
  void add(const GradBuffer& other);
  void scale(double s);
  void clear();
  [[nodiscard]] double squared_norm() const;
};

}  // namespace taskgraph::nn
