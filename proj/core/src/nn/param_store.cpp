#include "taskgraph/nn/param_store.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>

namespace taskgraph::nn {

std::size_t ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init,
                            std::mt19937_64& rng) {
  Mat value(rows, cols);
  switch (init) {
    case Init::Zeros:
      value.setZero();
      break;
    case Init::Ones:
      value.setOnes();
      break;
    case Init::HeUniform: {
      const double bound = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(rows, 1)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = dist(rng);
      break;
    }
  }
  return add(std::move(name), std::move(value), true);
}

std::size_t ParamStore::add(std::string name, Mat value, bool trainable) {
  if (lookup_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  lookup_.emplace(name, params_.size());
  params_.push_back(Param{std::move(name), std::move(value), trainable});
  return params_.size() - 1;
}

bool ParamStore::contains(std::string_view name) const {
  return lookup_.contains(std::string(name));
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) throw ConfigError("unknown parameter: " + std::string(name));
  return it->second;
}

std::size_t ParamStore::set_trainable_prefix(std::string_view prefix, bool trainable) {
  std::size_t n = 0;
  for (Param& p : params_) {
    if (p.name.starts_with(prefix)) {
      p.trainable = trainable;
      ++n;
    }
  }
  return n;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Param& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void GradBuffer::add(std::size_t index, const Mat& g) {
  if (index >= grads.size()) grads.resize(index + 1);
  if (grads[index].size() == 0) {
    grads[index] = g;
  } else {
    grads[index] += g;
  }
}

void GradBuffer::add(const GradBuffer& other) {
  for (std::size_t i = 0; i < other.grads.size(); ++i) {
    if (other.grads[i].size() != 0) add(i, other.grads[i]);
  }
}

void GradBuffer::scale(double s) {
  for (Mat& g : grads) {
    if (g.size() != 0) g *= s;
  }
}

void GradBuffer::clear() {
  for (Mat& g : grads) g.resize(0, 0);
}

double GradBuffer::squared_norm() const {
  double s = 0.0;
  for (const Mat& g : grads) {
    if (g.size() != 0) s += g.squaredNorm();
  }
  return s;
}

}  // namespace taskgraph::nn
