#include "taskgraph/nn/adamw.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>

namespace taskgraph::nn {

OptimizerState OptimizerState::create(const ParamStore& params, const AdamWConfig& config) {
  OptimizerState s;
  s.config = config;
  s.first_moment.resize(params.size());
  s.second_moment.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = params.at(i);
    if (!p.trainable) continue;
    s.first_moment[i] = Mat::Zero(p.value.rows(), p.value.cols());
    s.second_moment[i] = Mat::Zero(p.value.rows(), p.value.cols());
  }
  return s;
}

void adamw_step(ParamStore& params, const GradBuffer& grads, OptimizerState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw InternalError("optimizer state does not match the parameter store");
  }
  const AdamWConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params.at(i);
    if (!p.trainable) continue;
    Mat& m = state.first_moment[i];
    Mat& v = state.second_moment[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols() || v.rows() != m.rows() ||
        v.cols() != m.cols()) {
      throw InternalError("optimizer moments for '" + p.name + "' have the wrong shape");
    }
    const bool has_grad = i < grads.grads.size() && grads.grads[i].size() != 0;
    if (has_grad) {
      const Mat& g = grads.grads[i];
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    } else {
      m *= c.beta1;
      v *= c.beta2;
    }
    p.value *= (1.0 - c.lr * c.weight_decay);
    p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

}  // namespace taskgraph::nn
