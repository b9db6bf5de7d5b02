#include "taskgraph/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace taskgraph::nn {

GradCheckReport grad_check(const LossWithGrad& loss, ParamStore& params,
                           const GradCheckOptions& options) {
  GradBuffer analytic(params.size());
  loss(params, &analytic);

  struct Coord {
    std::size_t param;
    Eigen::Index index;
  };
  std::vector<Coord> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params.at(p).trainable) continue;
    for (Eigen::Index i = 0; i < params.at(p).value.size(); ++i) coords.push_back({p, i});
  }
  std::mt19937_64 rng(options.seed);
  std::shuffle(coords.begin(), coords.end(), rng);
  if (coords.size() > options.samples) coords.resize(options.samples);

  GradCheckReport report;
  for (const Coord& c : coords) {
    double* slot = params.at(c.param).value.data() + c.index;
    const double original = *slot;
    *slot = original + options.step;
    const double up = loss(params, nullptr);
    *slot = original - options.step;
    const double down = loss(params, nullptr);
    *slot = original;

    const double numeric = (up - down) / (2.0 * options.step);
    const Mat& g = analytic.grads.size() > c.param ? analytic.grads[c.param] : Mat();
    const double a = g.size() == 0 ? 0.0 : g.data()[c.index];
    const double rel = std::abs(a - numeric) /
                       (std::max(std::abs(a), std::abs(numeric)) + options.abs_floor);
    ++report.checked;
    if (rel > report.max_rel_error || report.worst_coordinate < 0) {
      report.max_rel_error = rel;
      report.worst_param = params.at(c.param).name;
      report.worst_coordinate = c.index;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.checked > 0 && report.max_rel_error <= options.rel_tol;
  return report;
}

}  // namespace taskgraph::nn
