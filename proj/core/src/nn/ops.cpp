#include "taskgraph/nn/ops.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>
#include <string>

namespace taskgraph::nn {
namespace {

Tape& tape_of(Var v) {
  if (!v.valid()) throw InternalError("operation on an invalid Var");
  return *v.tape();
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw DimensionError(std::string(op) + ": " + detail);
}

std::string shape(const Var& v) {
  return "[" + std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + "]";
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul", shape(a) + " * " + shape(b));
  Tape& t = tape_of(a);
  Mat out = a.value() * b.value();
  const int ia = a.id();
  const int ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate_expr(ib, tp.value(ia).transpose() * g);
  });
}

Var linear(Var x, Var weight, Var bias) {
  require(x.cols() == weight.rows(), "linear", shape(x) + " * " + shape(weight));
  Tape& t = tape_of(x);
  Mat out = x.value() * weight.value();
  const bool has_bias = bias.valid();
  if (has_bias) {
    require(bias.rows() == 1 && bias.cols() == weight.cols(), "linear", "bias " + shape(bias));
    out.rowwise() += bias.value().row(0);
  }
  const int ix = x.id();
  const int iw = weight.id();
  const int ib = has_bias ? bias.id() : -1;
  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return t.record(std::move(out), parents, [ix, iw, ib](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.accumulate_expr(ix, g * tp.value(iw).transpose());
    if (tp.requires_grad(iw)) tp.accumulate_expr(iw, tp.value(ix).transpose() * g);
    if (ib >= 0 && tp.requires_grad(ib)) tp.accumulate_expr(ib, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", shape(a) + " + " + shape(b));
  Tape& t = tape_of(a);
  const int ia = a.id();
  const int ib = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, tp.grad(self));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.record(a.value() * s, {a},
                  [ia, s](Tape& tp, int self) { tp.accumulate_expr(ia, tp.grad(self) * s); });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", shape(a) + " + " + shape(row));
  Tape& t = tape_of(a);
  Mat out = a.value();
  out.rowwise() += row.value().row(0);
  const int ia = a.id();
  const int ir = row.id();
  return t.record(std::move(out), {a, row}, [ia, ir](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    if (tp.requires_grad(ir)) tp.accumulate_expr(ir, tp.grad(self).colwise().sum());
  });
}

Var leaky_relu(Var x, double negative_slope) {
  Tape& t = tape_of(x);
  const Mat& xv = x.value();
  Mat out = xv.unaryExpr([negative_slope](double v) { return v > 0.0 ? v : negative_slope * v; });
  const int ix = x.id();
  return t.record(std::move(out), {x}, [ix, negative_slope](Tape& tp, int self) {
    const Mat& xin = tp.value(ix);
    const Mat& g = tp.grad(self);
    Mat d = g;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(xin.data()[i] > 0.0)) d.data()[i] *= negative_slope;
    }
    tp.accumulate(ix, d);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols", "row mismatch " + shape(p));
    cols += p.cols();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    layout.emplace_back(p.id(), c);
    c += p.cols();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts, [layout = std::move(layout)](Tape& tp, int self) {
        const Mat& g = tp.grad(self);
        for (const auto& [id, offset] : layout) {
          if (tp.requires_grad(id)) {
            tp.accumulate_expr(id, g.middleCols(offset, tp.value(id).cols()));
          }
        }
      });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows", "col mismatch " + shape(p));
    rows += p.rows();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    layout.emplace_back(p.id(), r);
    r += p.rows();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts, [layout = std::move(layout)](Tape& tp, int self) {
        const Mat& g = tp.grad(self);
        for (const auto& [id, offset] : layout) {
          if (tp.requires_grad(id)) {
            tp.accumulate_expr(id, g.middleRows(offset, tp.value(id).rows()));
          }
        }
      });
}

Var slice_rows(Var x, Eigen::Index offset, Eigen::Index count) {
  require(offset >= 0 && count >= 0 && offset + count <= x.rows(), "slice_rows", shape(x));
  const int ix = x.id();
  return tape_of(x).record(x.value().middleRows(offset, count), {x},
                           [ix, offset, count](Tape& tp, int self) {
                             if (!tp.requires_grad(ix)) return;
                             tp.ensure_grad(ix).middleRows(offset, count) += tp.grad(self);
                           });
}

Var slice_cols(Var x, Eigen::Index offset, Eigen::Index count) {
  require(offset >= 0 && count >= 0 && offset + count <= x.cols(), "slice_cols", shape(x));
  const int ix = x.id();
  return tape_of(x).record(x.value().middleCols(offset, count), {x},
                           [ix, offset, count](Tape& tp, int self) {
                             if (!tp.requires_grad(ix)) return;
                             tp.ensure_grad(ix).middleCols(offset, count) += tp.grad(self);
                           });
}

Var gather_rows(Var x, std::vector<int> index) {
  const Mat& xv = x.value();
  Mat out(static_cast<Eigen::Index>(index.size()), xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && index[i] < xv.rows(), "gather_rows", "index out of range");
    out.row(static_cast<Eigen::Index>(i)) = xv.row(index[i]);
  }
  const int ix = x.id();
  return tape_of(x).record(std::move(out), {x}, [ix, index = std::move(index)](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    Mat& gx = tp.ensure_grad(ix);
    const Mat& g = tp.grad(self);
    for (std::size_t i = 0; i < index.size(); ++i) {
      gx.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var segment_mean(Var x, std::vector<int> segment_of_row, int segments) {
  const Mat& xv = x.value();
  require(static_cast<Eigen::Index>(segment_of_row.size()) == xv.rows(), "segment_mean",
          "segment map size != rows");
  std::vector<double> counts(static_cast<std::size_t>(segments), 0.0);
  Mat out = Mat::Zero(segments, xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const int s = segment_of_row[static_cast<std::size_t>(r)];
    require(s >= 0 && s < segments, "segment_mean", "segment id out of range");
    out.row(s) += xv.row(r);
    counts[static_cast<std::size_t>(s)] += 1.0;
  }
  for (int s = 0; s < segments; ++s) {
    if (counts[static_cast<std::size_t>(s)] > 0.0) out.row(s) /= counts[static_cast<std::size_t>(s)];
  }
  const int ix = x.id();
  return tape_of(x).record(
      std::move(out), {x},
      [ix, seg = std::move(segment_of_row), counts = std::move(counts)](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        Mat& gx = tp.ensure_grad(ix);
        const Mat& g = tp.grad(self);
        for (std::size_t r = 0; r < seg.size(); ++r) {
          gx.row(static_cast<Eigen::Index>(r)) +=
              g.row(seg[r]) / counts[static_cast<std::size_t>(seg[r])];
        }
      });
}

Var mean_rows(Var x) {
  const double n = static_cast<double>(x.rows());
  require(n > 0, "mean_rows", "empty input");
  const int ix = x.id();
  return tape_of(x).record(x.value().colwise().mean(), {x}, [ix, n](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    tp.ensure_grad(ix).rowwise() += tp.grad(self).row(0) / n;
  });
}

Var reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  require(rows * cols == x.value().size(), "reshape", shape(x));
  const Mat& xv = x.value();
  Mat out = Eigen::Map<const Mat>(xv.data(), rows, cols);
  const int ix = x.id();
  return tape_of(x).record(std::move(out), {x}, [ix](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    const Mat& g = tp.grad(self);
    const Mat& xin = tp.value(ix);
    tp.accumulate_expr(ix, Eigen::Map<const Mat>(g.data(), xin.rows(), xin.cols()));
  });
}

void rope_inplace(Mat& x, std::span<const double> positions, double base, bool inverse) {
  const Eigen::Index d = x.cols();
  if (d % 2 != 0) throw ConfigError("rope requires an even feature dimension");
  if (static_cast<Eigen::Index>(positions.size()) != x.rows()) {
    throw DimensionError("rope: positions size != rows");
  }
  const Eigen::Index pairs = d / 2;
  std::vector<double> freq(static_cast<std::size_t>(pairs));
  for (Eigen::Index j = 0; j < pairs; ++j) {
    freq[static_cast<std::size_t>(j)] =
        std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(d));
  }
  const double sign = inverse ? -1.0 : 1.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double pos = positions[static_cast<std::size_t>(r)];
    if (pos == 0.0) continue;
    double* row = x.row(r).data();
    for (Eigen::Index j = 0; j < pairs; ++j) {
      const double angle = sign * pos * freq[static_cast<std::size_t>(j)];
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double a = row[2 * j];
      const double b = row[2 * j + 1];
      row[2 * j] = a * c - b * s;
      row[2 * j + 1] = a * s + b * c;
    }
  }
}

Var rope(Var x, std::span<const double> positions, double base) {
  Mat out = x.value();
  rope_inplace(out, positions, base, false);
  const int ix = x.id();
  std::vector<double> pos(positions.begin(), positions.end());
  return tape_of(x).record(std::move(out), {x},
                           [ix, pos = std::move(pos), base](Tape& tp, int self) {
                             if (!tp.requires_grad(ix)) return;
                             Mat g = tp.grad(self);
                             rope_inplace(g, pos, base, true);
                             tp.accumulate(ix, g);
                           });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Mat& xv = x.value();
  const Eigen::Index d = xv.cols();
  require(gain.rows() == 1 && gain.cols() == d && bias.rows() == 1 && bias.cols() == d,
          "layer_norm", "gain/bias shape");
  Mat xhat(xv.rows(), d);
  std::vector<double> inv_std(static_cast<std::size_t>(xv.rows()));
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = is;
    xhat.row(r) = (xv.row(r).array() - mu) * is;
  }
  Mat out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id();
  const int ig = gain.id();
  const int ib = bias.id();
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, int self) {
        const Mat& g = tp.grad(self);
        if (tp.requires_grad(ig)) {
          tp.accumulate_expr(ig, (g.array() * xhat.array()).colwise().sum().matrix());
        }
        if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.colwise().sum());
        if (!tp.requires_grad(ix)) return;
        Mat dxhat = g;
        dxhat.array().rowwise() *= tp.value(ig).row(0).array();
        Mat dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double m1 = dxhat.row(r).mean();
          const double m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
          dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) *
                      inv_std[static_cast<std::size_t>(r)];
        }
        tp.accumulate(ix, dx);
      });
}

namespace {

void softmax_rows(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace

Mat attention_probabilities(const Mat& q, const Mat& k, int heads, int head) {
  const Eigen::Index dh = q.cols() / heads;
  Mat s = q.middleCols(head * dh, dh) * k.middleCols(head * dh, dh).transpose();
  s /= std::sqrt(static_cast<double>(dh));
  softmax_rows(s);
  return s;
}

Var attention(Var q, Var k, Var v, std::vector<Segment> q_segments,
              std::vector<Segment> kv_segments, int heads) {
  const Eigen::Index d = q.cols();
  if (heads <= 0 || d % heads != 0) {
    throw ConfigError("attention: model dim " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  require(k.cols() == d && v.cols() == d, "attention", "q/k/v widths differ");
  require(k.rows() == v.rows(), "attention", "k/v rows differ");
  require(q_segments.size() == kv_segments.size(), "attention", "segment count mismatch");
  const Eigen::Index dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat& qv = q.value();
  const Mat& kv = k.value();
  const Mat& vv = v.value();

  Mat out = Mat::Zero(qv.rows(), d);
  std::vector<Mat> probs;
  probs.reserve(q_segments.size() * static_cast<std::size_t>(heads));
  for (std::size_t s = 0; s < q_segments.size(); ++s) {
    const Segment qs = q_segments[s];
    const Segment ks = kv_segments[s];
    require(qs.offset >= 0 && qs.offset + qs.length <= qv.rows(), "attention", "query segment");
    require(ks.offset >= 0 && ks.offset + ks.length <= kv.rows() && ks.length > 0, "attention",
            "key segment");
    for (int h = 0; h < heads; ++h) {
      Mat p = qv.block(qs.offset, h * dh, qs.length, dh) *
              kv.block(ks.offset, h * dh, ks.length, dh).transpose();
      p *= inv_sqrt;
      softmax_rows(p);
      out.block(qs.offset, h * dh, qs.length, dh) = p * vv.block(ks.offset, h * dh, ks.length, dh);
      probs.push_back(std::move(p));
    }
  }

  const int iq = q.id();
  const int ik = k.id();
  const int iv = v.id();
  return tape_of(q).record(
      std::move(out), {q, k, v},
      [iq, ik, iv, heads, dh, inv_sqrt, qseg = std::move(q_segments),
       kseg = std::move(kv_segments), probs = std::move(probs)](Tape& tp, int self) {
        const Mat& g = tp.grad(self);
        const Mat& qv = tp.value(iq);
        const Mat& kv = tp.value(ik);
        const Mat& vv = tp.value(iv);
        const bool gq = tp.requires_grad(iq);
        const bool gk = tp.requires_grad(ik);
        const bool gv = tp.requires_grad(iv);
        Mat* dq = gq ? &tp.ensure_grad(iq) : nullptr;
        Mat* dk = gk ? &tp.ensure_grad(ik) : nullptr;
        Mat* dv = gv ? &tp.ensure_grad(iv) : nullptr;
        std::size_t pi = 0;
        for (std::size_t s = 0; s < qseg.size(); ++s) {
          const Segment qs = qseg[s];
          const Segment ks = kseg[s];
          for (int h = 0; h < heads; ++h, ++pi) {
            const Mat& p = probs[pi];
            const auto go = g.block(qs.offset, h * dh, qs.length, dh);
            if (dv != nullptr) dv->block(ks.offset, h * dh, ks.length, dh) += p.transpose() * go;
            if (dq == nullptr && dk == nullptr) continue;
            Mat dp = go * vv.block(ks.offset, h * dh, ks.length, dh).transpose();
            Mat ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            ds *= inv_sqrt;
            if (dq != nullptr) {
              dq->block(qs.offset, h * dh, qs.length, dh) +=
                  ds * kv.block(ks.offset, h * dh, ks.length, dh);
            }
            if (dk != nullptr) {
              dk->block(ks.offset, h * dh, ks.length, dh) +=
                  ds.transpose() * qv.block(qs.offset, h * dh, qs.length, dh);
            }
          }
        }
      });
}

Var weighted_cross_entropy_sum(Var logits, std::vector<int> targets,
                               std::vector<double> row_weights, double scale) {
  const Mat& lv = logits.value();
  require(static_cast<Eigen::Index>(targets.size()) == lv.rows() &&
              targets.size() == row_weights.size(),
          "weighted_cross_entropy", "targets/weights size != rows");
  if (!lv.allFinite()) throw NumericError("weighted_cross_entropy: non-finite logits");
  Mat probs(lv.rows(), lv.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    const double w = row_weights[static_cast<std::size_t>(r)];
    const double m = lv.row(r).maxCoeff();
    probs.row(r) = (lv.row(r).array() - m).exp();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    if (w == 0.0) continue;
    require(t >= 0 && t < lv.cols(), "weighted_cross_entropy", "target out of range");
    total += w * (std::log(z) + m - lv(r, t));
  }
  Mat out(1, 1);
  out(0, 0) = scale * total;
  const int il = logits.id();
  return tape_of(logits).record(
      std::move(out), {logits},
      [il, scale, probs = std::move(probs), targets = std::move(targets),
       w = std::move(row_weights)](Tape& tp, int self) {
        if (!tp.requires_grad(il)) return;
        const double g = tp.grad(self)(0, 0) * scale;
        Mat& dl = tp.ensure_grad(il);
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          const double wr = w[static_cast<std::size_t>(r)];
          if (wr == 0.0) continue;
          dl.row(r) += g * wr * probs.row(r);
          dl(r, targets[static_cast<std::size_t>(r)]) -= g * wr;
        }
      });
}

Var squared_error_sum(Var pred, const Mat& target, double scale) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "squared_error",
          shape(pred) + " vs target");
  Mat diff = pred.value() - target;
  Mat out(1, 1);
  out(0, 0) = scale * diff.squaredNorm();
  const int ip = pred.id();
  return tape_of(pred).record(std::move(out), {pred},
                              [ip, scale, diff = std::move(diff)](Tape& tp, int self) {
                                tp.accumulate_expr(ip, diff * (2.0 * scale * tp.grad(self)(0, 0)));
                              });
}

Var sum_scalars(const std::vector<Var>& terms) {
  require(!terms.empty(), "sum_scalars", "no terms");
  Mat out = Mat::Zero(1, 1);
  std::vector<int> ids;
  for (const Var& t : terms) {
    require(t.rows() == 1 && t.cols() == 1, "sum_scalars", "term is not 1x1");
    out(0, 0) += t.scalar();
    ids.push_back(t.id());
  }
  return tape_of(terms.front()).record(std::move(out), terms, [ids = std::move(ids)](Tape& tp, int self) {
    for (int id : ids) tp.accumulate(id, tp.grad(self));
  });
}

}  // namespace taskgraph::nn
