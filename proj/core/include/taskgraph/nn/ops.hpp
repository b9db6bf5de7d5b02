#pragma once

#include "taskgraph/nn/tape.hpp"

#include <span>
#include <vector>

namespace taskgraph::nn {

/// Contiguous run of rows [offset, offset + length).
struct Segment {
  int offset = 0;
  int length = 0;
};

// ---- dense algebra ---------------------------------------------------------

Var matmul(Var a, Var b);

/// x[T x in] * W[in x out] + b[1 x out]; `bias` may be an invalid Var.
Var linear(Var x, Var weight, Var bias);

Var add(Var a, Var b);
Var scale(Var a, double s);

/// Adds a single row to every row of `a`.
Var add_row(Var a, Var row);

Var leaky_relu(Var x, double negative_slope);

// ---- shape plumbing --------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var x, Eigen::Index offset, Eigen::Index count);
Var slice_cols(Var x, Eigen::Index offset, Eigen::Index count);

/// out[i] = x[index[i]]; repeated indices tile rows.
Var gather_rows(Var x, std::vector<int> index);

/// out[s] = mean of rows r with segment_of_row[r] == s. Empty segments are 0.
Var segment_mean(Var x, std::vector<int> segment_of_row, int segments);

/// Mean over all rows -> [1 x cols].
Var mean_rows(Var x);

/// Row-major reinterpretation to a new shape with the same element count.
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols);

// ---- model blocks ----------------------------------------------------------

/// Rotary position embedding: column pair (2j, 2j+1) of row r is rotated by
/// positions[r] * base^(-2j/d).
Var rope(Var x, std::span<const double> positions, double base);
void rope_inplace(Mat& x, std::span<const double> positions, double base, bool inverse = false);

Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Scaled dot-product multi-head attention core on already projected
/// queries/keys/values. Query segment i attends only to key segment i.
Var attention(Var q, Var k, Var v, std::vector<Segment> q_segments,
              std::vector<Segment> kv_segments, int heads);

/// Softmax probabilities of one head of one segment pair (no tape), for tests.
Mat attention_probabilities(const Mat& q, const Mat& k, int heads, int head);

// ---- losses ----------------------------------------------------------------

/// scale * sum_r w_r * (-log softmax(logits_r)[target_r]); rows with w_r == 0
/// are skipped entirely.
Var weighted_cross_entropy_sum(Var logits, std::vector<int> targets,
                               std::vector<double> row_weights, double scale);

/// scale * sum of squared element differences between pred and a constant.
Var squared_error_sum(Var pred, const Mat& target, double scale);

/// Sum of 1x1 scalars.
Var sum_scalars(const std::vector<Var>& terms);

}  // namespace taskgraph::nn
