#pragma once

#include <vector>

#include "pointcam/tensor.hpp"

namespace pointcam::autodiff {

/// [n,k] x [k,m] -> [n,m].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise sum. b may also be [1,m] (or [m]) to broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise product of equal-shaped tensors.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

/// Softmax over each row of an [n,m] tensor.
Tensor row_softmax(const Tensor& a);

/// Column-wise maximum: [n,m] -> [1,m]. Gradient flows to the first row
/// attaining each column's maximum.
Tensor max_over_rows(const Tensor& a);

/// Row subset (with repetition allowed): [n,m] -> [len(idx),m].
Tensor gather_rows(const Tensor& a, const std::vector<int>& idx);

/// Repeats a [1,m] row n times -> [n,m].
Tensor tile_rows(const Tensor& a, int n);

/// Horizontal concatenation of tensors with equal row counts.
Tensor concat_cols(const std::vector<Tensor>& parts);

/// Mean / sum over all elements -> scalar [1].
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a);

/// Mean squared error between equal-shaped tensors -> scalar [1].
Tensor mse(const Tensor& a, const Tensor& target);

/// Mean cross-entropy of row-softmax(logits) against integer labels -> [1].
/// Uses the max-shifted log-sum-exp form. labels[i] must lie in [0, cols).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace pointcam::autodiff
