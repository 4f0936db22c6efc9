#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "riga/common/rng.h"
#include "riga/nn/tensor.h"

namespace riga::nn {

using Index = std::shared_ptr<const std::vector<int>>;

inline Index make_index(std::vector<int> idx) { return std::make_shared<const std::vector<int>>(std::move(idx)); }

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// a (r x c) + bias (1 x c) broadcast over rows.
template <typename T> Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
/// Exact GELU, x * Φ(x).
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
template <typename T> Tensor<T> relu(const Tensor<T>& a);

/// Row-wise layer normalization with affine gamma, beta (1 x c).
template <typename T> Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));

/// Inverted dropout; the identity when !training or p == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& a, double p, CounterRng* rng, bool training);

template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, Eigen::Index start, Eigen::Index count);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, Eigen::Index start, Eigen::Index count);

/// out[r] = a[idx[r]].
template <typename T> Tensor<T> gather_rows(const Tensor<T>& a, const Index& idx);
/// out[idx[r]] += a[r], out has `out_rows` rows.
template <typename T> Tensor<T> scatter_add_rows(const Tensor<T>& a, const Index& idx, Eigen::Index out_rows);
/// out[r] = (a[r] + a[partner[r]]) / 2 where partner[r] >= 0, else a[r].
template <typename T> Tensor<T> pair_average_rows(const Tensor<T>& a, const Index& partner);

/// Per-head scaled dot products: out[e, h] = scale * <q[e, head h], k[e, head h]>.
template <typename T> Tensor<T> head_dot(const Tensor<T>& q, const Tensor<T>& k, int heads, T scale);
/// Softmax over each block of `segment` consecutive rows, independently per column.
template <typename T> Tensor<T> segment_softmax(const Tensor<T>& scores, int segment);
/// out[i, c] = Σ_s alpha[i*segment + s, head(c)] * v[i*segment + s, c].
template <typename T> Tensor<T> segment_weighted_sum(const Tensor<T>& alpha, const Tensor<T>& v, int segment);

/// Softmax over all rows, independently per column.
template <typename T> Tensor<T> column_softmax(const Tensor<T>& a);
/// Softmax over columns of each row.
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& a);
/// Column sums, 1 x c.
template <typename T> Tensor<T> sum_rows(const Tensor<T>& a);
/// Repeats a 1 x c row `rows` times.
template <typename T> Tensor<T> broadcast_rows(const Tensor<T>& a, Eigen::Index rows);
template <typename T> Tensor<T> sum(const Tensor<T>& a);

/// Σ over rows with mask[r] of -log softmax(logits[r])[target[r]]; 1 x 1.
template <typename T>
Tensor<T> cross_entropy_sum(const Tensor<T>& logits, std::span<const int> targets, std::span<const std::uint8_t> mask);

/// Plain (non-recording) softmax of a vector; throws NumericError on non-finite input.
template <typename T> std::vector<T> softmax(std::span<const T> x);

}  // namespace riga::nn
