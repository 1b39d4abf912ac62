#pragma once

#include <vector>

#include "rtf/autodiff.hpp"

namespace rtf::ops {

// y = x W + b over the last axis of x. W has shape [in, out...] and b has
// shape [out...]; the result has shape x.shape[:-1] + [out...].
Var linear(Var x, Var w, Var b);

Var relu(Var x);
Var add(Var a, Var b);

// b + a broadcast along `axis` of b, where a.shape == b.shape without `axis`.
Var add_expand(Var a, Var b, std::size_t axis);

// Token-pair affine map: out[i][j] = W [h_i; h_j] + b for h of shape [N, d],
// W of shape [2d, out...]. The result has shape [N, N, out...].
Var pair_affine(Var h, Var w, Var b);

// Zero-padded "same" cross-correlation of x [H, W, c_in] with a kernel of
// shape [k, k, c_in, c_out], k in {1, 3}. Throws std::invalid_argument for
// other kernel sizes.
Var conv2d(Var x, Var kernel);

// Normalizes the last axis to zero mean, unit variance, then gain * x + bias.
Var layer_norm(Var x, Var gain, Var bias, real eps = real(1e-5));

// Per-position negative log-likelihood of `targets` under softmax(logits)
// over the last axis. Result has shape [positions]. Throws
// std::invalid_argument on out-of-range targets or a count mismatch.
Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);

// Same values under a new shape of equal size.
Var reshape(Var x, Shape shape);

Var mean(Var x);
Var sum(Var x);

// Rows [emb(ids[i-w]); ...; emb(ids[i+w])] with zero vectors beyond the
// sequence edges. Output shape [N, (2w+1) d].
Var embed_window(Var table, const std::vector<int>& ids, int window);

// Numerically stable softmax over the last axis (no tape).
Tensor softmax(const Tensor& logits);

}  // namespace rtf::ops
