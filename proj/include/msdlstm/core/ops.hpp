#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "msdlstm/core/autograd.hpp"
#include "msdlstm/core/label_grid.hpp"
#include "msdlstm/core/tensor.hpp"

// Differentiable primitives. Every op records its output on the tape of its
// first argument and throws DimensionError on mismatched extents.
namespace msd::ops {

// Zero "same" padding of (K-1)/2. With stride s the output extent is ceil(H/s).
// input [C,H,W], weight [O,C,K,K] with K odd, bias [O].
Var conv2d(Var input, Var weight, std::optional<Var> bias = std::nullopt,
           std::size_t stride = 1);

// [C,H,W] -> [C], per-channel arithmetic mean.
Var global_avg_pool(Var input);

// weight [O,I] times input [I], plus bias [O].
Var fully_connected(Var input, Var weight, std::optional<Var> bias = std::nullopt);

Var sigmoid(Var x);
Var tanh(Var x);

// out[c,h,w] = vec[c] * map[0,h,w].
Var hadamard_broadcast(Var channel_vec, Var spatial_map);

Var hadamard(Var a, Var b);
Var add(Var a, Var b);

// out[c,h,w] = x[c,h,w] + bias[c].
Var add_channel_bias(Var x, Var bias);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(Var x, std::size_t begin, std::size_t count);

// Corner-aligned bilinear resampling to a larger (or equal) grid.
Var bilinear_upsample(Var input, std::size_t out_h, std::size_t out_w);

// Mean over pixels of -log softmax(logits)[label]; softmax runs over channels.
Var softmax_cross_entropy(Var logits, const LabelGrid& labels);

// Sum of all entries as a one-element tensor.
Var sum(Var x);

}  // namespace msd::ops

namespace msd {

// Per-pixel softmax over channels of a [K,H,W] logits tensor.
Tensor softmax_channels(const Tensor& logits);

// Per-pixel argmax over channels. Ties resolve to the lowest class id.
LabelGrid argmax_channels(const Tensor& logits);

}  // namespace msd
