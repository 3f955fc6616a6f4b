// Differentiable tensor operations recorded on a Tape.
//
// Layout conventions: images and feature maps are C x H x W, row batches are
// N x D. Shape violations throw UsageError.
#pragma once

#include <cstddef>
#include <vector>

#include "ddir/numerics/tape.h"

namespace ddir::numerics {

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

// Sum of all elements, as a scalar.
template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> relu(Var<T> x);

// Same-size cross-correlation with zero padding. `weight` is
// C_out x C_in x k x k with odd k; `padding` must equal (k - 1) / 2. Each
// output sums over input channels, then kernel rows, then kernel columns, and
// the bias is added last.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t padding);

// Row-wise affine map: input B x D_in, weight D_out x D_in, bias D_out.
template <typename T>
Var<T> linear(Var<T> input, Var<T> weight, Var<T> bias);

// Concatenates along the channel axis: axis 0 for vectors and C x H x W
// maps, axis 1 (features) for N x D matrices. Earlier inputs come first.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  return concat_channels<T>(std::vector<Var<T>>{a, b});
}

// Channels [begin, end) on the same axis concat_channels uses.
template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t end);

// Stacks N_i x D matrices into (sum N_i) x D.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts);

// C x H x W -> C, per-channel arithmetic mean.
template <typename T>
Var<T> global_average_pool(Var<T> x);

// Mean absolute difference of equally shaped tensors.
template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target);

// D -> rows x D.
template <typename T>
Var<T> broadcast_rows(Var<T> v, std::size_t rows);

// N x D -> (N * times) x D, each row repeated `times` times in place.
template <typename T>
Var<T> repeat_rows(Var<T> x, std::size_t times);

// C x H x W feature map -> N x C rows, row n holding the features at flat
// spatial position positions[n].
template <typename T>
Var<T> gather_positions(Var<T> fm, const std::vector<std::size_t>& positions);

// N x D -> rows.size() x D, output row i holding input row rows[i]. Rows may
// repeat; their gradients add up.
template <typename T>
Var<T> gather_rows(Var<T> x, const std::vector<std::size_t>& rows);

// (Q * G) x D rows -> Q x D, output row q = sum_g weights[q*G + g] * row(q*G + g),
// summed in g order. The weights are constants.
template <typename T>
Var<T> blend_rows(Var<T> x, const std::vector<T>& weights, std::size_t group);

// Same value, no gradient flows back through it.
template <typename T>
Var<T> detach(Var<T> x);

}  // namespace ddir::numerics
