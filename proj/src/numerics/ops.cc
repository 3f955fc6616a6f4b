#include "ddir/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ddir/numerics/gemm.h"

namespace ddir::numerics {
namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw UsageError(std::string(op) + ": " + detail);
}

void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + shape_string(s));
  }
}

// Axis that concat_channels/slice_channels operate on.
std::size_t channel_axis(const char* op, const Shape& s) {
  switch (s.size()) {
    case 1: return 0;
    case 2: return 1;
    case 3: return 0;
    default: shape_error(op, "unsupported rank for channel axis " + shape_string(s));
  }
}

template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
}

template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w,
            std::size_t k, std::size_t pad, T* cols) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
          T* out = row + y * w;
          if (sy < 0 || sy >= static_cast<long>(h)) {
            std::fill(out, out + w, T(0));
            continue;
          }
          const T* in = x + (c * h + static_cast<std::size_t>(sy)) * w;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const long sx = static_cast<long>(xx + kx) - static_cast<long>(pad);
            out[xx] = (sx < 0 || sx >= static_cast<long>(w)) ? T(0) : in[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::size_t channels, std::size_t h,
                std::size_t w, std::size_t k, std::size_t pad, T* x) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          T* out = x + (c * h + static_cast<std::size_t>(sy)) * w;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const long sx = static_cast<long>(xx + kx) - static_cast<long>(pad);
            if (sx >= 0 && sx < static_cast<long>(w)) out[sx] += row[y * w + xx];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) {
    shape_error("add", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    for (std::size_t in : {ia, ib}) {
      if (!t.requires_grad(in)) continue;
      Tensor<T>& gi = t.grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  }, "add");
}

template <typename T>
Var<T> sum(Var<T> x) {
  double acc = 0;
  for (T v : x.value().data()) acc += v;
  const std::size_t ix = x.id();
  return x.tape()->record(Tensor<T>::scalar(static_cast<T>(acc)), {x},
                          [ix](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    Tensor<T>& gx = t.grad(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  }, "sum");
}

template <typename T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& xv = t.value(ix);
    Tensor<T>& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) gx[i] += g[i];
    }
  }, "relu");
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t padding) {
  constexpr const char* kOp = "conv2d";
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(kOp, xs, 3);
  require_rank(kOp, ws, 4);
  require_rank(kOp, bias.shape(), 1);
  const std::size_t cin = xs[0], h = xs[1], w = xs[2];
  const std::size_t cout = ws[0], k = ws[2];
  if (ws[1] != cin) {
    shape_error(kOp, "weight expects " + std::to_string(ws[1]) +
                         " input channels, input has " + std::to_string(cin));
  }
  if (ws[3] != k || k % 2 == 0) shape_error(kOp, "kernel must be square and odd, got " + shape_string(ws));
  if (padding != (k - 1) / 2) shape_error(kOp, "only same-size padding (k-1)/2 is supported");
  if (bias.shape()[0] != cout) shape_error(kOp, "bias length does not match output channels");

  const std::size_t hw = h * w, kk = cin * k * k;
  std::vector<T> cols(kk * hw);
  im2col(input.value().ptr(), cin, h, w, k, padding, cols.data());
  Tensor<T> out(Shape{cout, h, w});
  gemm<T>(cout, hw, kk, {weight.value().ptr(), kk, 1}, cols.data(), hw, out.ptr(), hw);
  const Tensor<T>& bv = bias.value();
  for (std::size_t o = 0; o < cout; ++o) {
    T* row = out.ptr() + o * hw;
    for (std::size_t p = 0; p < hw; ++p) row[p] += bv[o];
  }

  const std::size_t ix = input.id(), iw = weight.id(), ib = bias.id();
  return input.tape()->record(std::move(out), {input, weight, bias},
      [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad(ib);
      for (std::size_t o = 0; o < cout; ++o) {
        T acc = T(0);
        const T* row = g.ptr() + o * hw;
        for (std::size_t p = 0; p < hw; ++p) acc += row[p];
        gb[o] += acc;
      }
    }
    const bool need_x = t.requires_grad(ix), need_w = t.requires_grad(iw);
    if (!need_x && !need_w) return;
    std::vector<T> buf(kk * hw);
    if (need_w) {
      // dW^T (kk x cout) = cols (kk x hw) * dOut^T (hw x cout)
      im2col(t.value(ix).ptr(), cin, h, w, k, padding, buf.data());
      std::vector<T> gt(hw * cout), dwt(kk * cout);
      transpose(g.ptr(), cout, hw, gt.data());
      gemm<T>(kk, cout, hw, {buf.data(), hw, 1}, gt.data(), cout, dwt.data(), cout);
      Tensor<T>& gw = t.grad(iw);
      for (std::size_t o = 0; o < cout; ++o) {
        for (std::size_t j = 0; j < kk; ++j) gw[o * kk + j] += dwt[j * cout + o];
      }
    }
    if (need_x) {
      // dcols (kk x hw) = W^T (kk x cout) * dOut (cout x hw)
      gemm<T>(kk, hw, cout, {t.value(iw).ptr(), 1, kk}, g.ptr(), hw, buf.data(), hw);
      col2im_add(buf.data(), cin, h, w, k, padding, t.grad(ix).ptr());
    }
  }, kOp);
}

template <typename T>
Var<T> linear(Var<T> input, Var<T> weight, Var<T> bias) {
  constexpr const char* kOp = "linear";
  require_rank(kOp, input.shape(), 2);
  require_rank(kOp, weight.shape(), 2);
  require_rank(kOp, bias.shape(), 1);
  const std::size_t rows = input.shape()[0], din = input.shape()[1];
  const std::size_t dout = weight.shape()[0];
  if (weight.shape()[1] != din) {
    shape_error(kOp, "input width " + std::to_string(din) + " vs weight " +
                         shape_string(weight.shape()));
  }
  if (bias.shape()[0] != dout) shape_error(kOp, "bias length does not match output width");

  std::vector<T> wt(din * dout);
  transpose(weight.value().ptr(), dout, din, wt.data());
  Tensor<T> out(Shape{rows, dout});
  gemm<T>(rows, dout, din, {input.value().ptr(), din, 1}, wt.data(), dout, out.ptr(), dout);
  const Tensor<T>& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.ptr() + r * dout;
    for (std::size_t o = 0; o < dout; ++o) row[o] += bv[o];
  }

  const std::size_t ix = input.id(), iw = weight.id(), ib = bias.id();
  return input.tape()->record(std::move(out), {input, weight, bias},
      [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* row = g.ptr() + r * dout;
        for (std::size_t o = 0; o < dout; ++o) gb[o] += row[o];
      }
    }
    if (t.requires_grad(iw)) {
      // dW (dout x din) += dOut^T (dout x rows) * X (rows x din)
      gemm<T>(dout, din, rows, {g.ptr(), 1, dout}, t.value(ix).ptr(), din,
              t.grad(iw).ptr(), din, true);
    }
    if (t.requires_grad(ix)) {
      // dX (rows x din) += dOut (rows x dout) * W (dout x din)
      gemm<T>(rows, din, dout, {g.ptr(), dout, 1}, t.value(iw).ptr(), din,
              t.grad(ix).ptr(), din, true);
    }
  }, kOp);
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  constexpr const char* kOp = "concat_channels";
  if (parts.empty()) shape_error(kOp, "no inputs");
  const Shape& s0 = parts[0].shape();
  const std::size_t axis = channel_axis(kOp, s0);
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const Var<T>& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) shape_error(kOp, "rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != s0[d]) {
        shape_error(kOp, shape_string(s) + " vs " + shape_string(s0) +
                             " differ outside the channel axis");
      }
    }
    out_shape[axis] += s[axis];
  }
  // Rows of the copy: everything before the axis; block: axis extent * inner.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < out_shape.size(); ++d) inner *= out_shape[d];
  const std::size_t out_block = out_shape[axis] * inner;

  Tensor<T> out(out_shape);
  std::vector<std::size_t> offsets, blocks, ids;
  std::size_t offset = 0;
  for (const Var<T>& p : parts) {
    const std::size_t block = p.shape()[axis] * inner;
    const T* src = p.value().ptr();
    for (std::size_t r = 0; r < outer; ++r) {
      std::copy(src + r * block, src + (r + 1) * block, out.ptr() + r * out_block + offset);
    }
    offsets.push_back(offset);
    blocks.push_back(block);
    ids.push_back(p.id());
    offset += block;
  }
  return parts[0].tape()->record(std::move(out), parts,
      [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.requires_grad(ids[i])) continue;
      T* gp = t.grad(ids[i]).ptr();
      for (std::size_t r = 0; r < outer; ++r) {
        const T* src = g.ptr() + r * out_block + offsets[i];
        for (std::size_t j = 0; j < blocks[i]; ++j) gp[r * blocks[i] + j] += src[j];
      }
    }
  }, kOp);
}

template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t end) {
  constexpr const char* kOp = "slice_channels";
  const Shape& s = x.shape();
  const std::size_t axis = channel_axis(kOp, s);
  if (begin > end || end > s[axis]) shape_error(kOp, "range out of bounds");
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t in_block = s[axis] * inner;
  const std::size_t out_block = (end - begin) * inner;
  const std::size_t offset = begin * inner;
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  Tensor<T> out(out_shape);
  const T* src = x.value().ptr();
  for (std::size_t r = 0; r < outer; ++r) {
    std::copy(src + r * in_block + offset, src + r * in_block + offset + out_block,
              out.ptr() + r * out_block);
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gx = t.grad(ix).ptr();
    for (std::size_t r = 0; r < outer; ++r) {
      for (std::size_t j = 0; j < out_block; ++j) {
        gx[r * in_block + offset + j] += g[r * out_block + j];
      }
    }
  }, kOp);
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  constexpr const char* kOp = "concat_rows";
  if (parts.empty()) shape_error(kOp, "no inputs");
  require_rank(kOp, parts[0].shape(), 2);
  const std::size_t cols = parts[0].shape()[1];
  std::size_t rows = 0;
  for (const Var<T>& p : parts) {
    require_rank(kOp, p.shape(), 2);
    if (p.shape()[1] != cols) shape_error(kOp, "column count mismatch");
    rows += p.shape()[0];
  }
  Tensor<T> out(Shape{rows, cols});
  std::vector<std::size_t> ids, starts;
  std::size_t at = 0;
  for (const Var<T>& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.ptr() + at);
    ids.push_back(p.id());
    starts.push_back(at);
    at += p.value().size();
  }
  return parts[0].tape()->record(std::move(out), parts, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.requires_grad(ids[i])) continue;
      Tensor<T>& gp = t.grad(ids[i]);
      for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += g[starts[i] + j];
    }
  }, kOp);
}

template <typename T>
Var<T> global_average_pool(Var<T> x) {
  constexpr const char* kOp = "global_average_pool";
  require_rank(kOp, x.shape(), 3);
  const std::size_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  if (hw == 0) shape_error(kOp, "empty spatial extent");
  Tensor<T> out(Shape{c});
  const T* src = x.value().ptr();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0;
    for (std::size_t p = 0; p < hw; ++p) acc += src[ch * hw + p];
    out[ch] = static_cast<T>(acc / static_cast<double>(hw));
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gx = t.grad(ix).ptr();
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T share = static_cast<T>(static_cast<double>(g[ch]) / static_cast<double>(hw));
      for (std::size_t p = 0; p < hw; ++p) gx[ch * hw + p] += share;
    }
  }, kOp);
}

template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target) {
  constexpr const char* kOp = "l1_loss";
  if (pred.shape() != target.shape()) {
    shape_error(kOp, shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
  }
  const std::size_t n = pred.value().size();
  if (n == 0) shape_error(kOp, "empty input");
  const T* p = pred.value().ptr();
  const T* q = target.value().ptr();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(p[i]) - q[i]);
  const std::size_t ip = pred.id(), it = target.id();
  return pred.tape()->record(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))),
      {pred, target}, [=](Tape<T>& t, std::size_t self) {
    const T scale = static_cast<T>(static_cast<double>(t.grad(self)[0]) / static_cast<double>(n));
    const Tensor<T>& pv = t.value(ip);
    const Tensor<T>& tv = t.value(it);
    T* gp = t.requires_grad(ip) ? t.grad(ip).ptr() : nullptr;
    T* gt = t.requires_grad(it) ? t.grad(it).ptr() : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pv[i] - tv[i];
      const T s = d > T(0) ? scale : (d < T(0) ? -scale : T(0));
      if (gp) gp[i] += s;
      if (gt) gt[i] -= s;
    }
  }, kOp);
}

template <typename T>
Var<T> broadcast_rows(Var<T> v, std::size_t rows) {
  constexpr const char* kOp = "broadcast_rows";
  require_rank(kOp, v.shape(), 1);
  const std::size_t d = v.shape()[0];
  Tensor<T> out(Shape{rows, d});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(v.value().data().begin(), v.value().data().end(), out.ptr() + r * d);
  }
  const std::size_t iv = v.id();
  return v.tape()->record(std::move(out), {v}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gv = t.grad(iv);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < d; ++j) gv[j] += g[r * d + j];
    }
  }, kOp);
}

template <typename T>
Var<T> repeat_rows(Var<T> x, std::size_t times) {
  constexpr const char* kOp = "repeat_rows";
  require_rank(kOp, x.shape(), 2);
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  Tensor<T> out(Shape{rows * times, d});
  const T* src = x.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < times; ++k) {
      std::copy(src + r * d, src + (r + 1) * d, out.ptr() + (r * times + k) * d);
    }
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < times; ++k) {
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[(r * times + k) * d + j];
      }
    }
  }, kOp);
}

template <typename T>
Var<T> gather_positions(Var<T> fm, const std::vector<std::size_t>& positions) {
  constexpr const char* kOp = "gather_positions";
  require_rank(kOp, fm.shape(), 3);
  const std::size_t c = fm.shape()[0], hw = fm.shape()[1] * fm.shape()[2];
  for (std::size_t p : positions) {
    if (p >= hw) shape_error(kOp, "position " + std::to_string(p) + " out of range");
  }
  // Position-major copy so that each gathered row is contiguous.
  std::vector<T> by_position(hw * c);
  transpose(fm.value().ptr(), c, hw, by_position.data());
  const std::size_t n = positions.size();
  Tensor<T> out(Shape{n, c});
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + i * c, by_position.data() + positions[i] * c, c * sizeof(T));
  }
  const std::size_t ifm = fm.id();
  return fm.tape()->record(std::move(out), {fm}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    std::vector<T> acc(hw * c, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      T* dst = acc.data() + positions[i] * c;
      const T* src = g.ptr() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
    T* gfm = t.grad(ifm).ptr();
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t p = 0; p < hw; ++p) gfm[ch * hw + p] += acc[p * c + ch];
    }
  }, kOp);
}

template <typename T>
Var<T> gather_rows(Var<T> x, const std::vector<std::size_t>& rows) {
  constexpr const char* kOp = "gather_rows";
  require_rank(kOp, x.shape(), 2);
  const std::size_t n_in = x.shape()[0], d = x.shape()[1];
  for (std::size_t r : rows) {
    if (r >= n_in) shape_error(kOp, "row " + std::to_string(r) + " out of range");
  }
  const std::size_t n = rows.size();
  Tensor<T> out(Shape{n, d});
  const T* src = x.value().ptr();
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + i * d, src + rows[i] * d, d * sizeof(T));
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gx = t.grad(ix).ptr();
    for (std::size_t i = 0; i < n; ++i) {
      T* dst = gx + rows[i] * d;
      const T* row = g.ptr() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += row[j];
    }
  }, kOp);
}

template <typename T>
Var<T> blend_rows(Var<T> x, const std::vector<T>& weights, std::size_t group) {
  constexpr const char* kOp = "blend_rows";
  require_rank(kOp, x.shape(), 2);
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (group == 0 || rows % group != 0) shape_error(kOp, "row count not divisible by group");
  if (weights.size() != rows) shape_error(kOp, "one weight per row required");
  const std::size_t q = rows / group;
  Tensor<T> out(Shape{q, d});
  const T* src = x.value().ptr();
  for (std::size_t i = 0; i < q; ++i) {
    T* dst = out.ptr() + i * d;
    for (std::size_t g = 0; g < group; ++g) {
      const T wgt = weights[i * group + g];
      const T* row = src + (i * group + g) * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += wgt * row[j];
    }
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& gout = t.grad(self);
    T* gx = t.grad(ix).ptr();
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t g = 0; g < group; ++g) {
        const T wgt = weights[i * group + g];
        T* row = gx + (i * group + g) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += wgt * gout[i * d + j];
      }
    }
  }, kOp);
}

template <typename T>
Var<T> detach(Var<T> x) {
  return x.tape()->constant(x.value());
}

#define DDIR_INSTANTIATE_OPS(T)                                                  \
  template Var<T> add<T>(Var<T>, Var<T>);                                        \
  template Var<T> sum<T>(Var<T>);                                                \
  template Var<T> relu<T>(Var<T>);                                               \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, std::size_t);                \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                             \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                \
  template Var<T> slice_channels<T>(Var<T>, std::size_t, std::size_t);           \
  template Var<T> concat_rows<T>(const std::vector<Var<T>>&);                    \
  template Var<T> global_average_pool<T>(Var<T>);                                \
  template Var<T> l1_loss<T>(Var<T>, Var<T>);                                    \
  template Var<T> broadcast_rows<T>(Var<T>, std::size_t);                        \
  template Var<T> repeat_rows<T>(Var<T>, std::size_t);                           \
  template Var<T> gather_positions<T>(Var<T>, const std::vector<std::size_t>&);  \
  template Var<T> gather_rows<T>(Var<T>, const std::vector<std::size_t>&);       \
  template Var<T> blend_rows<T>(Var<T>, const std::vector<T>&, std::size_t);     \
  template Var<T> detach<T>(Var<T>);

DDIR_INSTANTIATE_OPS(float)
DDIR_INSTANTIATE_OPS(double)

#undef DDIR_INSTANTIATE_OPS

}  // namespace ddir::numerics
