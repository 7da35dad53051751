#include "msdlstm/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gemm.hpp"

namespace msd {
namespace {

[[noreturn]] void dim_error(const char* op, const std::string& what) {
  throw DimensionError(std::string(op) + ": " + what);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    dim_error(op, "shape mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
}

// Sigmoid and tanh results stay strictly inside their open ranges: values that
// would round to an endpoint are clamped one ulp inside it.
constexpr Real kOneBelow = Real(1) - std::numeric_limits<Real>::epsilon() / 2;
constexpr Real kTiny = std::numeric_limits<Real>::min();

Real sigmoid_scalar(Real x) {
  Real s;
  if (x >= 0) {
    s = Real(1) / (Real(1) + std::exp(-x));
  } else {
    const Real e = std::exp(x);
    s = e / (Real(1) + e);
  }
  return std::clamp(s, kTiny, kOneBelow);
}

Real tanh_scalar(Real x) { return std::clamp(std::tanh(x), -kOneBelow, kOneBelow); }

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, pad, out_h, out_w;
  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_h * out_w; }
};

Tensor im2col(const Tensor& x, const ConvGeometry& g) {
  Tensor cols({g.rows(), g.cols()});
  Real* dst = cols.raw();
  const Real* src = x.raw();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        Real* row = dst + ((c * g.kernel + ky) * g.kernel + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          Real* out = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(out, out + g.out_w, Real(0));
            continue;
          }
          const Real* in = src + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            out[ox] = (ix < 0 || ix >= static_cast<long>(g.width))
                          ? Real(0)
                          : in[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
  return cols;
}

void col2im(const Tensor& cols, const ConvGeometry& g, Tensor& dx) {
  const Real* src = cols.raw();
  Real* dst = dx.raw();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const Real* row = src + ((c * g.kernel + ky) * g.kernel + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          Real* out = dst + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            out[static_cast<std::size_t>(ix)] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

Tensor transpose2d(const Real* src, std::size_t rows, std::size_t cols) {
  Tensor out({cols, rows});
  Real* dst = out.raw();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  return out;
}

// Sampling coordinate and blend weight along one axis.
struct Tap {
  std::size_t lo, hi;
  Real frac;
};

std::vector<Tap> corner_aligned_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    if (in == 1 || out == 1) {
      taps[i] = {0, 0, Real(0)};
      continue;
    }
    const Real src = static_cast<Real>(i * (in - 1)) / static_cast<Real>(out - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(src), in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - static_cast<Real>(lo)};
  }
  return taps;
}

}  // namespace

namespace ops {

Var conv2d(Var input, Var weight, std::optional<Var> bias, std::size_t stride) {
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  require_rank3(x, "conv2d");
  if (w.rank() != 4) dim_error("conv2d", "weight must be rank 4, got " + shape_string(w.shape()));
  const std::size_t out_ch = w.extent(0);
  const std::size_t k = w.extent(2);
  if (w.extent(3) != k) dim_error("conv2d", "kernel must be square");
  if (k % 2 == 0) dim_error("conv2d", "kernel size must be odd, got " + std::to_string(k));
  if (w.extent(1) != x.channels()) {
    dim_error("conv2d", "weight expects " + std::to_string(w.extent(1)) +
                            " input channels, input has " + std::to_string(x.channels()));
  }
  if (stride == 0) dim_error("conv2d", "stride must be positive");
  if (bias && (bias->value().rank() != 1 || bias->value().size() != out_ch)) {
    dim_error("conv2d", "bias must be [" + std::to_string(out_ch) + "], got " +
                            shape_string(bias->value().shape()));
  }

  const ConvGeometry g{x.channels(), x.height(), x.width(), k, stride, (k - 1) / 2,
                       (x.height() + stride - 1) / stride, (x.width() + stride - 1) / stride};
  Tensor cols = im2col(x, g);
  Tensor out({out_ch, g.out_h, g.out_w});
  gemm::nn(out_ch, g.cols(), g.rows(), w.raw(), cols.raw(), out.raw());
  if (bias) {
    const Real* b = bias->value().raw();
    Real* o = out.raw();
    for (std::size_t c = 0; c < out_ch; ++c)
      for (std::size_t p = 0; p < g.cols(); ++p) o[c * g.cols() + p] += b[c];
  }

  const std::size_t xi = input.index(), wi = weight.index();
  const std::optional<std::size_t> bi =
      bias ? std::optional<std::size_t>(bias->index()) : std::nullopt;
  Tape& tape = input.tape();
  const bool keep = tape.grad_enabled();
  auto backward = [xi, wi, bi, g, out_ch, cols = keep ? std::move(cols) : Tensor()](
                      Tape& t, const Tensor& dout, const Tensor&) {
    if (t.requires_grad(wi)) {
      gemm::nt(out_ch, g.rows(), g.cols(), dout.raw(), cols.raw(), t.grad_slot(wi).raw());
    }
    if (bi && t.requires_grad(*bi)) {
      Real* db = t.grad_slot(*bi).raw();
      for (std::size_t c = 0; c < out_ch; ++c) {
        Real acc = 0;
        for (std::size_t p = 0; p < g.cols(); ++p) acc += dout[c * g.cols() + p];
        db[c] += acc;
      }
    }
    if (t.requires_grad(xi)) {
      const Tensor wt = transpose2d(t.value(wi).raw(), out_ch, g.rows());
      Tensor dcols({g.rows(), g.cols()});
      gemm::nn(g.rows(), g.cols(), out_ch, wt.raw(), dout.raw(), dcols.raw());
      col2im(dcols, g, t.grad_slot(xi));
    }
  };
  if (bias) return tape.record("conv2d", std::move(out), {input, weight, *bias}, std::move(backward));
  return tape.record("conv2d", std::move(out), {input, weight}, std::move(backward));
}

Var global_avg_pool(Var input) {
  const Tensor& x = input.value();
  require_rank3(x, "global_avg_pool");
  const std::size_t plane = x.plane();
  if (plane == 0) dim_error("global_avg_pool", "empty spatial extent");
  Tensor out({x.channels()});
  for (std::size_t c = 0; c < x.channels(); ++c) {
    Real acc = 0;
    for (std::size_t p = 0; p < plane; ++p) acc += x[c * plane + p];
    out[c] = acc / static_cast<Real>(plane);
  }
  const std::size_t xi = input.index();
  return input.tape().record("global_avg_pool", std::move(out), {input},
                             [xi, plane](Tape& t, const Tensor& dout, const Tensor&) {
                               Tensor& dx = t.grad_slot(xi);
                               const Real inv = Real(1) / static_cast<Real>(plane);
                               for (std::size_t c = 0; c < dout.size(); ++c)
                                 for (std::size_t p = 0; p < plane; ++p)
                                   dx[c * plane + p] += dout[c] * inv;
                             });
}

Var fully_connected(Var input, Var weight, std::optional<Var> bias) {
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  if (x.rank() != 1) dim_error("fully_connected", "input must be a vector, got " + shape_string(x.shape()));
  if (w.rank() != 2 || w.extent(1) != x.size()) {
    dim_error("fully_connected", "weight " + shape_string(w.shape()) +
                                     " incompatible with input of length " +
                                     std::to_string(x.size()));
  }
  const std::size_t out_n = w.extent(0), in_n = x.size();
  if (bias && (bias->value().rank() != 1 || bias->value().size() != out_n)) {
    dim_error("fully_connected", "bias must be [" + std::to_string(out_n) + "]");
  }
  Tensor out({out_n});
  gemm::nn(out_n, 1, in_n, w.raw(), x.raw(), out.raw());
  if (bias)
    for (std::size_t o = 0; o < out_n; ++o) out[o] += bias->value()[o];

  const std::size_t xi = input.index(), wi = weight.index();
  const std::optional<std::size_t> bi =
      bias ? std::optional<std::size_t>(bias->index()) : std::nullopt;
  auto backward = [xi, wi, bi, out_n, in_n](Tape& t, const Tensor& dout, const Tensor&) {
    if (t.requires_grad(wi)) {
      Real* dw = t.grad_slot(wi).raw();
      const Tensor& xv = t.value(xi);
      for (std::size_t o = 0; o < out_n; ++o)
        for (std::size_t i = 0; i < in_n; ++i) dw[o * in_n + i] += dout[o] * xv[i];
    }
    if (bi && t.requires_grad(*bi)) t.accumulate(*bi, dout);
    if (t.requires_grad(xi)) {
      Real* dx = t.grad_slot(xi).raw();
      const Tensor& wv = t.value(wi);
      for (std::size_t o = 0; o < out_n; ++o)
        for (std::size_t i = 0; i < in_n; ++i) dx[i] += wv[o * in_n + i] * dout[o];
    }
  };
  Tape& tape = input.tape();
  if (bias) return tape.record("fully_connected", std::move(out), {input, weight, *bias}, std::move(backward));
  return tape.record("fully_connected", std::move(out), {input, weight}, std::move(backward));
}

Var sigmoid(Var x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid_scalar(in[i]);
  const std::size_t xi = x.index();
  return x.tape().record("sigmoid", std::move(out), {x},
                         [xi](Tape& t, const Tensor& dout, const Tensor& y) {
                           Tensor& dx = t.grad_slot(xi);
                           for (std::size_t i = 0; i < y.size(); ++i)
                             dx[i] += dout[i] * y[i] * (Real(1) - y[i]);
                         });
}

Var tanh(Var x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = tanh_scalar(in[i]);
  const std::size_t xi = x.index();
  return x.tape().record("tanh", std::move(out), {x},
                         [xi](Tape& t, const Tensor& dout, const Tensor& y) {
                           Tensor& dx = t.grad_slot(xi);
                           for (std::size_t i = 0; i < y.size(); ++i)
                             dx[i] += dout[i] * (Real(1) - y[i] * y[i]);
                         });
}

Var hadamard_broadcast(Var channel_vec, Var spatial_map) {
  const Tensor& v = channel_vec.value();
  const Tensor& m = spatial_map.value();
  if (v.rank() != 1) dim_error("hadamard_broadcast", "channel operand must be a vector");
  require_rank3(m, "hadamard_broadcast");
  if (m.channels() != 1) {
    dim_error("hadamard_broadcast", "spatial operand must have one channel, got " +
                                        std::to_string(m.channels()));
  }
  const std::size_t channels = v.size(), plane = m.plane();
  Tensor out({channels, m.height(), m.width()});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = v[c] * m[p];
  const std::size_t vi = channel_vec.index(), mi = spatial_map.index();
  return channel_vec.tape().record(
      "hadamard_broadcast", std::move(out), {channel_vec, spatial_map},
      [vi, mi, channels, plane](Tape& t, const Tensor& dout, const Tensor&) {
        if (t.requires_grad(vi)) {
          Tensor& dv = t.grad_slot(vi);
          const Tensor& mv = t.value(mi);
          for (std::size_t c = 0; c < channels; ++c) {
            Real acc = 0;
            for (std::size_t p = 0; p < plane; ++p) acc += dout[c * plane + p] * mv[p];
            dv[c] += acc;
          }
        }
        if (t.requires_grad(mi)) {
          Tensor& dm = t.grad_slot(mi);
          const Tensor& vv = t.value(vi);
          for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t p = 0; p < plane; ++p) dm[p] += dout[c * plane + p] * vv[c];
        }
      });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ai = a.index(), bi = b.index();
  return a.tape().record("hadamard", std::move(out), {a, b},
                         [ai, bi](Tape& t, const Tensor& dout, const Tensor&) {
                           if (t.requires_grad(ai)) {
                             Tensor& da = t.grad_slot(ai);
                             const Tensor& bv = t.value(bi);
                             for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * bv[i];
                           }
                           if (t.requires_grad(bi)) {
                             Tensor& db = t.grad_slot(bi);
                             const Tensor& av = t.value(ai);
                             for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i] * av[i];
                           }
                         });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ai = a.index(), bi = b.index();
  return a.tape().record("add", std::move(out), {a, b},
                         [ai, bi](Tape& t, const Tensor& dout, const Tensor&) {
                           if (t.requires_grad(ai)) t.accumulate(ai, dout);
                           if (t.requires_grad(bi)) t.accumulate(bi, dout);
                         });
}

Var add_channel_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank3(xv, "add_channel_bias");
  if (bv.rank() != 1 || bv.size() != xv.channels()) {
    dim_error("add_channel_bias", "bias " + shape_string(bv.shape()) + " for input " +
                                      shape_string(xv.shape()));
  }
  const std::size_t plane = xv.plane();
  Tensor out(xv.shape());
  for (std::size_t c = 0; c < xv.channels(); ++c)
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = xv[c * plane + p] + bv[c];
  const std::size_t xi = x.index(), bi = bias.index();
  return x.tape().record("add_channel_bias", std::move(out), {x, bias},
                         [xi, bi, plane](Tape& t, const Tensor& dout, const Tensor&) {
                           if (t.requires_grad(xi)) t.accumulate(xi, dout);
                           if (t.requires_grad(bi)) {
                             Tensor& db = t.grad_slot(bi);
                             for (std::size_t c = 0; c < db.size(); ++c) {
                               Real acc = 0;
                               for (std::size_t p = 0; p < plane; ++p) acc += dout[c * plane + p];
                               db[c] += acc;
                             }
                           }
                         });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) dim_error("concat_channels", "no inputs");
  const Tensor& first = parts[0].value();
  require_rank3(first, "concat_channels");
  std::size_t channels = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    require_rank3(v, "concat_channels");
    if (v.height() != first.height() || v.width() != first.width()) {
      dim_error("concat_channels", "spatial mismatch " + shape_string(v.shape()) + " vs " +
                                       shape_string(first.shape()));
    }
    channels += v.channels();
  }
  Tensor out({channels, first.height(), first.width()});
  std::vector<std::size_t> indices, offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.raw(), v.raw() + v.size(), out.raw() + offset);
    indices.push_back(p.index());
    offsets.push_back(offset);
    offset += v.size();
  }
  return parts[0].tape().record(
      "concat_channels", std::move(out), parts,
      [indices = std::move(indices), offsets = std::move(offsets)](
          Tape& t, const Tensor& dout, const Tensor&) {
        for (std::size_t k = 0; k < indices.size(); ++k) {
          if (!t.requires_grad(indices[k])) continue;
          Tensor& d = t.grad_slot(indices[k]);
          const Real* src = dout.raw() + offsets[k];
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
        }
      });
}

Var slice_channels(Var x, std::size_t begin, std::size_t count) {
  const Tensor& v = x.value();
  require_rank3(v, "slice_channels");
  if (begin + count > v.channels() || count == 0) {
    dim_error("slice_channels", "range [" + std::to_string(begin) + "," +
                                    std::to_string(begin + count) + ") outside " +
                                    std::to_string(v.channels()) + " channels");
  }
  const std::size_t plane = v.plane();
  Tensor out({count, v.height(), v.width()});
  std::copy(v.raw() + begin * plane, v.raw() + (begin + count) * plane, out.raw());
  const std::size_t xi = x.index();
  return x.tape().record("slice_channels", std::move(out), {x},
                         [xi, begin, plane](Tape& t, const Tensor& dout, const Tensor&) {
                           Real* dst = t.grad_slot(xi).raw() + begin * plane;
                           for (std::size_t i = 0; i < dout.size(); ++i) dst[i] += dout[i];
                         });
}

Var bilinear_upsample(Var input, std::size_t out_h, std::size_t out_w) {
  const Tensor& x = input.value();
  require_rank3(x, "bilinear_upsample");
  if (out_h < x.height() || out_w < x.width()) {
    dim_error("bilinear_upsample", "cannot downsample " + shape_string(x.shape()) + " to " +
                                       std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const std::vector<Tap> ty = corner_aligned_taps(x.height(), out_h);
  const std::vector<Tap> tx = corner_aligned_taps(x.width(), out_w);
  const std::size_t channels = x.channels();
  Tensor out({channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t xo = 0; xo < out_w; ++xo) {
        const Real v00 = x.at(c, ty[y].lo, tx[xo].lo), v01 = x.at(c, ty[y].lo, tx[xo].hi);
        const Real v10 = x.at(c, ty[y].hi, tx[xo].lo), v11 = x.at(c, ty[y].hi, tx[xo].hi);
        const Real top = v00 + tx[xo].frac * (v01 - v00);
        const Real bottom = v10 + tx[xo].frac * (v11 - v10);
        out.at(c, y, xo) = top + ty[y].frac * (bottom - top);
      }
    }
  }
  const std::size_t xi = input.index();
  return input.tape().record(
      "bilinear_upsample", std::move(out), {input},
      [xi, ty, tx, channels, out_h, out_w](Tape& t, const Tensor& dout, const Tensor&) {
        Tensor& dx = t.grad_slot(xi);
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t y = 0; y < out_h; ++y) {
            const Real wy = ty[y].frac;
            for (std::size_t xo = 0; xo < out_w; ++xo) {
              const Real wx = tx[xo].frac;
              const Real g = dout.at(c, y, xo);
              dx.at(c, ty[y].lo, tx[xo].lo) += g * (1 - wy) * (1 - wx);
              dx.at(c, ty[y].lo, tx[xo].hi) += g * (1 - wy) * wx;
              dx.at(c, ty[y].hi, tx[xo].lo) += g * wy * (1 - wx);
              dx.at(c, ty[y].hi, tx[xo].hi) += g * wy * wx;
            }
          }
        }
      });
}

Var softmax_cross_entropy(Var logits, const LabelGrid& labels) {
  const Tensor& z = logits.value();
  require_rank3(z, "softmax_cross_entropy");
  if (labels.height != z.height() || labels.width != z.width()) {
    dim_error("softmax_cross_entropy", "label grid " + std::to_string(labels.height) + "x" +
                                           std::to_string(labels.width) +
                                           " does not match logits " + shape_string(z.shape()));
  }
  const std::size_t classes = z.channels(), plane = z.plane();
  for (std::uint8_t id : labels.classes) {
    if (id >= classes) {
      dim_error("softmax_cross_entropy", "label " + std::to_string(id) + " out of range for " +
                                             std::to_string(classes) + " classes");
    }
  }
  if (plane == 0) dim_error("softmax_cross_entropy", "empty grid");
  Tensor probs = softmax_channels(z);
  Real total = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    Real m = z[p];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, z[c * plane + p]);
    Real acc = 0;
    for (std::size_t c = 0; c < classes; ++c) acc += std::exp(z[c * plane + p] - m);
    total += m + std::log(acc) - z[labels.classes[p] * plane + p];
  }
  Tensor out({1}, total / static_cast<Real>(plane));
  const std::size_t zi = logits.index();
  return logits.tape().record(
      "softmax_cross_entropy", std::move(out), {logits},
      [zi, labels, plane, classes, probs = std::move(probs)](Tape& t, const Tensor& dout,
                                                             const Tensor&) {
        Tensor& dz = t.grad_slot(zi);
        const Real scale = dout[0] / static_cast<Real>(plane);
        for (std::size_t c = 0; c < classes; ++c) {
          for (std::size_t p = 0; p < plane; ++p) {
            const Real target = labels.classes[p] == c ? Real(1) : Real(0);
            dz[c * plane + p] += scale * (probs[c * plane + p] - target);
          }
        }
      });
}

Var sum(Var x) {
  const Tensor& v = x.value();
  Real acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i];
  const std::size_t xi = x.index();
  return x.tape().record("sum", Tensor({1}, acc), {x},
                         [xi](Tape& t, const Tensor& dout, const Tensor&) {
                           Tensor& dx = t.grad_slot(xi);
                           for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[0];
                         });
}

}  // namespace ops

Tensor softmax_channels(const Tensor& logits) {
  require_rank3(logits, "softmax_channels");
  const std::size_t classes = logits.channels(), plane = logits.plane();
  Tensor probs(logits.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    Real m = logits[p];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, logits[c * plane + p]);
    Real acc = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const Real e = std::exp(logits[c * plane + p] - m);
      probs[c * plane + p] = e;
      acc += e;
    }
    for (std::size_t c = 0; c < classes; ++c) probs[c * plane + p] /= acc;
  }
  return probs;
}

LabelGrid argmax_channels(const Tensor& logits) {
  require_rank3(logits, "argmax_channels");
  const std::size_t classes = logits.channels(), plane = logits.plane();
  LabelGrid out(logits.height(), logits.width());
  for (std::size_t p = 0; p < plane; ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (logits[c * plane + p] > logits[best * plane + p]) best = c;
    out.classes[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace msd
