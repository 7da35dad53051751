#pragma once

#include <cstdint>
#include <random>

#include "msdlstm/core/tensor.hpp"

namespace msd::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(dist(rng));
  return t;
}

// Direct zero-padded "same" convolution used as an oracle for conv2d.
inline Tensor reference_conv(const Tensor& x, const Tensor& w, const Tensor* bias,
                             std::size_t stride) {
  const std::size_t out_ch = w.extent(0), in_ch = w.extent(1), k = w.extent(2);
  const long pad = static_cast<long>(k - 1) / 2;
  const std::size_t oh = (x.height() + stride - 1) / stride;
  const std::size_t ow = (x.width() + stride - 1) / stride;
  Tensor out({out_ch, oh, ow});
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double acc = bias ? (*bias)[o] : 0.0;
        for (std::size_t c = 0; c < in_ch; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(y * stride + ky) - pad;
              const long ix = static_cast<long>(xx * stride + kx) - pad;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(x.height()) ||
                  ix >= static_cast<long>(x.width()))
                continue;
              acc += w[((o * in_ch + c) * k + ky) * k + kx] *
                     x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(o, y, xx) = static_cast<Real>(acc);
      }
    }
  }
  return out;
}

}  // namespace msd::testing
