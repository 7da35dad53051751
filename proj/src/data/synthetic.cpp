#include "msdlstm/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gemm.hpp"
#include "msdlstm/core/random.hpp"

namespace msd {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

// Signed periodic offset in (-n/2, n/2].
double periodic_delta(double d, double n) {
  d = std::fmod(d, n);
  if (d > n / 2) d -= n;
  if (d <= -n / 2) d += n;
  return d;
}

void add_blobs(Tensor& field, Rng& rng, std::size_t count, double amp_lo, double amp_hi,
               double sigma_lo, double sigma_hi) {
  const std::size_t h = field.height(), w = field.width();
  for (std::size_t b = 0; b < count; ++b) {
    const double cx = uniform(rng, 0, static_cast<double>(w));
    const double cy = uniform(rng, 0, static_cast<double>(h));
    const double amp = uniform(rng, amp_lo, amp_hi);
    const double sigma = uniform(rng, sigma_lo, sigma_hi);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t y = 0; y < h; ++y) {
      const double dy = periodic_delta(static_cast<double>(y) - cy, static_cast<double>(h));
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = periodic_delta(static_cast<double>(x) - cx, static_cast<double>(w));
        field.at(0, y, x) += amp * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
}

void wind_field(const SyntheticParams& p, Rng& rng, Tensor& u, Tensor& v) {
  const double h = static_cast<double>(p.height), w = static_cast<double>(p.width);
  const double u0 = uniform(rng, -p.background_wind, p.background_wind);
  const double v0 = uniform(rng, -p.background_wind, p.background_wind);
  u.fill(u0);
  v.fill(v0);
  for (std::size_t m = 0; m < p.swirl_modes; ++m) {
    const long kmax = static_cast<long>(p.swirl_wavenumber);
    long kx = static_cast<long>(uniform_index(rng, 2 * p.swirl_wavenumber + 1)) - kmax;
    const long ky = static_cast<long>(uniform_index(rng, 2 * p.swirl_wavenumber + 1)) - kmax;
    if (kx == 0 && ky == 0) kx = 1;
    const double amp = uniform(rng, 0.5, 1.0) * p.swirl_wind;
    const double phase = uniform(rng, 0, kTwoPi);
    // Stream function psi = c sin(arg); u = dpsi/dy, v = -dpsi/dx, scaled so
    // the mode's peak speed is amp.
    const double fx = static_cast<double>(kx) / w, fy = static_cast<double>(ky) / h;
    const double norm = std::hypot(fx, fy);
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t x = 0; x < p.width; ++x) {
        const double arg =
            kTwoPi * (fx * static_cast<double>(x) + fy * static_cast<double>(y)) + phase;
        const double c = amp * std::cos(arg) / norm;
        u.at(0, y, x) += c * fy;
        v.at(0, y, x) -= c * fx;
      }
    }
  }
}

}  // namespace

void SyntheticParams::validate() const {
  if (steps < 2) throw ConfigError("synthetic sequences need at least 2 steps, got " +
                                   std::to_string(steps));
  if (height < 16 || width < 16)
    throw ConfigError("synthetic grids must be at least 16x16, got " + std::to_string(height) +
                      "x" + std::to_string(width));
  if (label_factor == 0 || height % label_factor != 0 || width % label_factor != 0)
    throw ConfigError("label factor " + std::to_string(label_factor) + " must divide the grid " +
                      std::to_string(height) + "x" + std::to_string(width));
  if (humidity_blobs_min > humidity_blobs_max || humidity_amplitude_min > humidity_amplitude_max ||
      humidity_sigma_min <= 0 || humidity_sigma_min > humidity_sigma_max ||
      temperature_sigma_min <= 0 || temperature_sigma_min > temperature_sigma_max)
    throw ConfigError("inverted or non-positive synthetic blob ranges");
  if (background_wind < 0 || swirl_wind < 0) throw ConfigError("wind scales must be >= 0");
  if (swirl_modes > 0 && swirl_wavenumber == 0)
    throw ConfigError("swirl modes need a wavenumber of at least 1");
  if (rain.scale <= 0 || rain.sharpness <= 0)
    throw ConfigError("rain scale and sharpness must be positive");
}

Tensor advect(const Tensor& field, const Tensor& u, const Tensor& v) {
  const std::size_t h = field.height(), w = field.width();
  if (u.shape() != field.shape() || v.shape() != field.shape())
    throw DimensionError("advect: wind " + shape_string(u.shape()) + " vs field " +
                         shape_string(field.shape()));
  Tensor out(field.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = static_cast<double>(x) - u.at(0, y, x);
      const double sy = static_cast<double>(y) - v.at(0, y, x);
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const double tx = sx - fx0, ty = sy - fy0;
      const std::size_t x0 = wrap(static_cast<long>(fx0), w), x1 = wrap(static_cast<long>(fx0) + 1, w);
      const std::size_t y0 = wrap(static_cast<long>(fy0), h), y1 = wrap(static_cast<long>(fy0) + 1, h);
      const double top = (1 - tx) * field.at(0, y0, x0) + tx * field.at(0, y0, x1);
      const double bottom = (1 - tx) * field.at(0, y1, x0) + tx * field.at(0, y1, x1);
      out.at(0, y, x) = static_cast<Real>((1 - ty) * top + ty * bottom);
    }
  }
  return out;
}

Tensor rainfall(const RainModel& m, const Tensor& q, const Tensor& a, const Tensor& u,
                const Tensor& v) {
  const std::size_t h = q.height(), w = q.width();
  for (const Tensor* t : {&a, &u, &v})
    if (t->shape() != q.shape())
      throw DimensionError("rainfall: field shapes differ: " + shape_string(t->shape()) + " vs " +
                           shape_string(q.shape()));
  auto dx = [&](const Tensor& f, std::size_t y, std::size_t x) {
    return 0.5 * (f.at(0, y, wrap(static_cast<long>(x) + 1, w)) -
                  f.at(0, y, wrap(static_cast<long>(x) - 1, w)));
  };
  auto dy = [&](const Tensor& f, std::size_t y, std::size_t x) {
    return 0.5 * (f.at(0, wrap(static_cast<long>(y) + 1, h), x) -
                  f.at(0, wrap(static_cast<long>(y) - 1, h), x));
  };
  Tensor out(q.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double front = std::hypot(dx(a, y, x), dy(a, y, x));
      const double convergence = -(u.at(0, y, x) * dx(q, y, x) + v.at(0, y, x) * dy(q, y, x));
      const double s = m.humidity_weight * (q.at(0, y, x) - m.humidity_threshold) +
                       m.front_weight * front + m.convergence_weight * convergence;
      const double z = m.sharpness * s;
      const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      out.at(0, y, x) = static_cast<Real>(m.scale * softplus / m.sharpness);
    }
  }
  return out;
}

LabelGrid rain_to_labels(const Tensor& rain, std::size_t factor, ClassScheme scheme) {
  if (factor == 0 || rain.height() % factor != 0 || rain.width() % factor != 0)
    throw ConfigError("label factor " + std::to_string(factor) + " must divide the grid");
  const std::size_t lh = rain.height() / factor, lw = rain.width() / factor;
  LabelGrid out(lh, lw);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < lh; ++y) {
    for (std::size_t x = 0; x < lw; ++x) {
      double acc = 0;
      for (std::size_t dy = 0; dy < factor; ++dy)
        for (std::size_t dx = 0; dx < factor; ++dx)
          acc += rain.at(0, y * factor + dy, x * factor + dx);
      out.at(y, x) = precip_to_class(acc * inv, scheme);
    }
  }
  return out;
}

GridSequenceSample generate_sample(const SyntheticParams& p, std::uint64_t seed,
                                   std::size_t index) {
  Rng rng = derive_rng(seed, index);
  const double scale = static_cast<double>(std::min(p.height, p.width)) / 32.0;
  Tensor q({1, p.height, p.width}, static_cast<Real>(p.humidity_base));
  const std::size_t blobs =
      p.humidity_blobs_min + uniform_index(rng, p.humidity_blobs_max - p.humidity_blobs_min + 1);
  add_blobs(q, rng, blobs, p.humidity_amplitude_min, p.humidity_amplitude_max,
            p.humidity_sigma_min * scale, p.humidity_sigma_max * scale);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::clamp<Real>(q[i], 0, 1);
  Tensor a({1, p.height, p.width});
  add_blobs(a, rng, p.temperature_blobs, -p.temperature_amplitude, p.temperature_amplitude,
            p.temperature_sigma_min * scale, p.temperature_sigma_max * scale);
  Tensor u({1, p.height, p.width}), v({1, p.height, p.width});
  wind_field(p, rng, u, v);

  GridSequenceSample s(p.steps, p.height, p.width, p.label_height(), p.label_width());
  for (std::size_t t = 0; t < p.steps; ++t) {
    if (t > 0) {
      q = advect(q, u, v);
      a = advect(a, u, v);
    }
    s.grid(t, kHumidity) = q;
    s.grid(t, kTemperature) = a;
    s.grid(t, kWindU) = u;
    s.grid(t, kWindV) = v;
  }
  s.label = rain_to_labels(rainfall(p.rain, q, a, u, v), p.label_factor, p.scheme);
  return s;
}

Dataset generate_synthetic(const SyntheticParams& params, std::uint64_t seed,
                           std::size_t n_samples) {
  params.validate();
  Dataset d{params.steps,       params.height,      params.width, params.label_height(),
            params.label_width(), params.num_classes(), {}};
  d.samples.resize(n_samples);
  const std::size_t workers = std::max<std::size_t>(1, std::min(gemm::thread_count(), n_samples));
  auto run = [&](std::size_t begin) {
    for (std::size_t i = begin; i < n_samples; i += workers)
      d.samples[i] = generate_sample(params, seed, i);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  return d;
}

LabelGrid persistence_baseline(const GridSequenceSample& s, const RainModel& model,
                               std::size_t label_factor, ClassScheme scheme) {
  if (s.steps < 2) throw ConfigError("persistence needs at least 2 observed steps");
  const std::size_t t = s.steps - 2;
  return rain_to_labels(rainfall(model, s.grid(t, kHumidity), s.grid(t, kTemperature),
                                 s.grid(t, kWindU), s.grid(t, kWindV)),
                        label_factor, scheme);
}

}  // namespace msd
