#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gemm.hpp"
#include "msdlstm/data/gridseq.hpp"
#include "msdlstm/data/heatmap.hpp"
#include "msdlstm/data/precip.hpp"
#include "msdlstm/data/synthetic.hpp"
#include "test_util.hpp"

namespace msd {
namespace {

using testing::random_tensor;

TEST(PrecipTest, IntervalBounds) {
  EXPECT_EQ(precip_to_class(0.0), 0);
  EXPECT_EQ(precip_to_class(0.005), 0);
  EXPECT_EQ(precip_to_class(0.01), 1);
  EXPECT_EQ(precip_to_class(2.999), 1);
  EXPECT_EQ(precip_to_class(3.0), 2);
  EXPECT_EQ(precip_to_class(10.99), 2);
  EXPECT_EQ(precip_to_class(11.0), 3);
  EXPECT_EQ(precip_to_class(24.9), 3);
  EXPECT_EQ(precip_to_class(25.0), 4);
  EXPECT_EQ(precip_to_class(1e6), 4);
  EXPECT_EQ(precip_to_class(std::nextafter(0.01, 0.0)), 0);
}

TEST(PrecipTest, Binary) {
  EXPECT_EQ(precip_to_class(11.0, ClassScheme::kBinary), 1);
  EXPECT_EQ(precip_to_class(0.01, ClassScheme::kBinary), 1);
  EXPECT_EQ(precip_to_class(0.0099, ClassScheme::kBinary), 0);
  EXPECT_EQ(scheme_classes(ClassScheme::kBinary), 2u);
  EXPECT_EQ(class_name(1, ClassScheme::kBinary), "Rain");
}

TEST(PrecipTest, RejectsNegativeAndNan) {
  EXPECT_THROW(precip_to_class(-1e-9), ValueError);
  EXPECT_THROW(precip_to_class(std::nan("")), ValueError);
}

TEST(PrecipTest, TotalAndMonotone) {
  std::mt19937_64 rng(40);
  std::exponential_distribution<double> dist(0.1);
  for (int i = 0; i < 10000; ++i) {
    double a = dist(rng), b = dist(rng);
    if (a > b) std::swap(a, b);
    ASSERT_LE(precip_to_class(a), precip_to_class(b));
    ASSERT_LT(precip_to_class(b), 5);
    ASSERT_EQ(precip_to_class(b, ClassScheme::kBinary), to_binary_class(precip_to_class(b)));
  }
}

TEST(SyntheticTest, Validation) {
  SyntheticParams p;
  EXPECT_NO_THROW(p.validate());
  p.steps = 1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.height = 15;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.label_factor = 3;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.humidity_blobs_min = 6;
  EXPECT_THROW(generate_synthetic(p, 1, 2), ConfigError);
}

TEST(SyntheticTest, SameSeedIsBitIdentical) {
  SyntheticParams p;
  const Dataset a = generate_synthetic(p, 9, 12);
  EXPECT_EQ(a, generate_synthetic(p, 9, 12));
  EXPECT_NE(a, generate_synthetic(p, 10, 12));
  EXPECT_EQ(a.samples[5], generate_sample(p, 9, 5));
  gemm::set_thread_count(3);
  const Dataset threaded = generate_synthetic(p, 9, 12);
  gemm::set_thread_count(1);
  EXPECT_EQ(a, threaded);
}

TEST(SyntheticTest, ShapesFollowParams) {
  SyntheticParams p;
  p.steps = 3;
  p.height = 24;
  p.width = 16;
  p.label_factor = 4;
  const Dataset d = generate_synthetic(p, 1, 2);
  EXPECT_EQ(d.label_h, 6u);
  EXPECT_EQ(d.label_w, 4u);
  EXPECT_EQ(d.num_classes, 5u);
  const auto& s = d.samples[0];
  EXPECT_EQ(s.grids.size(), 12u);
  EXPECT_EQ(s.grid(2, kWindV).shape(), (Shape{1, 24, 16}));
  for (const Tensor& g : s.grids) EXPECT_TRUE(g.all_finite());
}

TEST(SyntheticTest, ZeroWindIsStaticAndPersistenceSolvable) {
  SyntheticParams p;
  p.background_wind = 0;
  p.swirl_wind = 0;
  for (const auto& s : generate_synthetic(p, 3, 20).samples) {
    for (std::size_t t = 1; t < s.steps; ++t)
      for (std::size_t e = 0; e < kNumElements; ++e) ASSERT_EQ(s.grid(t, e), s.grid(0, e));
    const Tensor rain = rainfall(p.rain, s.grid(0, kHumidity), s.grid(0, kTemperature),
                                 s.grid(0, kWindU), s.grid(0, kWindV));
    EXPECT_EQ(s.label, rain_to_labels(rain, p.label_factor, p.scheme));
    EXPECT_EQ(persistence_baseline(s, p.rain, p.label_factor, p.scheme), s.label);
  }
}

TEST(SyntheticTest, NoRainMajorityWithinTargetBand) {
  SyntheticParams p;
  const Dataset d = generate_synthetic(p, 2024, 1000);
  std::array<std::uint64_t, 5> counts{};
  std::uint64_t total = 0;
  for (const auto& s : d.samples)
    for (std::uint8_t c : s.label.classes) ++counts[c], ++total;
  const double no_rain = static_cast<double>(counts[0]) / static_cast<double>(total);
  EXPECT_GE(no_rain, 0.50);
  EXPECT_LE(no_rain, 0.92);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_GT(counts[k], 0u) << class_name(k);
}

TEST(SyntheticTest, WindIsNearlyDivergenceFree) {
  SyntheticParams p;
  p.background_wind = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const GridSequenceSample s = generate_sample(p, 4, i);
    const Tensor& u = s.grid(0, kWindU);
    const Tensor& v = s.grid(0, kWindV);
    const std::size_t n = p.height;
    double div = 0, curl = 0;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t xp = (x + 1) % n, xm = (x + n - 1) % n;
        const std::size_t yp = (y + 1) % n, ym = (y + n - 1) % n;
        div += std::abs(u.at(0, y, xp) - u.at(0, y, xm) + v.at(0, yp, x) - v.at(0, ym, x));
        curl += std::abs(v.at(0, y, xp) - v.at(0, y, xm) - u.at(0, yp, x) + u.at(0, ym, x));
      }
    }
    // Exactly zero in the continuum; central differences leave a small residue.
    EXPECT_LT(div, 0.15 * curl) << "sample " << i;
  }
}

TEST(AdvectTest, IntegerShiftIsExact) {
  std::mt19937_64 rng(41);
  const Tensor f = random_tensor({1, 8, 6}, rng);
  const Tensor out = advect(f, Tensor({1, 8, 6}, 2.0), Tensor({1, 8, 6}, -1.0));
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 6; ++x)
      ASSERT_EQ(out.at(0, y, x), f.at(0, (y + 1) % 8, (x + 4) % 6));
}

TEST(AdvectTest, ConstantFieldUnchanged) {
  std::mt19937_64 rng(42);
  const Tensor f({1, 8, 8}, 0.25);
  EXPECT_EQ(advect(f, random_tensor({1, 8, 8}, rng, -3, 3), random_tensor({1, 8, 8}, rng, -3, 3)),
            f);
}

TEST(RainfallTest, IncreasesWithHumidityAndIgnoresStillAirConvergence) {
  RainModel m;
  std::mt19937_64 rng(43);
  const Tensor q = random_tensor({1, 16, 16}, rng, 0, 1);
  const Tensor a = random_tensor({1, 16, 16}, rng, -2, 2);
  const Tensor zero({1, 16, 16});
  Tensor wetter = q;
  for (std::size_t i = 0; i < wetter.size(); ++i) wetter[i] += 0.05;
  const Tensor r0 = rainfall(m, q, a, zero, zero);
  const Tensor r1 = rainfall(m, wetter, a, zero, zero);
  for (std::size_t i = 0; i < r0.size(); ++i) {
    ASSERT_GE(r0[i], 0);
    ASSERT_GT(r1[i], r0[i]);
  }
  RainModel no_conv = m;
  no_conv.convergence_weight = 0;
  EXPECT_EQ(rainfall(no_conv, q, a, Tensor({1, 16, 16}, 1.3), zero), r0);
}

TEST(PersistenceTest, ShiftedSceneMisplacesEveryEdge) {
  // One blob of humidity advected one cell in +x per step.
  const std::size_t n = 16;
  GridSequenceSample s(2, n, n, n, n);
  Tensor q({1, n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - 7.0, dy = static_cast<double>(y) - 8.0;
      q.at(0, y, x) = 0.3 + 0.6 * std::exp(-(dx * dx + dy * dy) / 10.0);
    }
  const Tensor u({1, n, n}, 1.0), v({1, n, n}, 0.0), a({1, n, n}, 0.0);
  s.grid(0, kHumidity) = q;
  s.grid(1, kHumidity) = advect(q, u, v);
  for (std::size_t t = 0; t < 2; ++t) {
    s.grid(t, kTemperature) = a;
    s.grid(t, kWindU) = u;
    s.grid(t, kWindV) = v;
  }
  RainModel m;
  s.label = rain_to_labels(rainfall(m, s.grid(1, kHumidity), a, u, v), 1, ClassScheme::kFiveClass);
  const LabelGrid pred = persistence_baseline(s, m, 1, ClassScheme::kFiveClass);
  std::size_t edges = 0;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      ASSERT_EQ(pred.at(y, x), s.label.at(y, (x + 1) % n));
      const bool edge = s.label.at(y, x) != s.label.at(y, (x + 1) % n);
      if (edge) {
        ++edges;
        EXPECT_NE(pred.at(y, x), s.label.at(y, x));
      }
    }
  }
  EXPECT_GT(edges, 4u);
}

TEST(PersistenceTest, AlwaysValid) {
  SyntheticParams p;
  p.scheme = ClassScheme::kBinary;
  for (const auto& s : generate_synthetic(p, 5, 10).samples) {
    const LabelGrid g = persistence_baseline(s, p.rain, p.label_factor, p.scheme);
    EXPECT_EQ(g.height, s.label.height);
    for (std::uint8_t c : g.classes) EXPECT_LT(c, 2);
  }
  GridSequenceSample one(1, 16, 16, 8, 8);
  EXPECT_THROW(persistence_baseline(one, p.rain, 2, p.scheme), ConfigError);
}

// Solves the small dense system a x = b in place.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double acc = b[c];
    for (std::size_t k = c + 1; k < n; ++k) acc -= a[c][k] * x[k];
    x[c] = acc / a[c][c];
  }
  return x;
}

struct ProbeData {
  std::vector<std::array<double, 5>> x;
  std::vector<int> y;
};

// Per-pixel features of the last step: bias, humidity, temperature gradient
// magnitude and the two humidity advection products.
ProbeData probe_features(const Dataset& d, bool shuffle_wind) {
  ProbeData out;
  const std::size_t n = d.samples.size(), t = d.steps - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = d.samples[i];
    const auto& w = shuffle_wind ? d.samples[(i + 1) % n] : s;
    const Tensor& q = s.grid(t, kHumidity);
    const Tensor& a = s.grid(t, kTemperature);
    const Tensor& u = w.grid(t, kWindU);
    const Tensor& v = w.grid(t, kWindV);
    const std::size_t h = d.height, wd = d.width;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        const std::size_t xp = (x + 1) % wd, xm = (x + wd - 1) % wd;
        const std::size_t yp = (y + 1) % h, ym = (y + h - 1) % h;
        const double qx = 0.5 * (q.at(0, y, xp) - q.at(0, y, xm));
        const double qy = 0.5 * (q.at(0, yp, x) - q.at(0, ym, x));
        const double grad = std::hypot(0.5 * (a.at(0, y, xp) - a.at(0, y, xm)),
                                       0.5 * (a.at(0, yp, x) - a.at(0, ym, x)));
        out.x.push_back({1.0, q.at(0, y, x), grad, u.at(0, y, x) * qx, v.at(0, y, x) * qy});
        out.y.push_back(s.label.at(y, x));
      }
    }
  }
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> fit_logistic(const ProbeData& d) {
  std::vector<double> w(5, 0.0);
  for (int iter = 0; iter < 25; ++iter) {
    std::vector<std::vector<double>> hess(5, std::vector<double>(5, 0.0));
    std::vector<double> grad(5, 0.0);
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      double z = 0;
      for (std::size_t k = 0; k < 5; ++k) z += w[k] * d.x[i][k];
      const double p = sigmoid(z);
      for (std::size_t k = 0; k < 5; ++k) {
        grad[k] += (p - d.y[i]) * d.x[i][k];
        for (std::size_t j = 0; j < 5; ++j) hess[k][j] += p * (1 - p) * d.x[i][k] * d.x[i][j];
      }
    }
    for (std::size_t k = 0; k < 5; ++k) hess[k][k] += 1e-6;
    const std::vector<double> step = solve(hess, grad);
    for (std::size_t k = 0; k < 5; ++k) w[k] -= step[k];
  }
  return w;
}

double log_loss(const ProbeData& d, const std::vector<double>& w) {
  double acc = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    double z = 0;
    for (std::size_t k = 0; k < 5; ++k) z += w[k] * d.x[i][k];
    const double p = std::clamp(sigmoid(z), 1e-12, 1 - 1e-12);
    acc -= d.y[i] ? std::log(p) : std::log(1 - p);
  }
  return acc / static_cast<double>(d.y.size());
}

TEST(SyntheticTest, WindCarriesInformationAboutRain) {
  SyntheticParams p;
  p.label_factor = 1;
  p.scheme = ClassScheme::kBinary;
  const Dataset fit = generate_synthetic(p, 50, 150);
  const Dataset held = generate_synthetic(p, 51, 60);
  const double real_wind = log_loss(probe_features(held, false),
                                    fit_logistic(probe_features(fit, false)));
  const double shuffled = log_loss(probe_features(held, true),
                                   fit_logistic(probe_features(fit, true)));
  RecordProperty("real", std::to_string(real_wind));
  RecordProperty("shuffled", std::to_string(shuffled));
  EXPECT_LT(real_wind, shuffled - 0.02) << "real " << real_wind << " shuffled " << shuffled;
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t n) {
  Dataset d{2 + rng() % 3, 1 + rng() % 6, 1 + rng() % 7, 1 + rng() % 4, 1 + rng() % 5,
            2 + rng() % 5, {}};
  for (std::size_t i = 0; i < n; ++i) {
    GridSequenceSample s(d.steps, d.height, d.width, d.label_h, d.label_w);
    for (Tensor& g : s.grids)
      for (std::size_t k = 0; k < g.size(); ++k) {
        double v = std::bit_cast<double>(rng());
        g[k] = std::isfinite(v) ? v : 0.5;
      }
    for (auto& c : s.label.classes) c = static_cast<std::uint8_t>(rng() % d.num_classes);
    d.samples.push_back(std::move(s));
  }
  return d;
}

TEST(GridseqTest, RoundTripIsBitExact) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = random_dataset(rng, rng() % 5);
    const std::string bytes = gridseq_to_bytes(d);
    EXPECT_EQ(gridseq_from_bytes(bytes), d);
    EXPECT_EQ(gridseq_to_bytes(gridseq_from_bytes(bytes)), bytes);
  }
}

TEST(GridseqTest, HeaderLayout) {
  std::mt19937_64 rng(45);
  const Dataset d = random_dataset(rng, 2);
  const std::string bytes = gridseq_to_bytes(d);
  EXPECT_EQ(bytes.substr(0, 4), "GSQ1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[12], 4);
  EXPECT_EQ(bytes.size(), kGridseqHeaderBytes + 2 * (d.steps * 4 * d.height * d.width * 8 +
                                                     d.label_h * d.label_w));
}

TEST(GridseqTest, FileRoundTrip) {
  SyntheticParams p;
  const Dataset d = generate_synthetic(p, 6, 3);
  const auto path = std::filesystem::temp_directory_path() / "msdlstm_gridseq_test.gsq";
  write_gridseq(path, d);
  EXPECT_EQ(read_gridseq(path), d);
  std::filesystem::remove(path);
  EXPECT_THROW(read_gridseq(path), IoError);
  EXPECT_THROW(write_gridseq(std::filesystem::path("/nonexistent/dir/x.gsq"), d), IoError);
}

TEST(GridseqTest, TruncationNamesLengths) {
  std::mt19937_64 rng(46);
  const std::string bytes = gridseq_to_bytes(random_dataset(rng, 3));
  try {
    gridseq_from_bytes(bytes.substr(0, bytes.size() - 5));
    FAIL();
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(bytes.size())), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(bytes.size() - 5)), std::string::npos) << msg;
  }
  EXPECT_THROW(gridseq_from_bytes(bytes.substr(0, 20)), FormatError);
  EXPECT_THROW(gridseq_from_bytes(bytes + "z"), FormatError);
}

TEST(GridseqTest, HeaderCorruptionRejected) {
  std::mt19937_64 rng(47);
  const std::string bytes = gridseq_to_bytes(random_dataset(rng, 1));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(gridseq_from_bytes(bad), FormatError);
  bad = bytes;
  bad[3] = '2';
  try {
    gridseq_from_bytes(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 3u);
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  bad = bytes;
  bad[12] = 3;
  EXPECT_THROW(gridseq_from_bytes(bad), FormatError);
  bad = bytes;
  bad.back() = 100;
  EXPECT_THROW(gridseq_from_bytes(bad), FormatError);
}

TEST(GridseqTest, HugeHeaderRejectedBeforeAllocation) {
  std::string bytes = "GSQ1";
  for (std::uint32_t v : {0x7fffffffu, 4u, 4u, 65535u, 65535u, 8u, 8u, 5u})
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  bytes += std::string(64, '\0');
  EXPECT_THROW(gridseq_from_bytes(bytes), FormatError);
  bytes[0] = 'g';
  EXPECT_THROW(gridseq_from_bytes(bytes), FormatError);
}

TEST(GridseqTest, NonFiniteRejected) {
  std::mt19937_64 rng(48);
  Dataset d = random_dataset(rng, 1);
  d.samples[0].grids[0][0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(gridseq_from_bytes(gridseq_to_bytes(d)), FormatError);
}

TEST(HeatmapTest, TwoByTwoHeader) {
  LabelGrid g(2, 2);
  const std::string ppm = class_grid_to_ppm(g);
  EXPECT_EQ(ppm.substr(0, 11), "P6 2 2 255\n");
  EXPECT_EQ(ppm.size(), 11u + 12u);
}

TEST(HeatmapTest, FiveClassesFiveColors) {
  LabelGrid g(3, 5);
  for (std::size_t i = 0; i < g.size(); ++i) g.classes[i] = i % 5;
  const std::string ppm = class_grid_to_ppm(g);
  std::set<std::string> colors;
  for (std::size_t i = 11; i < ppm.size(); i += 3) colors.insert(ppm.substr(i, 3));
  EXPECT_EQ(colors.size(), 5u);
  g.classes[0] = 5;
  EXPECT_THROW(class_grid_to_ppm(g), ValueError);
}

TEST(HeatmapTest, ConstantGridIsUniform) {
  const std::string ppm = real_grid_to_ppm(Tensor({1, 4, 3}, 7.5));
  EXPECT_EQ(ppm.substr(0, 11), "P6 3 4 255\n");
  for (std::size_t i = 11; i < ppm.size(); ++i) EXPECT_EQ(ppm[i], ppm[11]);
}

TEST(HeatmapTest, GrayscaleSpansRange) {
  Tensor t({1, 1, 3});
  t[0] = -2;
  t[1] = 0;
  t[2] = 2;
  const std::string ppm = real_grid_to_ppm(t);
  EXPECT_EQ(static_cast<unsigned char>(ppm[11]), 0);
  EXPECT_EQ(static_cast<unsigned char>(ppm[14]), 128);
  EXPECT_EQ(static_cast<unsigned char>(ppm[17]), 255);
  t[1] = std::nan("");
  EXPECT_THROW(real_grid_to_ppm(t), ValueError);
}

TEST(HeatmapTest, ComparisonSideBySide) {
  LabelGrid truth(2, 3, 0), pred(2, 3, 4);
  const std::string ppm = comparison_to_ppm(truth, pred);
  EXPECT_EQ(ppm.substr(0, 11), "P6 7 2 255\n");
  ASSERT_EQ(ppm.size(), 11u + 7u * 2u * 3u);
  EXPECT_EQ(static_cast<unsigned char>(ppm[11]), kClassPalette[0][0]);
  EXPECT_EQ(ppm.substr(11 + 9, 3), std::string(3, '\0'));
  EXPECT_EQ(static_cast<unsigned char>(ppm[11 + 12]), kClassPalette[4][0]);
  EXPECT_THROW(comparison_to_ppm(truth, LabelGrid(2, 2)), DimensionError);
}

TEST(HeatmapTest, UnwritablePathNamed) {
  try {
    export_heatmap(LabelGrid(2, 2), "/nonexistent/dir/a.ppm");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/dir/a.ppm");
  }
}

}  // namespace
}  // namespace msd
