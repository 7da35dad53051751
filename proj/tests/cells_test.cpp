#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "msdlstm/cells/cell.hpp"
#include "msdlstm/cells/param_count.hpp"
#include "msdlstm/cells/serialize.hpp"
#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gradcheck.hpp"
#include "msdlstm/core/ops.hpp"
#include "test_util.hpp"

namespace msd {
namespace {

using testing::random_tensor;

CellConfig small_config(CellVariant v, std::size_t ch = 8, std::size_t cx = 5) {
  return CellConfig{v, 3, cx, ch, 6, 6};
}

TEST(CellConfigTest, Validation) {
  EXPECT_NO_THROW(small_config(CellVariant::kMsdConvLstm).validate());
  EXPECT_THROW((CellConfig{CellVariant::kConvLstm, 4, 2, 4, 3, 3}.validate()), ConfigError);
  EXPECT_THROW((CellConfig{CellVariant::kConvLstm, 1, 2, 4, 3, 3}.validate()), ConfigError);
  EXPECT_THROW((CellConfig{CellVariant::kMsdConvLstm, 3, 2, 6, 3, 3}.validate()), ConfigError);
  EXPECT_NO_THROW((CellConfig{CellVariant::kDeconstructedConvLstm, 3, 2, 6, 3, 3}.validate()));
  EXPECT_THROW((CellConfig{CellVariant::kFcConvLstm, 3, 0, 4, 3, 3}.validate()), ConfigError);
  EXPECT_THROW(make_cell_params(CellConfig{CellVariant::kFcConvLstm, 3, 0, 4, 3, 3}), ConfigError);
}

TEST(CellConfigTest, VariantNames) {
  for (CellVariant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_FALSE(parse_variant("lstm").has_value());
}

TEST(MconvTest, BranchGeometry) {
  EXPECT_EQ(multiscale_kernels(3), (std::array<std::size_t, 3>{1, 3, 5}));
  EXPECT_EQ(multiscale_channels(8), (std::array<std::size_t, 3>{2, 4, 2}));
  CellParams p = make_cell_params(small_config(CellVariant::kMsdConvLstm));
  const MultiScaleConv& m = *p.multiscale_modulation;
  EXPECT_EQ(m.input_weights[0].value.shape(), (Shape{2, 5, 1, 1}));
  EXPECT_EQ(m.input_weights[1].value.shape(), (Shape{4, 5, 3, 3}));
  EXPECT_EQ(m.hidden_weights[2].value.shape(), (Shape{2, 8, 5, 5}));
}

TEST(MconvTest, ZeroParametersGiveZero) {
  const CellConfig c = small_config(CellVariant::kMsdConvLstm);
  CellParams p = make_cell_params(c);
  std::mt19937_64 rng(20);
  Tape tape;
  Var g = mconv(tape.constant(random_tensor({5, 6, 6}, rng)),
                tape.constant(random_tensor({8, 6, 6}, rng)), *p.multiscale_modulation, 3);
  EXPECT_EQ(g.value(), Tensor({8, 6, 6}));
}

TEST(MconvTest, WeightCountClosedForm) {
  // ((K-2)^2 + 2K^2 + (K+2)^2) / 4 = K^2 + 2, checked against allocation.
  for (std::size_t k : {3u, 5u, 7u}) {
    for (std::size_t ch : {4u, 8u, 20u}) {
      const std::size_t cx = 3;
      CellParams p = make_cell_params(CellConfig{CellVariant::kMsdConvLstm, k, cx, ch, 4, 4});
      std::size_t n = 0;
      for (const auto& w : p.multiscale_modulation->input_weights) n += w.size();
      for (const auto& w : p.multiscale_modulation->hidden_weights) n += w.size();
      EXPECT_EQ(n, (cx + ch) * ch * (k * k + 2)) << "k=" << k << " ch=" << ch;
    }
  }
}

TEST(CellStepTest, ZeroParametersHalveMemory) {
  std::mt19937_64 rng(21);
  for (CellVariant v : kAllVariants) {
    const CellConfig c = small_config(v);
    CellParams p = make_cell_params(c);
    CellState s{random_tensor({8, 6, 6}, rng), random_tensor({8, 6, 6}, rng, -3, 3)};
    CellState out = cell_step(c, p, random_tensor({5, 6, 6}, rng), s);
    for (std::size_t i = 0; i < s.cell.size(); ++i) {
      ASSERT_EQ(out.cell[i], 0.5 * s.cell[i]) << variant_name(v);
      ASSERT_EQ(out.hidden[i], 0.5 * std::tanh(0.5 * s.cell[i])) << variant_name(v);
    }
  }
}

TEST(CellStepTest, HiddenStaysInsideUnitInterval) {
  std::mt19937_64 rng(22);
  for (CellVariant v : kAllVariants) {
    const CellConfig c = small_config(v);
    CellParams p = init_cell_params(c, 5);
    for (Parameter* q : p.parameters())
      for (std::size_t i = 0; i < q->size(); ++i) q->value[i] *= 8;
    CellState s = CellState::zeros(c);
    for (int t = 0; t < 20; ++t) {
      CellState next = cell_step(c, p, random_tensor({5, 6, 6}, rng, -4, 4), s);
      for (std::size_t i = 0; i < next.hidden.size(); ++i) {
        ASSERT_LT(std::abs(next.hidden[i]), 1.0);
        ASSERT_LE(std::abs(next.cell[i]), std::abs(s.cell[i]) + 1.0);
      }
      s = std::move(next);
    }
  }
}

TEST(CellStepTest, RejectsShapeMismatch) {
  const CellConfig c = small_config(CellVariant::kConvLstm);
  CellParams p = make_cell_params(c);
  EXPECT_THROW(cell_step(c, p, Tensor({4, 6, 6}), CellState::zeros(c)), DimensionError);
  EXPECT_THROW(cell_step(c, p, Tensor({5, 6, 5}), CellState::zeros(c)), DimensionError);
  CellState bad{Tensor({8, 6, 6}), Tensor({8, 5, 6})};
  EXPECT_THROW(cell_step(c, p, Tensor({5, 6, 6}), bad), DimensionError);
}

TEST(CellStepTest, NonFiniteGateIsNamed) {
  const CellConfig c = small_config(CellVariant::kConvLstm);
  CellParams p = make_cell_params(c);
  p.gates[kForgetGate].conv->input_weight.value.fill(1e308);
  try {
    cell_step(c, p, Tensor({5, 6, 6}, 1e10), CellState::zeros(c));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.context(), "forget gate");
  }
}

TEST(CellStepTest, Deterministic) {
  std::mt19937_64 rng(23);
  for (CellVariant v : kAllVariants) {
    const CellConfig c = small_config(v);
    const CellParams p = init_cell_params(c, 9);
    const Tensor x = random_tensor({5, 6, 6}, rng);
    const CellState s{random_tensor({8, 6, 6}, rng), random_tensor({8, 6, 6}, rng)};
    const CellState a = cell_step(c, p, x, s);
    const CellState b = cell_step(c, p, x, s);
    EXPECT_EQ(a.hidden, b.hidden);
    EXPECT_EQ(a.cell, b.cell);
  }
}

TEST(CellStepTest, SpatialOnlyGatesAreChannelConstant) {
  // sConv gates broadcast one map across channels; with a zero modulation and
  // unit memory the memory update i*g vanishes and C = f, so every channel of
  // C carries the same spatial map.
  std::mt19937_64 rng(24);
  const CellConfig c = small_config(CellVariant::kSconvConvLstm);
  CellParams p = init_cell_params(c, 3);
  p.modulation->input_weight.value.fill(0);
  p.modulation->hidden_weight.value.fill(0);
  p.modulation->bias.value.fill(0);
  CellState s{random_tensor({8, 6, 6}, rng), Tensor({8, 6, 6}, 1.0)};
  CellState out = cell_step(c, p, random_tensor({5, 6, 6}, rng), s);
  for (std::size_t ch = 1; ch < 8; ++ch)
    for (std::size_t px = 0; px < 36; ++px) ASSERT_EQ(out.cell[ch * 36 + px], out.cell[px]);
}

TEST(CellStepTest, MultiscaleMiddleBranchEmbedsIntoStandardConv) {
  std::mt19937_64 rng(25);
  const CellConfig msd = small_config(CellVariant::kMsdConvLstm);
  const CellConfig dec = small_config(CellVariant::kDeconstructedConvLstm);
  CellParams pm = init_cell_params(msd, 1);
  CellParams pd = make_cell_params(dec);
  for (std::size_t b : {0u, 2u}) {
    pm.multiscale_modulation->input_weights[b].value.fill(0);
    pm.multiscale_modulation->hidden_weights[b].value.fill(0);
  }
  // Middle branch produces channels [2, 6); copy its weights into the same
  // output rows of the standard convolution.
  const std::size_t lo = 2, hi = 6;
  auto embed = [&](const Parameter& src, Parameter& dst) {
    const std::size_t row = src.value.size() / (hi - lo);
    for (std::size_t o = lo; o < hi; ++o)
      for (std::size_t k = 0; k < row; ++k) dst.value[o * row + k] = src.value[(o - lo) * row + k];
  };
  embed(pm.multiscale_modulation->input_weights[1], pd.modulation->input_weight);
  embed(pm.multiscale_modulation->hidden_weights[1], pd.modulation->hidden_weight);
  pd.modulation->bias.value = pm.multiscale_modulation->bias.value;

  const Tensor x = random_tensor({5, 6, 6}, rng);
  const Tensor h = random_tensor({8, 6, 6}, rng);
  Tape tape(false);
  Var gm = mconv(tape.constant(x), tape.constant(h), *pm.multiscale_modulation, 3);
  Var gd = ops::tanh(ops::add_channel_bias(
      ops::add(ops::conv2d(tape.constant(x), tape.parameter(pd.modulation->input_weight)),
               ops::conv2d(tape.constant(h), tape.parameter(pd.modulation->hidden_weight))),
      tape.parameter(pd.modulation->bias)));
  for (std::size_t i = lo * 36; i < hi * 36; ++i) ASSERT_EQ(gm.value()[i], gd.value()[i]);
}

class CellGradientTest : public ::testing::TestWithParam<CellVariant> {};

TEST_P(CellGradientTest, SingleStepPassesGradcheck) {
  const CellConfig c = small_config(GetParam());
  CellParams p = init_cell_params(c, 42);
  std::mt19937_64 rng(26);
  Parameter x("x", random_tensor({5, 6, 6}, rng));
  Parameter h0("h0", random_tensor({8, 6, 6}, rng, -0.9, 0.9));
  Parameter c0("c0", random_tensor({8, 6, 6}, rng));
  auto f = [&](Tape& tape) {
    CellVars out = cell_step(c, p, tape.parameter(x),
                             CellVars{tape.parameter(h0), tape.parameter(c0)});
    return ops::sum(out.hidden);
  };
  std::vector<Parameter*> params = p.parameters();
  params.insert(params.end(), {&x, &h0, &c0});
  GradcheckReport report = gradcheck(f, params, {1e-4, 1e-4, 128, 7});
  EXPECT_TRUE(report.passed) << variant_name(GetParam()) << " max rel err "
                             << report.max_rel_error;
}

INSTANTIATE_TEST_SUITE_P(AllVariants, CellGradientTest, ::testing::ValuesIn(kAllVariants),
                         [](const auto& info) { return std::string(variant_name(info.param)); });

TEST(ParamCountTest, ReferenceConfiguration) {
  const std::pair<CellVariant, std::uint64_t> expected[] = {
      {CellVariant::kConvLstm, 3391488},
      {CellVariant::kFcConvLstm, 1130496},
      {CellVariant::kSconvConvLstm, 867744},
      {CellVariant::kDeconstructedConvLstm, 1150368},
      {CellVariant::kMsdConvLstm, 1338784},
  };
  for (const auto& [v, n] : expected) {
    EXPECT_EQ(param_count_formula(v, 3, 608, 128), n) << variant_name(v);
    EXPECT_EQ(param_count_enumerated(make_cell_params(CellConfig{v, 3, 608, 128, 1, 1})).weights,
              n)
        << variant_name(v);
  }
}

TEST(ParamCountTest, EnumerationMatchesFormulaOnRandomConfigs) {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 3 + 2 * (rng() % 3);
    const std::size_t cx = 1 + rng() % 64;
    const std::size_t ch = 4 * (1 + rng() % 16);
    for (CellVariant v : kAllVariants) {
      const ParamCount n = param_count_enumerated(make_cell_params(CellConfig{v, k, cx, ch, 1, 1}));
      ASSERT_EQ(n.weights, param_count_formula(v, k, cx, ch))
          << variant_name(v) << " k=" << k << " cx=" << cx << " ch=" << ch;
    }
  }
}

TEST(ParamCountTest, BiasesCountedSeparately) {
  const std::size_t ch = 8;
  auto biases = [&](CellVariant v) {
    return param_count_enumerated(make_cell_params(CellConfig{v, 3, 5, ch, 1, 1})).biases;
  };
  EXPECT_EQ(biases(CellVariant::kConvLstm), 4 * ch);
  EXPECT_EQ(biases(CellVariant::kFcConvLstm), 4 * ch);
  EXPECT_EQ(biases(CellVariant::kSconvConvLstm), 3 + ch);
  EXPECT_EQ(biases(CellVariant::kDeconstructedConvLstm), 4 * ch);
  EXPECT_EQ(biases(CellVariant::kMsdConvLstm), 4 * ch);
}

TEST(ParamCountTest, Ordering) {
  auto n = [](CellVariant v, std::size_t k, std::size_t cx, std::size_t ch) {
    return param_count_formula(v, k, cx, ch);
  };
  // Full ordering at the reference configuration.
  EXPECT_GT(n(CellVariant::kConvLstm, 3, 608, 128), n(CellVariant::kMsdConvLstm, 3, 608, 128));
  EXPECT_GT(n(CellVariant::kMsdConvLstm, 3, 608, 128),
            n(CellVariant::kDeconstructedConvLstm, 3, 608, 128));
  EXPECT_GT(n(CellVariant::kDeconstructedConvLstm, 3, 608, 128),
            n(CellVariant::kFcConvLstm, 3, 608, 128));
  EXPECT_GT(n(CellVariant::kFcConvLstm, 3, 608, 128), n(CellVariant::kSconvConvLstm, 3, 608, 128));

  // Orderings that hold for every Ch >= 4, K >= 3. FC > sConv needs Ch > K^2.
  for (std::size_t k : {3u, 5u, 7u}) {
    for (std::size_t ch = 4; ch <= 64; ch += 4) {
      for (std::size_t cx : {1u, 17u, 64u}) {
        EXPECT_GT(n(CellVariant::kConvLstm, k, cx, ch), n(CellVariant::kDeconstructedConvLstm, k, cx, ch));
        EXPECT_GT(n(CellVariant::kDeconstructedConvLstm, k, cx, ch), n(CellVariant::kFcConvLstm, k, cx, ch));
        EXPECT_GT(n(CellVariant::kDeconstructedConvLstm, k, cx, ch), n(CellVariant::kSconvConvLstm, k, cx, ch));
        EXPECT_GT(n(CellVariant::kConvLstm, k, cx, ch), n(CellVariant::kMsdConvLstm, k, cx, ch));
        EXPECT_EQ(n(CellVariant::kFcConvLstm, k, cx, ch) > n(CellVariant::kSconvConvLstm, k, cx, ch),
                  ch > k * k);
      }
    }
  }
}

TEST(ParamCountTest, RejectsInvalidConfig) {
  EXPECT_THROW(param_count_formula(CellVariant::kMsdConvLstm, 3, 8, 6), ConfigError);
  EXPECT_THROW(param_count_formula(CellVariant::kConvLstm, 4, 8, 8), ConfigError);
  EXPECT_THROW(param_count_formula(CellVariant::kConvLstm, 3, 0, 8), ConfigError);
}

TEST(CellSerializeTest, RoundTripIsBitExact) {
  std::mt19937_64 rng(28);
  for (CellVariant v : kAllVariants) {
    const CellConfig c{v, 3 + 2 * (rng() % 2), 1 + rng() % 9, 4 * (1 + rng() % 4), 5, 7};
    CellParams p = make_cell_params(c);
    for (Parameter* q : p.parameters())
      for (std::size_t i = 0; i < q->size(); ++i)
        q->value[i] = std::bit_cast<double>(rng() & 0x7fefffffffffffffull);
    const std::string bytes = cell_to_bytes(c, p);
    LoadedCell back = cell_from_bytes(bytes);
    EXPECT_EQ(back.config, c);
    auto a = p.parameters();
    auto b = back.params.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
    EXPECT_EQ(cell_to_bytes(back.config, back.params), bytes);
  }
}

TEST(CellSerializeTest, StreamLayout) {
  const CellConfig c{CellVariant::kSconvConvLstm, 3, 2, 4, 1, 1};
  CellParams p = make_cell_params(c);
  const std::string bytes = cell_to_bytes(c, p);
  const ParamCount n = param_count_enumerated(p);
  EXPECT_EQ(bytes.size(), 24 + 8 * (n.weights + n.biases));
  EXPECT_EQ(bytes[0], 2);
  // Weights precede every bias.
  auto params = p.parameters();
  bool seen_bias = false;
  for (const Parameter* q : params) {
    if (q->kind == ParamKind::kBias) seen_bias = true;
    else EXPECT_FALSE(seen_bias) << q->name;
  }
  EXPECT_EQ(params.front()->name, "cell.input.spatial.wx");
  EXPECT_EQ(params.back()->name, "cell.modulation.conv.b");
}

TEST(CellSerializeTest, TruncationRejected) {
  const CellConfig c = small_config(CellVariant::kFcConvLstm);
  const std::string bytes = cell_to_bytes(c, make_cell_params(c));
  EXPECT_THROW(cell_from_bytes(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(cell_from_bytes(bytes.substr(0, 10)), FormatError);
  std::string bad = bytes;
  bad[0] = 9;
  EXPECT_THROW(cell_from_bytes(bad), FormatError);
}

}  // namespace
}  // namespace msd
