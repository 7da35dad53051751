#include "msdlstm/cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "msdlstm/cells/param_count.hpp"
#include "msdlstm/cli/bench.hpp"
#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gradcheck.hpp"
#include "msdlstm/core/ops.hpp"
#include "msdlstm/core/random.hpp"
#include "msdlstm/data/gridseq.hpp"
#include "msdlstm/data/heatmap.hpp"
#include "msdlstm/model/checkpoint.hpp"
#include "msdlstm/train/trainer.hpp"

namespace msd::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kReferenceCounts[] = {3391488, 1130496, 867744, 1150368, 1338784};

// A failed verification that already printed its report.
struct CheckFailed {};

std::vector<CellVariant> selected_variants(const std::string& name) {
  if (name == "all") return {kAllVariants.begin(), kAllVariants.end()};
  return {*parse_variant(name)};
}

const CLI::Validator kOddKernel(
    [](std::string& s) -> std::string {
      try {
        const long k = std::stol(s);
        if (k >= 3 && k % 2 == 1) return {};
      } catch (...) {
      }
      return "kernel size must be an odd integer >= 3, got " + s;
    },
    "ODD>=3");

const CLI::Validator kVariantOrAll(
    [](std::string& s) -> std::string {
      if (s == "all" || parse_variant(s)) return {};
      return "unknown variant '" + s + "' (expected convlstm, fc, sconv, deconstructed, msd or all)";
    },
    "VARIANT");

const CLI::Validator kVariant(
    [](std::string& s) -> std::string {
      if (parse_variant(s)) return {};
      return "unknown variant '" + s + "' (expected convlstm, fc, sconv, deconstructed or msd)";
    },
    "VARIANT");

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------- param-count

struct ParamCountArgs {
  std::string variant = "all";
  std::size_t kernel = 3;
  std::size_t input_channels = 32;
  std::size_t hidden_channels = 16;
  bool reference = false;
};

int param_count(const ParamCountArgs& a, std::ostream& out) {
  std::size_t k = a.kernel, cx = a.input_channels, ch = a.hidden_channels;
  if (a.reference) {
    k = 3;
    cx = 608;
    ch = 128;
  }
  const auto variants = selected_variants(a.variant);
  for (CellVariant v : variants) CellConfig{v, k, cx, ch, 1, 1}.validate();

  out << "K=" << k << " Cx=" << cx << " Ch=" << ch << "\n";
  out << std::left << std::setw(24) << "variant" << std::right << std::setw(12) << "formula"
      << std::setw(12) << "enumerated";
  if (a.reference) out << std::setw(12) << "reference";
  out << "  status\n";
  bool ok = true;
  for (CellVariant v : variants) {
    const std::uint64_t formula = param_count_formula(v, k, cx, ch);
    const std::uint64_t enumerated =
        param_count_enumerated(make_cell_params(CellConfig{v, k, cx, ch, 1, 1})).weights;
    bool row_ok = formula == enumerated;
    out << std::left << std::setw(24) << variant_title(v) << std::right << std::setw(12)
        << formula << std::setw(12) << enumerated;
    if (a.reference) {
      const std::uint64_t expected = kReferenceCounts[static_cast<std::size_t>(v)];
      row_ok = row_ok && formula == expected;
      out << std::setw(12) << expected;
    }
    out << "  " << (row_ok ? "ok" : "MISMATCH") << "\n";
    ok = ok && row_ok;
  }
  if (!ok) throw CheckFailed{};
  return kOk;
}

// ------------------------------------------------------------------ gradcheck

struct GradcheckArgs {
  std::string variant = "all";
  std::uint64_t seed = 0;
  double tol = 1e-4;
  std::size_t hidden_channels = 8;
  std::size_t entries = 128;
  bool skip_model = false;
};

int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  if (!(a.tol >= 0)) throw ConfigError("--tol must be >= 0");
  bool ok = true, numeric = false;
  auto report_line = [&](const char* suite, CellVariant v, const GradcheckReport& r) {
    out << std::left << std::setw(6) << suite << std::setw(24) << variant_title(v)
        << "max_rel_error=" << sci(r.max_rel_error) << "  " << (r.passed ? "PASS" : "FAIL");
    if (!r.failure.empty()) out << "  (" << r.failure << ")";
    out << "\n";
    ok = ok && r.passed;
    numeric = numeric || !r.failure.empty();
  };
  const GradcheckOptions opts{1e-4, a.tol, a.entries, a.seed};
  for (CellVariant v : selected_variants(a.variant)) {
    const CellConfig c{v, 3, 5, a.hidden_channels, 6, 6};
    CellParams p = init_cell_params(c, a.seed);
    Rng rng = derive_rng(a.seed, 100);
    auto random_param = [&](const char* name, Shape shape, double scale) {
      Parameter q(name, Tensor(std::move(shape)));
      for (std::size_t i = 0; i < q.size(); ++i)
        q.value[i] = static_cast<Real>(uniform(rng, -scale, scale));
      return q;
    };
    Parameter x = random_param("x", {5, 6, 6}, 1.0);
    Parameter h0 = random_param("h0", {a.hidden_channels, 6, 6}, 0.9);
    Parameter c0 = random_param("c0", {a.hidden_channels, 6, 6}, 1.0);
    auto f = [&](Tape& tape) {
      CellVars s = cell_step(c, p, tape.parameter(x),
                             CellVars{tape.parameter(h0), tape.parameter(c0)});
      return ops::sum(s.hidden);
    };
    std::vector<Parameter*> params = p.parameters();
    params.insert(params.end(), {&x, &h0, &c0});
    report_line("cell", v, gradcheck(f, params, opts));

    if (a.skip_model) continue;
    const ModelConfig mc = ModelConfig::make(v, 12, 12, 6, 6, 2, a.hidden_channels, 2, 8);
    ModelParams mp = init_model_params(mc, a.seed);
    // Random weights for the zero-initialized output layer.
    xavier_uniform(mp.classifier.output_weight.value, a.hidden_channels * 9, 2 * 9, rng);
    GridSequenceSample s(2, 12, 12, 6, 6);
    for (Tensor& g : s.grids)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<Real>(uniform(rng, -1, 1));
    for (auto& l : s.label.classes) l = static_cast<std::uint8_t>(uniform_index(rng, 2));
    auto loss = [&](Tape& tape) {
      return sequence_loss(forward_sequence(tape, mc, mp, s), s.label);
    };
    report_line("model", v, gradcheck(loss, mp.parameters(), opts));
  }
  if (numeric) return kNumeric;
  if (!ok) throw CheckFailed{};
  return kOk;
}

// ---------------------------------------------------------------------- bench

struct BenchArgs {
  std::string variant = "all";
  std::size_t kernel = 3;
  std::size_t input_channels = 32;
  std::size_t hidden_channels = 128;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t warmup = 3;
  std::size_t iterations = 30;
  std::uint64_t seed = 0;
};

int bench_cmd(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const auto variants = selected_variants(a.variant);
  for (CellVariant v : variants)
    CellConfig{v, a.kernel, a.input_channels, a.hidden_channels, a.height, a.width}.validate();
  std::vector<BenchResult> rows;
  out << "variant,parameters,mean_ms,stddev_ms,iterations\n";
  for (CellVariant v : variants) {
    rows.push_back(bench_cell({v, a.kernel, a.input_channels, a.hidden_channels, a.height, a.width},
                              a.warmup, a.iterations, a.seed));
    const BenchResult& r = rows.back();
    out << variant_name(v) << ',' << r.parameters << ',' << fmt(r.mean_ms, 3) << ','
        << fmt(r.stddev_ms, 3) << ',' << r.iterations << '\n';
  }
  const bool ordered = count_ordering_holds(rows);
  err << "parameter ordering ConvLSTM > MSD > Deconstructed > FC > sConv: "
      << (ordered ? "holds" : "VIOLATED") << "\n";
  if (!ordered) throw CheckFailed{};
  return kOk;
}

// ------------------------------------------------------------------------ gen

struct GenArgs {
  std::string out;
  std::size_t samples = 500;
  std::uint64_t seed = 0;
  std::size_t steps = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t label_factor = 2;
  std::size_t classes = 5;
  std::optional<double> wind;
};

int gen_cmd(const GenArgs& a, std::ostream& out) {
  SyntheticParams p;
  p.steps = a.steps;
  p.height = a.height;
  p.width = a.width;
  p.label_factor = a.label_factor;
  if (a.classes != 5 && a.classes != 2)
    throw ConfigError("--classes must be 5 (intensity bins) or 2 (rain / no rain)");
  p.scheme = a.classes == 2 ? ClassScheme::kBinary : ClassScheme::kFiveClass;
  if (a.wind) p.background_wind = *a.wind;
  const Dataset d = generate_synthetic(p, a.seed, a.samples);
  write_gridseq(fs::path(a.out), d);
  std::vector<std::uint64_t> counts(d.num_classes, 0);
  std::uint64_t total = 0;
  for (const auto& s : d.samples)
    for (std::uint8_t c : s.label.classes) ++counts[c], ++total;
  out << "wrote " << d.samples.size() << " samples (T=" << d.steps << ", " << d.height << "x"
      << d.width << ", labels " << d.label_h << "x" << d.label_w << ") to " << a.out << "\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out << "  " << std::left << std::setw(14) << class_name(static_cast<std::uint8_t>(k), p.scheme)
        << std::right
        << fmt(total ? 100.0 * static_cast<double>(counts[k]) / static_cast<double>(total) : 0.0, 2)
        << "%\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------- train

struct TrainArgs {
  std::string train_path;
  std::string val_path;
  std::string out;
  std::string log;
  std::string variant = "msd";
  std::size_t kernel = 3;
  std::size_t hidden_channels = 16;
  std::size_t feature_channels = 8;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> classes;
  std::size_t epochs = 20;
  double lr = 2e-3;
  std::size_t batch_size = 4;
  std::string optimizer = "adamax";
  std::uint64_t seed = 0;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  const Dataset train_set = read_gridseq(fs::path(a.train_path));
  const Dataset val_set = read_gridseq(fs::path(a.val_path));
  if (a.steps && *a.steps != train_set.steps)
    throw DimensionError("--T " + std::to_string(*a.steps) + " but the training set has T=" +
                         std::to_string(train_set.steps));
  if (a.classes && *a.classes != train_set.num_classes)
    throw DimensionError("--classes " + std::to_string(*a.classes) +
                         " but the training set has " + std::to_string(train_set.num_classes));
  const ModelConfig config = ModelConfig::make(
      *parse_variant(a.variant), train_set.height, train_set.width, train_set.label_h,
      train_set.label_w, train_set.steps, a.hidden_channels, train_set.num_classes,
      a.feature_channels, a.kernel);
  check_dataset(config, val_set);

  TrainOptions o;
  o.epochs = a.epochs;
  o.batch_size = a.batch_size;
  o.seed = a.seed;
  o.optimizer = *parse_optimizer(a.optimizer);
  o.optimizer_options.lr = a.lr;
  o.checkpoint_path = fs::path(a.out);
  ModelParams params = init_model_params(config, a.seed);
  out << "training " << variant_title(config.cell.variant) << " on " << train_set.samples.size()
      << " samples, validating on " << val_set.samples.size() << "\n";
  out << "epoch  train_loss  val_acc  val_miou  wall_ms\n";
  const TrainResult r = train(config, params, train_set, val_set, o, [&](const EpochLog& row) {
    out << std::setw(5) << row.epoch << "  " << std::setw(10) << fmt(row.train_loss, 5) << "  "
        << std::setw(7) << fmt(row.val_acc) << "  " << std::setw(8) << fmt(row.val_miou) << "  "
        << std::setw(7) << fmt(row.wall_ms, 0) << std::endl;
  });
  if (!a.log.empty()) write_log_csv(fs::path(a.log), r.log);
  if (a.epochs == 0)
    out << "wrote untrained checkpoint to " << a.out << "\n";
  else
    out << "best epoch " << r.best_epoch << " (val mIoU " << fmt(r.best_val_miou)
        << "), checkpoint " << a.out << "\n";
  return kOk;
}

// ----------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string heatmap;
};

void print_metrics(std::ostream& out, const std::string& label, const ConfusionMatrix& cm) {
  out << std::left << std::setw(24) << label << std::right << "acc " << fmt(cm.accuracy())
      << "  miou " << fmt(cm.mean_iou()) << "\n";
}

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(fs::path(a.checkpoint));
  const Dataset d = read_gridseq(fs::path(a.data));
  if (d.samples.empty()) throw ConfigError("dataset " + a.data + " has no samples");
  check_dataset(ck.config, d);
  const ModelConfig& c = ck.config;

  ConfusionMatrix cm(c.num_classes);
  std::optional<fs::path> dir;
  if (!a.heatmap.empty()) {
    dir = fs::path(a.heatmap);
    std::error_code ec;
    fs::create_directories(*dir, ec);
    if (ec) throw IoError("cannot create heatmap directory: " + ec.message(), a.heatmap);
  }
  if (dir) {
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      const auto& s = d.samples[i];
      const LabelGrid pred = argmax_channels(predict_logits(c, ck.params, s));
      cm.add(s.label, pred);
      char name[32];
      std::snprintf(name, sizeof name, "sample_%04zu.ppm", i);
      export_comparison(s.label, pred, *dir / name);
    }
  } else {
    cm = evaluate(c, ck.params, d);
  }
  const ClassScheme scheme = c.num_classes == 2 ? ClassScheme::kBinary : ClassScheme::kFiveClass;
  out << "model " << variant_title(c.cell.variant) << ", " << d.samples.size() << " samples\n";
  if (c.num_classes == 5) {
    print_metrics(out, "five-class", cm);
    print_metrics(out, "binary", cm.to_binary());
  } else {
    print_metrics(out, std::to_string(c.num_classes) + "-class", cm);
  }
  // The baseline recomputes rainfall with the generator's default rain model.
  const bool integral = d.height % d.label_h == 0 && d.width % d.label_w == 0 &&
                        d.height / d.label_h == d.width / d.label_w;
  if (integral && d.steps >= 2 && (c.num_classes == 5 || c.num_classes == 2)) {
    const ConfusionMatrix base =
        evaluate_persistence(d, RainModel{}, d.height / d.label_h, scheme);
    if (c.num_classes == 5) {
      print_metrics(out, "persistence five-class", base);
      print_metrics(out, "persistence binary", base.to_binary());
    } else {
      print_metrics(out, "persistence", base);
    }
  }
  if (dir) out << "wrote " << d.samples.size() << " heatmaps to " << a.heatmap << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Multi-scale deconstructed ConvLSTM precipitation nowcasting toolkit", "msdlstm");
  app.set_config("--config", "", "TOML file with defaults; command-line flags take precedence");
  app.require_subcommand(1);

  ParamCountArgs pc;
  auto* pc_cmd = app.add_subcommand("param-count", "Per-variant LSTM weight counts");
  pc_cmd->add_option("--variant", pc.variant, "Variant or all")->check(kVariantOrAll);
  pc_cmd->add_option("--K", pc.kernel, "Kernel size")->check(kOddKernel);
  pc_cmd->add_option("--Cx", pc.input_channels, "Input channels")->check(CLI::PositiveNumber);
  pc_cmd->add_option("--Ch", pc.hidden_channels, "Hidden channels")->check(CLI::PositiveNumber);
  pc_cmd->add_flag("--paper", pc.reference, "Pin K=3, Cx=608, Ch=128 and check the reference counts");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--variant", gc.variant, "Variant or all")->check(kVariantOrAll);
  gc_cmd->add_option("--seed", gc.seed, "Random seed");
  gc_cmd->add_option("--tol", gc.tol, "Maximum relative error");
  gc_cmd->add_option("--Ch", gc.hidden_channels, "Hidden channels")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--entries", gc.entries, "Checked entries per tensor")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_flag("--cell-only", gc.skip_model, "Skip the end-to-end model check");

  BenchArgs bc;
  auto* bench = app.add_subcommand("bench", "Forward cell step timing as CSV");
  bench->add_option("--variant", bc.variant, "Variant or all")->check(kVariantOrAll);
  bench->add_option("--K", bc.kernel, "Kernel size")->check(kOddKernel);
  bench->add_option("--Cx", bc.input_channels, "Input channels")->check(CLI::PositiveNumber);
  bench->add_option("--Ch", bc.hidden_channels, "Hidden channels")->check(CLI::PositiveNumber);
  bench->add_option("--height", bc.height, "Grid height")->check(CLI::PositiveNumber);
  bench->add_option("--width", bc.width, "Grid width")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", bc.warmup, "Untimed steps");
  bench->add_option("--iters", bc.iterations, "Timed steps")->check(CLI::Range(30, 1000000));
  bench->add_option("--seed", bc.seed, "Random seed");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic GRIDSEQ dataset");
  gen->add_option("--out", ga.out, "Output file")->required();
  gen->add_option("--n", ga.samples, "Number of samples");
  gen->add_option("--seed", ga.seed, "Random seed");
  gen->add_option("--T", ga.steps, "Input steps per sample");
  gen->add_option("--height", ga.height, "Grid height");
  gen->add_option("--width", ga.width, "Grid width");
  gen->add_option("--label-factor", ga.label_factor, "Label block size");
  gen->add_option("--classes", ga.classes, "5 intensity classes or 2 (rain / no rain)");
  gen->add_option("--wind", ga.wind, "Background wind scale, cells per step");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
  tr->add_option("--train", ta.train_path, "Training GRIDSEQ file")->required();
  tr->add_option("--val", ta.val_path, "Validation GRIDSEQ file")->required();
  tr->add_option("--out", ta.out, "Checkpoint to write")->required();
  tr->add_option("--log", ta.log, "Per-epoch CSV log");
  tr->add_option("--variant", ta.variant, "Recurrent cell")->check(kVariant);
  tr->add_option("--K", ta.kernel, "Kernel size")->check(kOddKernel);
  tr->add_option("--Ch", ta.hidden_channels, "Hidden channels")->check(CLI::PositiveNumber);
  tr->add_option("--features", ta.feature_channels, "Encoder output channels per element")
      ->check(CLI::PositiveNumber);
  tr->add_option("--T", ta.steps, "Expected sequence length");
  tr->add_option("--classes", ta.classes, "Expected class count");
  tr->add_option("--epochs", ta.epochs, "Epochs (0 writes the initialized model)");
  tr->add_option("--lr", ta.lr, "Learning rate");
  tr->add_option("--batch-size", ta.batch_size, "Samples per update")->check(CLI::PositiveNumber);
  tr->add_option("--optimizer", ta.optimizer, "adamax or adam")
      ->check(CLI::IsMember({"adamax", "adam"}));
  tr->add_option("--seed", ta.seed, "Random seed");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a GRIDSEQ file");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", ea.data, "GRIDSEQ file")->required();
  ev->add_option("--heatmap", ea.heatmap, "Directory for truth|prediction PPM images");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const CLI::ConfigError& e) {
    err << "error: config file: " << e.what() << "\n";
    return kFormat;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (const CLI::App* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  try {
    if (pc_cmd->parsed()) return param_count(pc, out);
    if (gc_cmd->parsed()) return gradcheck_cmd(gc, out);
    if (bench->parsed()) return bench_cmd(bc, out, err);
    if (gen->parsed()) return gen_cmd(ga, out);
    if (tr->parsed()) return train_cmd(ta, out);
    if (ev->parsed()) return eval_cmd(ea, out);
  } catch (const CheckFailed&) {
    err << "error: check failed\n";
    return kCheckFailed;
  } catch (const ConfigError& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const ValueError& e) {
    err << "error: invalid value: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "error: malformed file: " << e.what() << "\n";
    return kFormat;
  } catch (const DimensionError& e) {
    err << "error: mismatch: " << e.what() << "\n";
    return kMismatch;
  }
  return kUsage;
}

}  // namespace msd::cli
