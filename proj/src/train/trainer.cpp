#include "msdlstm/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/gemm.hpp"
#include "msdlstm/core/ops.hpp"
#include "msdlstm/core/random.hpp"
#include "msdlstm/model/checkpoint.hpp"

namespace msd {

void TrainOptions::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  optimizer_options.validate();
}

void check_dataset(const ModelConfig& config, const Dataset& d) {
  if (d.steps != config.steps || d.height != config.input_h || d.width != config.input_w ||
      d.label_h != config.label_h || d.label_w != config.label_w ||
      d.num_classes != config.num_classes) {
    throw DimensionError(
        "dataset (T=" + std::to_string(d.steps) + ", " + std::to_string(d.height) + "x" +
        std::to_string(d.width) + ", labels " + std::to_string(d.label_h) + "x" +
        std::to_string(d.label_w) + ", " + std::to_string(d.num_classes) +
        " classes) does not match model (T=" + std::to_string(config.steps) + ", " +
        std::to_string(config.input_h) + "x" + std::to_string(config.input_w) + ", labels " +
        std::to_string(config.label_h) + "x" + std::to_string(config.label_w) + ", " +
        std::to_string(config.num_classes) + " classes)");
  }
}

ConfusionMatrix evaluate(const ModelConfig& config, const ModelParams& params,
                         const Dataset& dataset) {
  check_dataset(config, dataset);
  const std::size_t n = dataset.samples.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(gemm::thread_count(), n));
  std::vector<ConfusionMatrix> parts(workers, ConfusionMatrix(config.num_classes));
  auto run = [&](std::size_t w) {
    gemm::SerialScope serial;
    for (std::size_t i = w; i < n; i += workers) {
      const GridSequenceSample& s = dataset.samples[i];
      parts[w].add(s.label, argmax_channels(predict_logits(config, params, s)));
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  ConfusionMatrix total(config.num_classes);
  for (const auto& p : parts) total.merge(p);
  return total;
}

ConfusionMatrix evaluate_persistence(const Dataset& dataset, const RainModel& rain,
                                     std::size_t label_factor, ClassScheme scheme) {
  ConfusionMatrix cm(scheme_classes(scheme));
  for (const auto& s : dataset.samples)
    cm.add(s.label, persistence_baseline(s, rain, label_factor, scheme));
  return cm;
}

TrainResult train(const ModelConfig& config, ModelParams& params, const Dataset& train_set,
                  const Dataset& val_set, const TrainOptions& options,
                  const EpochCallback& on_epoch) {
  options.validate();
  config.validate();
  check_dataset(config, train_set);
  check_dataset(config, val_set);
  if (train_set.samples.empty()) throw ConfigError("training set is empty");
  if (val_set.samples.empty()) throw ConfigError("validation set is empty");

  std::vector<Parameter*> list = params.parameters();
  std::unique_ptr<Optimizer> opt = make_optimizer(options.optimizer, list, options.optimizer_options);
  Rng shuffle_rng = derive_rng(options.seed, 0x5348554646ull);
  std::vector<std::size_t> order(train_set.samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_params = params;
  Tape tape;
  std::vector<double> sample_loss(order.size());
  if (options.epochs == 0 && options.checkpoint_path)
    save_checkpoint(*options.checkpoint_path, config, params);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

    std::size_t step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      for (Parameter* p : list) p->zero_grad();
      try {
        for (std::size_t b = begin; b < end; ++b) {
          const GridSequenceSample& s = train_set.samples[order[b]];
          tape.reset();
          Var loss = sequence_loss(forward_sequence(tape, config, params, s), s.label);
          sample_loss[order[b]] = loss.value()[0];
          tape.backward(loss);
        }
        const auto scale = static_cast<Real>(1.0 / static_cast<double>(end - begin));
        for (Parameter* p : list)
          for (std::size_t k = 0; k < p->size(); ++k) p->grad[k] *= scale;
        opt->step();
      } catch (const NumericError& e) {
        std::string where = "epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
        if (!e.context().empty()) where += ", " + e.context();
        throw NumericError(e.op(), where);
      }
    }

    // Summed in sample order so the value does not depend on the shuffle.
    const double loss_sum = std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0);
    const ConfusionMatrix cm = evaluate(config, params, val_set);
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(sample_loss.size());
    row.val_acc = cm.accuracy();
    row.val_miou = cm.mean_iou();
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start).count();
    result.log.push_back(row);
    if (row.val_miou > result.best_val_miou) {
      result.best_val_miou = row.val_miou;
      result.best_epoch = epoch;
      result.best_params = params;
      if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, config, params);
    }
    if (on_epoch) on_epoch(row);
  }
  return result;
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,train_loss,val_acc,val_miou,wall_ms\n";
  out.precision(17);
  for (const auto& r : log)
    out << r.epoch << ',' << r.train_loss << ',' << r.val_acc << ',' << r.val_miou << ','
        << r.wall_ms << '\n';
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open training log for writing", path.string());
  write_log_csv(out, log);
  if (!out) throw IoError("failed writing training log", path.string());
}

}  // namespace msd
