#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "msdlstm/data/synthetic.hpp"
#include "msdlstm/model/model.hpp"
#include "msdlstm/train/metrics.hpp"
#include "msdlstm/train/optimizer.hpp"

namespace msd {

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdamax;
  OptimizerOptions optimizer_options;
  // Written whenever validation mIoU improves. With zero epochs the initial
  // parameters are written.
  std::optional<std::filesystem::path> checkpoint_path;
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean per-sample loss during the epoch
  double val_acc = 0;
  double val_miou = 0;
  double wall_ms = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_miou = -1;
  ModelParams best_params;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Mini-batch training with the gradient averaged over each batch. Samples are
// visited in a seeded shuffled order. After every epoch the model is scored on
// `val`; the parameters with the highest validation mIoU are kept (ties keep
// the earlier epoch). Throws NumericError with epoch and step context when
// the loss or a gradient becomes non-finite.
TrainResult train(const ModelConfig& config, ModelParams& params, const Dataset& train_set,
                  const Dataset& val_set, const TrainOptions& options,
                  const EpochCallback& on_epoch = {});

// Confusion matrix of argmax predictions. Samples are scored concurrently
// when more than one worker thread is configured.
ConfusionMatrix evaluate(const ModelConfig& config, const ModelParams& params,
                         const Dataset& dataset);

ConfusionMatrix evaluate_persistence(const Dataset& dataset, const RainModel& rain,
                                     std::size_t label_factor, ClassScheme scheme);

// Throws DimensionError when the dataset does not fit the model.
void check_dataset(const ModelConfig& config, const Dataset& dataset);

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log);
void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace msd
