#include "msdlstm/train/metrics.hpp"

#include <string>

#include "msdlstm/core/errors.hpp"

namespace msd {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : n_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes < 2) throw ConfigError("confusion matrix needs at least 2 classes");
}

void ConfusionMatrix::add(std::uint8_t truth, std::uint8_t prediction, std::uint64_t count) {
  if (truth >= n_ || prediction >= n_)
    throw ValueError("class id out of range: truth " + std::to_string(truth) + ", prediction " +
                     std::to_string(prediction) + ", classes " + std::to_string(n_));
  counts_[truth * n_ + prediction] += count;
  total_ += count;
}

void ConfusionMatrix::add(const LabelGrid& truth, const LabelGrid& prediction) {
  if (truth.height != prediction.height || truth.width != prediction.width)
    throw DimensionError("truth and prediction grids differ in size");
  for (std::size_t i = 0; i < truth.size(); ++i) add(truth.classes[i], prediction.classes[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw DimensionError("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

double ConfusionMatrix::accuracy() const {
  if (total_ == 0) throw ValueError("accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t k = 0; k < n_; ++k) trace += at(k, k);
  return static_cast<double>(trace) / static_cast<double>(total_);
}

double ConfusionMatrix::class_iou(std::size_t cls) const {
  std::uint64_t row = 0, col = 0;
  for (std::size_t j = 0; j < n_; ++j) {
    row += at(cls, j);
    col += at(j, cls);
  }
  const std::uint64_t tp = at(cls, cls);
  const std::uint64_t uni = row + col - tp;
  if (uni == 0) return -1.0;
  return static_cast<double>(tp) / static_cast<double>(uni);
}

double ConfusionMatrix::mean_iou() const {
  if (total_ == 0) throw ValueError("mean IoU of an empty confusion matrix");
  double sum = 0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < n_; ++k) {
    const double iou = class_iou(k);
    if (iou < 0) continue;
    sum += iou;
    ++present;
  }
  return sum / static_cast<double>(present);
}

ConfusionMatrix ConfusionMatrix::to_binary() const {
  ConfusionMatrix out(2);
  for (std::size_t t = 0; t < n_; ++t)
    for (std::size_t p = 0; p < n_; ++p)
      if (at(t, p)) out.add(t == 0 ? 0 : 1, p == 0 ? 0 : 1, at(t, p));
  return out;
}

}  // namespace msd
