#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msdlstm/core/label_grid.hpp"

namespace msd {

// Pixel counts indexed [truth][prediction].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::uint8_t truth, std::uint8_t prediction, std::uint64_t count = 1);
  void add(const LabelGrid& truth, const LabelGrid& prediction);
  void merge(const ConfusionMatrix& other);

  std::size_t num_classes() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t prediction) const {
    return counts_[truth * n_ + prediction];
  }
  std::uint64_t total() const { return total_; }

  // trace / total. Throws ValueError on an empty matrix.
  double accuracy() const;
  // Mean over classes of TP / (TP + FP + FN), skipping classes that appear in
  // neither truth nor prediction. Throws ValueError on an empty matrix.
  double mean_iou() const;
  // TP / (TP + FP + FN), or a negative value when the union is empty.
  double class_iou(std::size_t cls) const;

  // Collapses every class >= 1 into class 1.
  ConfusionMatrix to_binary() const;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

}  // namespace msd
