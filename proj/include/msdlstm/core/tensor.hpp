#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace msd {

#ifdef MSDLSTM_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array. Rank-3 tensors are laid out channels x height x width.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor vector(std::initializer_list<Real> values);
  static Tensor map(std::size_t channels, std::size_t height, std::size_t width,
                    Real fill = Real(0)) {
    return Tensor({channels, height, width}, fill);
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  // Rank-3 accessors.
  std::size_t channels() const { return shape_.at(0); }
  std::size_t height() const { return shape_.at(1); }
  std::size_t width() const { return shape_.at(2); }
  std::size_t plane() const { return shape_.at(1) * shape_.at(2); }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  Real& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  Real at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }

  void fill(Real value);
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Throws DimensionError naming `op` unless `t` has rank 3.
void require_rank3(const Tensor& t, const char* op);

}  // namespace msd
