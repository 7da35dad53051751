#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "msdlstm/core/tensor.hpp"

// Little-endian primitives shared by the on-disk formats. Readers track the
// byte offset, and parse errors report it.
namespace msd {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void bytes(std::span<const char> data);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  void reals(std::span<const Real> values);

  std::uint64_t offset() const { return offset_; }

 private:
  std::ostream& out_;
  std::uint64_t offset_ = 0;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in, std::uint64_t total_size = UINT64_MAX)
      : in_(in), total_(total_size) {}

  // Throws FormatError naming the expected vs available length when fewer
  // than data.size() bytes remain.
  void bytes(std::span<char> data, const char* what);
  std::uint8_t u8(const char* what);
  std::uint32_t u32(const char* what);
  double f64(const char* what);
  void reals(std::span<Real> out, const char* what);

  // Fails early when the declared payload exceeds what the stream holds.
  void require_remaining(std::uint64_t n, const char* what) const;

  std::uint64_t offset() const { return offset_; }
  std::uint64_t remaining() const { return total_ == UINT64_MAX ? UINT64_MAX : total_ - offset_; }

 private:
  std::istream& in_;
  std::uint64_t total_;
  std::uint64_t offset_ = 0;
};

// Size of a seekable stream from its current position to the end.
std::uint64_t stream_remaining(std::istream& in);

}  // namespace msd
