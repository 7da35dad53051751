#include "msdlstm/core/binary_io.hpp"

#include <bit>
#include <vector>

#include "msdlstm/core/errors.hpp"

namespace msd {

void BinaryWriter::bytes(std::span<const char> data) {
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  offset_ += data.size();
}

void BinaryWriter::u8(std::uint8_t v) {
  const char c = static_cast<char>(v);
  bytes({&c, 1});
}

void BinaryWriter::u32(std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  bytes(buf);
}

void BinaryWriter::f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  bytes(buf);
}

void BinaryWriter::reals(std::span<const Real> values) {
  std::vector<char> buf(values.size() * 8);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(static_cast<double>(values[k]));
    for (int i = 0; i < 8; ++i) buf[k * 8 + i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  }
  bytes(buf);
}

void BinaryReader::require_remaining(std::uint64_t n, const char* what) const {
  if (total_ != UINT64_MAX && n > total_ - offset_) {
    throw FormatError(std::string("truncated ") + what + ": expected " + std::to_string(n) +
                          " bytes, " + std::to_string(total_ - offset_) + " available",
                      offset_);
  }
}

void BinaryReader::bytes(std::span<char> data, const char* what) {
  require_remaining(data.size(), what);
  in_.read(data.data(), static_cast<std::streamsize>(data.size()));
  const auto got = static_cast<std::uint64_t>(in_.gcount());
  if (got != data.size()) {
    throw FormatError(std::string("truncated ") + what + ": expected " +
                          std::to_string(data.size()) + " bytes, got " + std::to_string(got),
                      offset_ + got);
  }
  offset_ += got;
}

std::uint8_t BinaryReader::u8(const char* what) {
  char c;
  bytes({&c, 1}, what);
  return static_cast<std::uint8_t>(c);
}

std::uint32_t BinaryReader::u32(const char* what) {
  char buf[4];
  bytes(buf, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

double BinaryReader::f64(const char* what) {
  char buf[8];
  bytes(buf, what);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

void BinaryReader::reals(std::span<Real> out, const char* what) {
  std::vector<char> buf(out.size() * 8);
  bytes(buf, what);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[k * 8 + i])) << (8 * i);
    out[k] = static_cast<Real>(std::bit_cast<double>(bits));
  }
}

std::uint64_t stream_remaining(std::istream& in) {
  const auto here = in.tellg();
  if (here < 0) return UINT64_MAX;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  return static_cast<std::uint64_t>(end - here);
}

}  // namespace msd
