#include "msdlstm/data/gridseq.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "msdlstm/core/errors.hpp"

namespace msd {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'Q', '1'};

}  // namespace

void write_gridseq(BinaryWriter& out, const Dataset& d) {
  for (const auto& s : d.samples) {
    if (s.steps != d.steps || s.height != d.height || s.width != d.width ||
        s.grids.size() != d.steps * kNumElements || s.label.height != d.label_h ||
        s.label.width != d.label_w)
      throw DimensionError("dataset sample does not match the dataset header");
  }
  out.bytes(kMagic);
  for (std::size_t v : {d.samples.size(), d.steps, kNumElements, d.height, d.width, d.label_h,
                        d.label_w, d.num_classes})
    out.u32(static_cast<std::uint32_t>(v));
  for (const auto& s : d.samples) {
    for (const Tensor& g : s.grids) out.reals(g.data());
    out.bytes({reinterpret_cast<const char*>(s.label.classes.data()), s.label.classes.size()});
  }
}

Dataset read_gridseq(BinaryReader& in) {
  char magic[4];
  in.bytes(magic, "GRIDSEQ magic");
  if (std::string_view(magic, 3) != "GSQ") throw FormatError("not a GRIDSEQ file: bad magic", 0);
  if (magic[3] != kMagic[3])
    throw FormatError(std::string("unsupported GRIDSEQ version '") + magic[3] + "' (expected '1')",
                      3);
  const std::uint32_t n = in.u32("GRIDSEQ header");
  Dataset d;
  d.steps = in.u32("GRIDSEQ header");
  const std::uint64_t elements_at = in.offset();
  const std::uint32_t elements = in.u32("GRIDSEQ header");
  d.height = in.u32("GRIDSEQ header");
  d.width = in.u32("GRIDSEQ header");
  d.label_h = in.u32("GRIDSEQ header");
  d.label_w = in.u32("GRIDSEQ header");
  const std::uint64_t classes_at = in.offset();
  d.num_classes = in.u32("GRIDSEQ header");
  if (elements != kNumElements)
    throw FormatError("GRIDSEQ must carry 4 elements, header says " + std::to_string(elements),
                      elements_at);
  if (d.num_classes < 2 || d.num_classes > 256)
    throw FormatError("GRIDSEQ class count " + std::to_string(d.num_classes) + " out of range",
                      classes_at);
  if (d.steps == 0 || d.height == 0 || d.width == 0 || d.label_h == 0 || d.label_w == 0)
    throw FormatError("GRIDSEQ header has a zero extent", 8);

  // Extents are u32, so these products cannot overflow 64 bits.
  const std::uint64_t grid_values = static_cast<std::uint64_t>(d.height) * d.width;
  const std::uint64_t label_bytes = static_cast<std::uint64_t>(d.label_h) * d.label_w;
  const std::uint64_t sample_bytes = d.steps * kNumElements * grid_values * 8 + label_bytes;
  if (n != 0 && sample_bytes > UINT64_MAX / n) throw FormatError("GRIDSEQ size overflows", 4);
  const std::uint64_t body = sample_bytes * n;
  if (in.remaining() != UINT64_MAX && in.remaining() != body) {
    throw FormatError("GRIDSEQ length mismatch: header implies " +
                          std::to_string(kGridseqHeaderBytes + body) + " bytes, file has " +
                          std::to_string(in.offset() + in.remaining()),
                      in.offset() + std::min(in.remaining(), body));
  }

  d.samples.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    GridSequenceSample s(d.steps, d.height, d.width, d.label_h, d.label_w);
    for (Tensor& g : s.grids) {
      const std::uint64_t at = in.offset();
      in.reals(g.data(), "GRIDSEQ grid");
      if (!g.all_finite())
        throw FormatError("non-finite value in sample " + std::to_string(i), at);
    }
    const std::uint64_t at = in.offset();
    in.bytes({reinterpret_cast<char*>(s.label.classes.data()), s.label.classes.size()},
             "GRIDSEQ labels");
    for (std::size_t k = 0; k < s.label.classes.size(); ++k) {
      if (s.label.classes[k] >= d.num_classes)
        throw FormatError("label " + std::to_string(s.label.classes[k]) + " >= class count " +
                              std::to_string(d.num_classes) + " in sample " + std::to_string(i),
                          at + k);
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

std::string gridseq_to_bytes(const Dataset& dataset) {
  std::ostringstream out(std::ios::binary);
  BinaryWriter w(out);
  write_gridseq(w, dataset);
  return out.str();
}

Dataset gridseq_from_bytes(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  BinaryReader r(in, bytes.size());
  return read_gridseq(r);
}

void write_gridseq(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset for writing", path.string());
  BinaryWriter w(out);
  write_gridseq(w, dataset);
  out.flush();
  if (!out) throw IoError("failed writing dataset", path.string());
}

Dataset read_gridseq(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset", path.string());
  BinaryReader r(in, stream_remaining(in));
  return read_gridseq(r);
}

}  // namespace msd
