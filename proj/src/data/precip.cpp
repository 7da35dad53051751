#include "msdlstm/data/precip.hpp"

#include <array>
#include <cmath>
#include <string>

#include "msdlstm/core/errors.hpp"

namespace msd {

std::size_t scheme_classes(ClassScheme scheme) {
  return scheme == ClassScheme::kBinary ? 2 : 5;
}

std::optional<ClassScheme> parse_scheme(std::string_view name) {
  if (name == "five") return ClassScheme::kFiveClass;
  if (name == "binary") return ClassScheme::kBinary;
  return std::nullopt;
}

std::string_view scheme_name(ClassScheme scheme) {
  return scheme == ClassScheme::kBinary ? "binary" : "five";
}

std::uint8_t precip_to_class(double mm, ClassScheme scheme) {
  if (!(mm >= 0.0)) throw ValueError("rainfall must be >= 0 mm, got " + std::to_string(mm));
  static constexpr std::array<double, 4> kUpper = {0.01, 3.0, 11.0, 25.0};
  std::uint8_t cls = 0;
  while (cls < kUpper.size() && mm >= kUpper[cls]) ++cls;
  return scheme == ClassScheme::kBinary ? to_binary_class(cls) : cls;
}

std::string_view class_name(std::uint8_t cls, ClassScheme scheme) {
  static constexpr std::array<std::string_view, 5> kFive = {"NoRain", "LightRain", "ModerateRain",
                                                            "HeavyRain", "Rainstorm"};
  static constexpr std::array<std::string_view, 2> kBinary = {"NoRain", "Rain"};
  if (scheme == ClassScheme::kBinary) return cls < 2 ? kBinary[cls] : "?";
  return cls < 5 ? kFive[cls] : "?";
}

}  // namespace msd
