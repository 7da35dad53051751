#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace msd {

enum class PrecipClass : std::uint8_t {
  kNoRain = 0,
  kLightRain = 1,
  kModerateRain = 2,
  kHeavyRain = 3,
  kRainstorm = 4,
};

// Five-class intensity bins or the rain / no-rain split. Binary class 1 is
// any rain.
enum class ClassScheme : std::uint8_t { kFiveClass, kBinary };

std::size_t scheme_classes(ClassScheme scheme);
std::optional<ClassScheme> parse_scheme(std::string_view name);
std::string_view scheme_name(ClassScheme scheme);

// Left-closed millimetre bins [0, 0.01), [0.01, 3), [3, 11), [11, 25),
// [25, inf). Throws ValueError for negative or NaN input.
std::uint8_t precip_to_class(double mm, ClassScheme scheme = ClassScheme::kFiveClass);

// Maps a five-class id to rain / no-rain.
inline std::uint8_t to_binary_class(std::uint8_t five_class) { return five_class == 0 ? 0 : 1; }

std::string_view class_name(std::uint8_t cls, ClassScheme scheme = ClassScheme::kFiveClass);

}  // namespace msd
