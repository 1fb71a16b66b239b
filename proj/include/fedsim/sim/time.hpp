#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace fedsim {

// Virtual time in whole milliseconds since the start of a run.
struct SimTime {
  std::uint64_t millis = 0;

  constexpr auto operator<=>(const SimTime&) const = default;

  static constexpr SimTime ms(std::uint64_t v) { return SimTime{v}; }
  static constexpr SimTime seconds(std::uint64_t v) { return SimTime{v * 1000}; }
  static constexpr SimTime max() {
    return SimTime{std::numeric_limits<std::uint64_t>::max()};
  }

  constexpr SimTime operator+(std::uint64_t delta_ms) const { return SimTime{millis + delta_ms}; }
  constexpr std::uint64_t operator-(SimTime other) const { return millis - other.millis; }
  constexpr double to_seconds() const { return static_cast<double>(millis) / 1000.0; }
};

}  // namespace fedsim
