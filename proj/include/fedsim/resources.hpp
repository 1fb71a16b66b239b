#pragma once

#include <cstdint>
#include <string>

namespace fedsim {

// CPU in millicores and memory in MiB; integral so capacity checks are exact.
struct Resources {
  std::int64_t millicpu = 0;
  std::int64_t ram_mb = 0;

  static Resources cores(double vcpus, std::int64_t ram_mb);

  double vcpus() const { return static_cast<double>(millicpu) / 1000.0; }
  bool fits_within(const Resources& budget) const {
    return millicpu <= budget.millicpu && ram_mb <= budget.ram_mb;
  }
  Resources operator+(const Resources& o) const { return {millicpu + o.millicpu, ram_mb + o.ram_mb}; }
  Resources operator-(const Resources& o) const { return {millicpu - o.millicpu, ram_mb - o.ram_mb}; }
  Resources& operator+=(const Resources& o) { return *this = *this + o; }
  Resources& operator-=(const Resources& o) { return *this = *this - o; }
  bool operator==(const Resources&) const = default;

  std::string str() const;
};

}  // namespace fedsim
