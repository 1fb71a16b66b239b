#include "fedsim/resources.hpp"

#include <cmath>

#include <fmt/format.h>

namespace fedsim {

Resources Resources::cores(double vcpus, std::int64_t ram_mb) {
  return Resources{static_cast<std::int64_t>(std::llround(vcpus * 1000.0)), ram_mb};
}

std::string Resources::str() const { return fmt::format("{}m/{}Mi", millicpu, ram_mb); }

}  // namespace fedsim
