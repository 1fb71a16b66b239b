#pragma once

#include <string>
#include <variant>

#include "fedsim/sim/random.hpp"

namespace fedsim {

struct ConstantDist {
  double value = 0.0;
  bool operator==(const ConstantDist&) const = default;
};

struct UniformDist {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const UniformDist&) const = default;
};

// Parameterised by its median exp(mu) rather than mu, since medians are
// what gets calibrated.
struct LognormalDist {
  double median = 1.0;
  double sigma = 0.0;
  bool operator==(const LognormalDist&) const = default;
};

// Non-negative delay/duration distribution. Construct through the factory
// functions, which reject negative scale parameters.
class Distribution {
 public:
  Distribution() = default;

  static Distribution constant(double value);
  static Distribution uniform(double lo, double hi);
  static Distribution lognormal(double median, double sigma);

  double sample(Rng& rng) const;
  double median() const;
  // Lognormal keeps its median and widens by `factor`; other families are
  // returned unchanged.
  Distribution with_sigma_scaled(double factor) const;

  const std::variant<ConstantDist, UniformDist, LognormalDist>& params() const { return params_; }
  std::string describe() const;

  bool operator==(const Distribution&) const = default;

 private:
  explicit Distribution(std::variant<ConstantDist, UniformDist, LognormalDist> p)
      : params_(p) {}

  std::variant<ConstantDist, UniformDist, LognormalDist> params_{ConstantDist{}};
};

// Free-function form: draw one value from `dist` using `rng`.
double sample(const Distribution& dist, Rng& rng);

}  // namespace fedsim
