#include "fedsim/sim/distribution.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

namespace {
bool finite(double v) { return std::isfinite(v); }
}  // namespace

Distribution Distribution::constant(double value) {
  if (!finite(value) || value < 0.0) {
    fail(ErrorCode::kInvalidDistribution, fmt::format("constant({}) is negative", value));
  }
  return Distribution(ConstantDist{value});
}

Distribution Distribution::uniform(double lo, double hi) {
  if (!finite(lo) || !finite(hi) || lo < 0.0 || hi < lo) {
    fail(ErrorCode::kInvalidDistribution, fmt::format("uniform({}, {})", lo, hi));
  }
  return Distribution(UniformDist{lo, hi});
}

Distribution Distribution::lognormal(double median, double sigma) {
  if (!finite(median) || !finite(sigma) || median <= 0.0 || sigma < 0.0) {
    fail(ErrorCode::kInvalidDistribution, fmt::format("lognormal({}, {})", median, sigma));
  }
  return Distribution(LognormalDist{median, sigma});
}

double Distribution::sample(Rng& rng) const {
  struct Visitor {
    Rng& rng;
    double operator()(const ConstantDist& d) const { return d.value; }
    double operator()(const UniformDist& d) const {
      if (d.lo == d.hi) return d.lo;
      return rng.uniform(d.lo, d.hi);
    }
    double operator()(const LognormalDist& d) const {
      if (d.sigma == 0.0) return d.median;
      return d.median * std::exp(d.sigma * rng.standard_normal());
    }
  };
  return std::visit(Visitor{rng}, params_);
}

double Distribution::median() const {
  struct Visitor {
    double operator()(const ConstantDist& d) const { return d.value; }
    double operator()(const UniformDist& d) const { return 0.5 * (d.lo + d.hi); }
    double operator()(const LognormalDist& d) const { return d.median; }
  };
  return std::visit(Visitor{}, params_);
}

Distribution Distribution::with_sigma_scaled(double factor) const {
  if (const auto* ln = std::get_if<LognormalDist>(&params_)) {
    return lognormal(ln->median, ln->sigma * factor);
  }
  return *this;
}

std::string Distribution::describe() const {
  struct Visitor {
    std::string operator()(const ConstantDist& d) const { return fmt::format("constant({})", d.value); }
    std::string operator()(const UniformDist& d) const {
      return fmt::format("uniform({}, {})", d.lo, d.hi);
    }
    std::string operator()(const LognormalDist& d) const {
      return fmt::format("lognormal(median={}, sigma={})", d.median, d.sigma);
    }
  };
  return std::visit(Visitor{}, params_);
}

double sample(const Distribution& dist, Rng& rng) { return dist.sample(rng); }

}  // namespace fedsim
