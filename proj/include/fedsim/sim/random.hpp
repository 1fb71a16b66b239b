#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedsim {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

// One independent random stream. The generator (mt19937_64) and every
// transformation applied on top of it are fully specified, so a given
// (seed, stream, draw index) triple yields the same value everywhere.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double standard_normal();
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace fedsim
