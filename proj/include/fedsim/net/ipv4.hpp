#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fedsim {

struct Ipv4Address {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4Address&) const = default;

  static std::optional<Ipv4Address> parse(std::string_view text);
  std::string str() const;
};

struct Ipv4Prefix {
  Ipv4Address network;
  std::uint8_t length = 0;

  auto operator<=>(const Ipv4Prefix&) const = default;

  // Returns nullopt for malformed text or host bits set past the mask.
  static std::optional<Ipv4Prefix> parse(std::string_view text);
  static Ipv4Prefix make(Ipv4Address addr, std::uint8_t length);  // masks host bits

  std::uint32_t mask() const;
  std::uint64_t size() const { return std::uint64_t{1} << (32 - length); }
  Ipv4Address first() const { return network; }
  Ipv4Address last() const { return Ipv4Address{network.value | ~mask()}; }
  bool contains(Ipv4Address addr) const { return (addr.value & mask()) == network.value; }
  bool overlaps(const Ipv4Prefix& other) const;
  std::uint32_t host_part(Ipv4Address addr) const { return addr.value & ~mask(); }
  Ipv4Address with_host(std::uint32_t host) const {
    return Ipv4Address{network.value | (host & ~mask())};
  }
  std::string str() const;
};

}  // namespace fedsim
