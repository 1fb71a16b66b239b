#include "fedsim/net/ipv4.hpp"

#include <charconv>

#include <fmt/format.h>

namespace fedsim {

namespace {
bool parse_octets(std::string_view text, std::uint32_t& out) {
  std::uint32_t v = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255 || next - p > 3) return false;
    v = (v << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return false;
      ++p;
    }
  }
  if (p != end) return false;
  out = v;
  return true;
}
}  // namespace

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t v = 0;
  if (!parse_octets(text, v)) return std::nullopt;
  return Ipv4Address{v};
}

std::string Ipv4Address::str() const {
  return fmt::format("{}.{}.{}.{}", value >> 24, (value >> 16) & 0xff, (value >> 8) & 0xff,
                     value & 0xff);
}

std::uint32_t Ipv4Prefix::mask() const {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = Ipv4Address::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  const auto len_text = text.substr(slash + 1);
  unsigned len = 0;
  auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc{} || next != len_text.data() + len_text.size() || len > 32) {
    return std::nullopt;
  }
  Ipv4Prefix p{*addr, static_cast<std::uint8_t>(len)};
  if ((addr->value & ~p.mask()) != 0) return std::nullopt;
  return p;
}

Ipv4Prefix Ipv4Prefix::make(Ipv4Address addr, std::uint8_t length) {
  Ipv4Prefix p{addr, length};
  p.network.value &= p.mask();
  return p;
}

bool Ipv4Prefix::overlaps(const Ipv4Prefix& other) const {
  const auto shorter = length < other.length ? *this : other;
  const auto longer = length < other.length ? other : *this;
  return shorter.contains(longer.network);
}

std::string Ipv4Prefix::str() const { return fmt::format("{}/{}", network.str(), length); }

}  // namespace fedsim
