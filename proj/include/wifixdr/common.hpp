#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace wifixdr {

using Bytes = std::vector<std::uint8_t>;

// Simulated time, integer microseconds.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;

// 802.11 channel number. Valid on-air values are 1..255.
using Channel = int;

using NodeId = int;

enum class Band : std::uint8_t { ghz24, ghz5 };

inline constexpr Band opposite(Band b) noexcept {
  return b == Band::ghz24 ? Band::ghz5 : Band::ghz24;
}

inline std::string_view to_string(Band b) noexcept {
  return b == Band::ghz24 ? "2.4" : "5";
}

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

// Scenario or parameter values that cannot be used.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Internal state disagrees with itself (e.g. a tunnel port with no peer role).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Minimal expected<T, E>; the toolchain's libstdc++ predates std::expected.
template <typename E>
struct Unexpected {
  E error;
};

template <typename E>
Unexpected(E) -> Unexpected<E>;

template <typename T, typename E>
class Expected {
 public:
  Expected(T value) : state_(std::in_place_index<0>, std::move(value)) {}
  Expected(Unexpected<E> err) : state_(std::in_place_index<1>, std::move(err.error)) {}

  bool has_value() const noexcept { return state_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    if (!has_value()) throw std::logic_error("Expected::value() on error state");
    return std::get<0>(state_);
  }
  const T& value() const& {
    if (!has_value()) throw std::logic_error("Expected::value() on error state");
    return std::get<0>(state_);
  }
  T&& value() && {
    if (!has_value()) throw std::logic_error("Expected::value() on error state");
    return std::get<0>(std::move(state_));
  }

  template <class U>
  T value_or(U&& fallback) const& {
    return has_value() ? std::get<0>(state_) : static_cast<T>(std::forward<U>(fallback));
  }

  const E& error() const& { return std::get<1>(state_); }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, E> state_;
};

// ---------------------------------------------------------------------------
// MacAddress
// ---------------------------------------------------------------------------

struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr MacAddress broadcast() noexcept {
    return MacAddress{{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}};
  }

  // Locally administered address derived from a small integer.
  static constexpr MacAddress from_index(std::uint8_t prefix, std::uint32_t index) noexcept {
    return MacAddress{{prefix, 0x00, static_cast<std::uint8_t>(index >> 24),
                       static_cast<std::uint8_t>(index >> 16),
                       static_cast<std::uint8_t>(index >> 8),
                       static_cast<std::uint8_t>(index)}};
  }

  constexpr bool is_broadcast() const noexcept { return *this == broadcast(); }
  constexpr bool is_group() const noexcept { return (octets[0] & 0x01) != 0; }

  static std::optional<MacAddress> parse(std::string_view text) {
    MacAddress mac;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0) {
        if (pos >= text.size() || (text[pos] != ':' && text[pos] != '-')) return std::nullopt;
        ++pos;
      }
      if (pos + 2 > text.size()) return std::nullopt;
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + 2, v, 16);
      if (ec != std::errc{} || ptr != text.data() + pos + 2) return std::nullopt;
      mac.octets[i] = static_cast<std::uint8_t>(v);
      pos += 2;
    }
    if (pos != text.size()) return std::nullopt;
    return mac;
  }

  std::string to_string() const {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(17);
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0) out.push_back(':');
      out.push_back(hex[octets[i] >> 4]);
      out.push_back(hex[octets[i] & 0x0F]);
    }
    return out;
  }

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

}  // namespace wifixdr

template <>
struct std::hash<wifixdr::MacAddress> {
  std::size_t operator()(const wifixdr::MacAddress& m) const noexcept {
    std::uint64_t v = 0;
    for (auto o : m.octets) v = (v << 8) | o;
    return std::hash<std::uint64_t>{}(v);
  }
};
