#pragma once

// Wire formats: the WiFIX-DR vendor-specific IE, beacon bodies that carry it,
// Eo11 hop-by-hop encapsulation and the single-radio TR message.
//
// Decoders are total: any octet sequence yields a value or a CodecError that
// names the offending field.

#include <wifixdr/common.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wifixdr::codec {

inline constexpr std::uint8_t kVendorIeId = 221;
inline constexpr std::array<std::uint8_t, 3> kWifixOui{0xFF, 0xFE, 0x00};
inline constexpr std::uint8_t kWifixIeType = 0x01;
// OUI(3) + type(1) + hops/subtype(1)
inline constexpr std::size_t kVendorIeFixedContent = 5;
inline constexpr std::size_t kMaxIeChannels = 255 - kVendorIeFixedContent;
inline constexpr std::size_t kMaxBeaconBody = 2320;

inline constexpr std::uint16_t kEo11Ethertype = 0x88B5;
inline constexpr std::size_t kEthernetHeaderSize = 14;
inline constexpr std::size_t kTrMessageSize = 13;

enum class CodecErrc {
  truncated,
  bad_element_id,
  length_mismatch,
  foreign_oui,
  bad_ie_type,
  hops_out_of_range,
  channel_out_of_range,
  list_too_long,
  bad_ethertype,
  body_too_large,
  missing_vendor_ie,
  hops_list_mismatch,
  ssid_too_long,
};

struct CodecError {
  CodecErrc code;
  std::string field;
  std::string detail;

  std::string message() const { return field + ": " + detail; }
};

template <typename T>
using CodecResult = Expected<T, CodecError>;

inline Unexpected<CodecError> codec_error(CodecErrc code, std::string field, std::string detail) {
  return Unexpected<CodecError>{CodecError{code, std::move(field), std::move(detail)}};
}

// ---------------------------------------------------------------------------
// Hex text helpers (golden-vector fixtures, CLI dumps)
// ---------------------------------------------------------------------------

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(bytes.size() * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0x0F]);
  }
  return out;
}

// Accepts whitespace-separated hex octets; '#' starts a comment to end of line.
inline std::optional<Bytes> from_hex(std::string_view text) {
  Bytes out;
  int nibble = -1;
  bool comment = false;
  for (char c : text) {
    if (comment) {
      if (c == '\n') comment = false;
      continue;
    }
    if (c == '#') {
      comment = true;
      continue;
    }
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ':') {
      if (nibble >= 0) return std::nullopt;
      continue;
    } else {
      return std::nullopt;
    }
    if (nibble < 0) {
      nibble = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((nibble << 4) | v));
      nibble = -1;
    }
  }
  if (nibble >= 0) return std::nullopt;
  return out;
}

namespace detail {

inline void put_mac(Bytes& out, const MacAddress& mac) {
  out.insert(out.end(), mac.octets.begin(), mac.octets.end());
}

inline MacAddress get_mac(std::span<const std::uint8_t> in) {
  MacAddress mac;
  std::copy_n(in.begin(), 6, mac.octets.begin());
  return mac;
}

inline void put_u16_be(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline std::uint16_t get_u16_be(std::span<const std::uint8_t> in) {
  return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Vendor-specific IE
// ---------------------------------------------------------------------------

// Decoded content of the WiFIX-DR IE: hop count to the GW and the ordered
// channels used by upstream UP-NICs.
struct VendorIE {
  int hops = 0;
  std::vector<Channel> channels;

  friend bool operator==(const VendorIE&, const VendorIE&) = default;
};

// Layout: [221, len, FF, FE, 00, 01, hops, ch1 .. chN], len = 5 + N.
inline CodecResult<Bytes> encode_vendor_ie(int hops, std::span<const Channel> channels) {
  if (hops < 0 || hops > 255) {
    return codec_error(CodecErrc::hops_out_of_range, "hops", "must be in 0..255, got " + std::to_string(hops));
  }
  if (channels.size() > kMaxIeChannels) {
    return codec_error(CodecErrc::list_too_long, "channel_list",
                       std::to_string(channels.size()) + " entries exceed the limit of " +
                           std::to_string(kMaxIeChannels));
  }
  Bytes out;
  out.reserve(2 + kVendorIeFixedContent + channels.size());
  out.push_back(kVendorIeId);
  out.push_back(static_cast<std::uint8_t>(kVendorIeFixedContent + channels.size()));
  out.insert(out.end(), kWifixOui.begin(), kWifixOui.end());
  out.push_back(kWifixIeType);
  out.push_back(static_cast<std::uint8_t>(hops));
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Channel ch = channels[i];
    if (ch < 1 || ch > 255) {
      return codec_error(CodecErrc::channel_out_of_range, "channel_list[" + std::to_string(i) + "]",
                         "channel " + std::to_string(ch) + " outside 1..255");
    }
    out.push_back(static_cast<std::uint8_t>(ch));
  }
  return out;
}

inline CodecResult<Bytes> encode_vendor_ie(const VendorIE& ie) {
  return encode_vendor_ie(ie.hops, ie.channels);
}

inline CodecResult<VendorIE> decode_vendor_ie(std::span<const std::uint8_t> in) {
  if (in.size() < 2) {
    return codec_error(CodecErrc::truncated, "header", "need 2 octets, got " + std::to_string(in.size()));
  }
  if (in[0] != kVendorIeId) {
    return codec_error(CodecErrc::bad_element_id, "element_id", "expected 221, got " + std::to_string(in[0]));
  }
  const std::size_t length = in[1];
  if (in.size() != 2 + length) {
    return codec_error(CodecErrc::length_mismatch, "length",
                       "field says " + std::to_string(length) + " but " + std::to_string(in.size() - 2) +
                           " octets follow");
  }
  if (length < kVendorIeFixedContent) {
    return codec_error(CodecErrc::length_mismatch, "length",
                       "value " + std::to_string(length) + " shorter than OUI+type+subtype");
  }
  if (!std::equal(kWifixOui.begin(), kWifixOui.end(), in.begin() + 2)) {
    return codec_error(CodecErrc::foreign_oui, "oui", "foreign OUI " + to_hex(in.subspan(2, 3)));
  }
  if (in[5] != kWifixIeType) {
    return codec_error(CodecErrc::bad_ie_type, "ie_type", "expected 01, got " + to_hex(in.subspan(5, 1)));
  }
  VendorIE ie;
  ie.hops = in[6];
  for (std::size_t i = 7; i < in.size(); ++i) {
    if (in[i] == 0) {
      return codec_error(CodecErrc::channel_out_of_range, "channel_list[" + std::to_string(i - 7) + "]",
                         "channel 0 is not a valid channel");
    }
    ie.channels.push_back(in[i]);
  }
  return ie;
}

// ---------------------------------------------------------------------------
// Beacon body
// ---------------------------------------------------------------------------

struct Beacon {
  MacAddress bssid;
  std::string ssid;
  int hops = 0;
  std::vector<Channel> channel_list;
  Channel tx_channel = 0;
  Micros timestamp = 0;

  friend bool operator==(const Beacon&, const Beacon&) = default;
};

inline constexpr std::uint8_t kSsidIeId = 0;
inline constexpr std::uint8_t kDsParamIeId = 3;
inline constexpr std::size_t kBeaconFixedFields = 12;

// Body: timestamp(8, LE) | interval TU(2, LE) | capability(2) | SSID IE |
// DS parameter set IE | extra IEs | WiFIX-DR vendor IE (always last).
// `extra_ies` must already be TLV encoded.
inline CodecResult<Bytes> encode_beacon_body(const Beacon& b, std::uint16_t interval_tu = 100,
                                             std::span<const std::uint8_t> extra_ies = {}) {
  if (b.ssid.size() > 32) {
    return codec_error(CodecErrc::ssid_too_long, "ssid", "longer than 32 octets");
  }
  if (b.tx_channel < 1 || b.tx_channel > 255) {
    return codec_error(CodecErrc::channel_out_of_range, "tx_channel",
                       "channel " + std::to_string(b.tx_channel) + " outside 1..255");
  }
  if (static_cast<std::size_t>(b.hops) != b.channel_list.size()) {
    return codec_error(CodecErrc::hops_list_mismatch, "channel_list",
                       "hops=" + std::to_string(b.hops) + " but list has " +
                           std::to_string(b.channel_list.size()) + " entries");
  }
  auto ie = encode_vendor_ie(b.hops, b.channel_list);
  if (!ie) return Unexpected<CodecError>{ie.error()};

  Bytes out;
  const auto ts = static_cast<std::uint64_t>(b.timestamp);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(ts >> (8 * i)));
  out.push_back(static_cast<std::uint8_t>(interval_tu & 0xFF));
  out.push_back(static_cast<std::uint8_t>(interval_tu >> 8));
  out.push_back(0x01);  // ESS
  out.push_back(0x00);
  out.push_back(kSsidIeId);
  out.push_back(static_cast<std::uint8_t>(b.ssid.size()));
  out.insert(out.end(), b.ssid.begin(), b.ssid.end());
  out.push_back(kDsParamIeId);
  out.push_back(1);
  out.push_back(static_cast<std::uint8_t>(b.tx_channel));
  out.insert(out.end(), extra_ies.begin(), extra_ies.end());
  out.insert(out.end(), ie->begin(), ie->end());
  if (out.size() > kMaxBeaconBody) {
    return codec_error(CodecErrc::body_too_large, "body",
                       std::to_string(out.size()) + " octets exceed " + std::to_string(kMaxBeaconBody));
  }
  return out;
}

// Parses a beacon body. The last IE must be a WiFIX-DR vendor IE; beacons
// without one are reported as missing_vendor_ie (or with the IE's own error).
inline CodecResult<Beacon> decode_beacon_body(const MacAddress& bssid, std::span<const std::uint8_t> body) {
  if (body.size() > kMaxBeaconBody) {
    return codec_error(CodecErrc::body_too_large, "body",
                       std::to_string(body.size()) + " octets exceed " + std::to_string(kMaxBeaconBody));
  }
  if (body.size() < kBeaconFixedFields) {
    return codec_error(CodecErrc::truncated, "fixed_fields", "beacon body shorter than 12 octets");
  }
  Beacon b;
  b.bssid = bssid;
  std::uint64_t ts = 0;
  for (int i = 7; i >= 0; --i) ts = (ts << 8) | body[static_cast<std::size_t>(i)];
  b.timestamp = static_cast<Micros>(ts);

  std::size_t pos = kBeaconFixedFields;
  std::span<const std::uint8_t> last_ie;
  bool have_channel = false;
  while (pos < body.size()) {
    if (pos + 2 > body.size()) {
      return codec_error(CodecErrc::truncated, "ie_header", "IE header truncated at offset " + std::to_string(pos));
    }
    const std::size_t len = body[pos + 1];
    if (pos + 2 + len > body.size()) {
      return codec_error(CodecErrc::truncated, "ie_body", "IE at offset " + std::to_string(pos) + " overruns body");
    }
    auto ie = body.subspan(pos, 2 + len);
    if (ie[0] == kSsidIeId) {
      b.ssid.assign(ie.begin() + 2, ie.end());
    } else if (ie[0] == kDsParamIeId && len == 1) {
      b.tx_channel = ie[2];
      have_channel = true;
    }
    last_ie = ie;
    pos += 2 + len;
  }
  if (last_ie.empty() || last_ie[0] != kVendorIeId) {
    return codec_error(CodecErrc::missing_vendor_ie, "vendor_ie", "last IE is not vendor-specific");
  }
  auto vie = decode_vendor_ie(last_ie);
  if (!vie) return Unexpected<CodecError>{vie.error()};
  if (!have_channel || b.tx_channel == 0) {
    return codec_error(CodecErrc::channel_out_of_range, "tx_channel", "missing DS parameter set");
  }
  b.hops = vie->hops;
  b.channel_list = std::move(vie->channels);
  if (static_cast<std::size_t>(b.hops) != b.channel_list.size()) {
    return codec_error(CodecErrc::hops_list_mismatch, "channel_list",
                       "hops=" + std::to_string(b.hops) + " but list has " +
                           std::to_string(b.channel_list.size()) + " entries");
  }
  return b;
}

// ---------------------------------------------------------------------------
// Ethernet and Eo11
// ---------------------------------------------------------------------------

struct EthernetFrame {
  MacAddress dst;
  MacAddress src;
  std::uint16_t ethertype = 0;
  Bytes payload;

  std::size_t size() const noexcept { return kEthernetHeaderSize + payload.size(); }

  Bytes to_bytes() const {
    Bytes out;
    out.reserve(size());
    detail::put_mac(out, dst);
    detail::put_mac(out, src);
    detail::put_u16_be(out, ethertype);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }

  static CodecResult<EthernetFrame> parse(std::span<const std::uint8_t> in) {
    if (in.size() < kEthernetHeaderSize) {
      return codec_error(CodecErrc::truncated, "inner_header",
                         "Ethernet header needs 14 octets, got " + std::to_string(in.size()));
    }
    EthernetFrame f;
    f.dst = detail::get_mac(in.subspan(0, 6));
    f.src = detail::get_mac(in.subspan(6, 6));
    f.ethertype = detail::get_u16_be(in.subspan(12, 2));
    f.payload.assign(in.begin() + kEthernetHeaderSize, in.end());
    return f;
  }

  friend bool operator==(const EthernetFrame&, const EthernetFrame&) = default;
};

// Outer hop-by-hop header wrapping a whole inner Ethernet frame.
struct Eo11Frame {
  MacAddress outer_dst;
  MacAddress outer_src;
  std::uint16_t outer_ethertype = kEo11Ethertype;
  EthernetFrame inner;

  std::size_t size() const noexcept { return kEthernetHeaderSize + inner.size(); }

  friend bool operator==(const Eo11Frame&, const Eo11Frame&) = default;
};

inline Eo11Frame encode_eo11(EthernetFrame inner, const MacAddress& next_hop, const MacAddress& self_mac) {
  return Eo11Frame{next_hop, self_mac, kEo11Ethertype, std::move(inner)};
}

// Relay step: same inner frame, new outer header for the next link.
inline Eo11Frame reencapsulate(const Eo11Frame& received, const MacAddress& next_hop, const MacAddress& self_mac) {
  return encode_eo11(received.inner, next_hop, self_mac);
}

inline Bytes serialize(const Eo11Frame& f) {
  Bytes out;
  out.reserve(f.size());
  detail::put_mac(out, f.outer_dst);
  detail::put_mac(out, f.outer_src);
  detail::put_u16_be(out, f.outer_ethertype);
  const Bytes inner = f.inner.to_bytes();
  out.insert(out.end(), inner.begin(), inner.end());
  return out;
}

inline CodecResult<Eo11Frame> decode_eo11(std::span<const std::uint8_t> in) {
  if (in.size() < kEthernetHeaderSize) {
    return codec_error(CodecErrc::truncated, "outer_header",
                       "outer header needs 14 octets, got " + std::to_string(in.size()));
  }
  Eo11Frame f;
  f.outer_dst = detail::get_mac(in.subspan(0, 6));
  f.outer_src = detail::get_mac(in.subspan(6, 6));
  f.outer_ethertype = detail::get_u16_be(in.subspan(12, 2));
  if (f.outer_ethertype != kEo11Ethertype) {
    return codec_error(CodecErrc::bad_ethertype, "outer_ethertype",
                       "expected 88 B5, got " + to_hex(in.subspan(12, 2)));
  }
  auto inner = EthernetFrame::parse(in.subspan(kEthernetHeaderSize));
  if (!inner) return Unexpected<CodecError>{inner.error()};
  f.inner = std::move(*inner);
  return f;
}

// ---------------------------------------------------------------------------
// TR message (single-radio baseline)
// ---------------------------------------------------------------------------

struct TrMessage {
  int hops = 0;
  MacAddress parent_addr;
  MacAddress origin_addr;

  friend bool operator==(const TrMessage&, const TrMessage&) = default;
};

// Fixed 13 octets: hops(1) | parent(6) | origin(6).
inline CodecResult<Bytes> encode_tr(const TrMessage& m) {
  if (m.hops < 0 || m.hops > 255) {
    return codec_error(CodecErrc::hops_out_of_range, "hops", "must be in 0..255, got " + std::to_string(m.hops));
  }
  Bytes out;
  out.reserve(kTrMessageSize);
  out.push_back(static_cast<std::uint8_t>(m.hops));
  detail::put_mac(out, m.parent_addr);
  detail::put_mac(out, m.origin_addr);
  return out;
}

inline CodecResult<TrMessage> decode_tr(std::span<const std::uint8_t> in) {
  if (in.size() < kTrMessageSize) {
    return codec_error(CodecErrc::truncated, "tr", "need 13 octets, got " + std::to_string(in.size()));
  }
  if (in.size() > kTrMessageSize) {
    return codec_error(CodecErrc::length_mismatch, "tr", "trailing octets after 13-octet message");
  }
  TrMessage m;
  m.hops = in[0];
  m.parent_addr = detail::get_mac(in.subspan(1, 6));
  m.origin_addr = detail::get_mac(in.subspan(7, 6));
  return m;
}

}  // namespace wifixdr::codec
