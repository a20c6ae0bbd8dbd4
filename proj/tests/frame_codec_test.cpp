#include <wifixdr/frame_codec.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace wifixdr;
using namespace wifixdr::codec;

namespace {

Bytes fixture(const std::string& name) {
  std::ifstream in(std::string(WIFIXDR_FIXTURES) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  std::stringstream ss;
  ss << in.rdbuf();
  auto bytes = from_hex(ss.str());
  EXPECT_TRUE(bytes.has_value()) << name;
  return bytes.value_or(Bytes{});
}

MacAddress random_mac(std::mt19937_64& rng) {
  MacAddress m;
  for (auto& o : m.octets) o = static_cast<std::uint8_t>(rng());
  return m;
}

std::vector<Channel> random_channels(std::mt19937_64& rng, std::size_t n) {
  std::vector<Channel> out(n);
  for (auto& c : out) c = static_cast<Channel>(1 + rng() % 255);
  return out;
}

}  // namespace

TEST(VendorIe, GoldenVectorsEncode) {
  EXPECT_EQ(*encode_vendor_ie(0, std::vector<Channel>{}), fixture("vendor_ie_hops0.hex"));
  EXPECT_EQ(*encode_vendor_ie(1, std::vector<Channel>{6}), fixture("vendor_ie_hops1.hex"));
  EXPECT_EQ(*encode_vendor_ie(2, std::vector<Channel>{6, 36}), fixture("vendor_ie_hops2.hex"));
  EXPECT_EQ(to_hex(*encode_vendor_ie(2, std::vector<Channel>{6, 36})), "DD 07 FF FE 00 01 02 06 24");
}

TEST(VendorIe, GoldenVectorsDecode) {
  auto gw = decode_vendor_ie(fixture("vendor_ie_hops0.hex"));
  ASSERT_TRUE(gw);
  EXPECT_EQ(gw->hops, 0);
  EXPECT_TRUE(gw->channels.empty());

  auto two = decode_vendor_ie(fixture("vendor_ie_hops2.hex"));
  ASSERT_TRUE(two);
  EXPECT_EQ(two->hops, 2);
  EXPECT_EQ(two->channels, (std::vector<Channel>{6, 36}));

  auto foreign = decode_vendor_ie(fixture("vendor_ie_foreign_oui.hex"));
  ASSERT_FALSE(foreign);
  EXPECT_EQ(foreign.error().code, CodecErrc::foreign_oui);
  EXPECT_EQ(foreign.error().field, "oui");
}

TEST(VendorIe, DistinctErrorsNameTheField) {
  auto check = [](const char* hex, CodecErrc code, const char* field) {
    auto r = decode_vendor_ie(*from_hex(hex));
    ASSERT_FALSE(r) << hex;
    EXPECT_EQ(r.error().code, code) << hex;
    EXPECT_EQ(r.error().field, field) << hex;
  };
  check("DC 05 FF FE 00 01 00", CodecErrc::bad_element_id, "element_id");
  check("DD 05 FF FE 00 02 00", CodecErrc::bad_ie_type, "ie_type");
  check("DD 06 FF FE 00 01 00", CodecErrc::length_mismatch, "length");
  check("DD 04 FF FE 00 01", CodecErrc::length_mismatch, "length");
  check("DD", CodecErrc::truncated, "header");
  check("DD 06 FF FE 00 01 01 00", CodecErrc::channel_out_of_range, "channel_list[0]");
}

TEST(VendorIe, EncodeRejectsBadInput) {
  std::vector<Channel> too_long(251, 6);
  EXPECT_EQ(encode_vendor_ie(3, too_long).error().code, CodecErrc::list_too_long);
  std::vector<Channel> max_len(250, 6);
  auto ok = encode_vendor_ie(250, max_len);
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->size(), 257u);
  EXPECT_EQ((*ok)[1], 255);
  EXPECT_EQ(encode_vendor_ie(1, std::vector<Channel>{0}).error().code, CodecErrc::channel_out_of_range);
  EXPECT_EQ(encode_vendor_ie(1, std::vector<Channel>{256}).error().code, CodecErrc::channel_out_of_range);
  EXPECT_EQ(encode_vendor_ie(256, std::vector<Channel>{}).error().code, CodecErrc::hops_out_of_range);
  EXPECT_EQ(encode_vendor_ie(-1, std::vector<Channel>{}).error().code, CodecErrc::hops_out_of_range);
}

TEST(VendorIe, RoundTripAndLengthProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    VendorIE ie{static_cast<int>(rng() % 256), random_channels(rng, rng() % 251)};
    auto enc = encode_vendor_ie(ie);
    ASSERT_TRUE(enc);
    ASSERT_EQ(enc->size(), 7 + ie.channels.size());
    ASSERT_EQ((*enc)[1], enc->size() - 2);
    auto dec = decode_vendor_ie(*enc);
    ASSERT_TRUE(dec);
    ASSERT_EQ(*dec, ie);
    ASSERT_EQ(*encode_vendor_ie(*dec), *enc);
  }
}

TEST(Decoders, TotalOnFuzzInput) {
  std::mt19937_64 rng(11);
  const MacAddress bssid = MacAddress::from_index(0x02, 1);
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes b(rng() % 64);
    for (auto& o : b) o = static_cast<std::uint8_t>(rng());
    // Bias half of the inputs toward plausible headers so deeper paths run.
    if (i % 2 == 0 && b.size() >= 7) {
      b[0] = kVendorIeId;
      b[1] = static_cast<std::uint8_t>(b.size() - 2 + (rng() % 3 == 0 ? 1 : 0));
      b[2] = 0xFF;
      b[3] = 0xFE;
      b[4] = 0x00;
    }
    accepted += decode_vendor_ie(b).has_value();
    (void)decode_beacon_body(bssid, b);
    (void)decode_eo11(b);
    (void)decode_tr(b);
  }
  EXPECT_GT(accepted, 0);
}

TEST(Beacon, VendorIeIsLastAndRoundTrips) {
  Beacon b{MacAddress::from_index(0x02, 3), "mesh", 2, {6, 36}, 11, 123456789};
  const Bytes extra{0x05, 0x04, 0x00, 0x01, 0x00, 0x00};  // a TIM element
  auto body = encode_beacon_body(b, 100, extra);
  ASSERT_TRUE(body);
  const Bytes ie = *encode_vendor_ie(2, b.channel_list);
  ASSERT_GE(body->size(), ie.size());
  EXPECT_TRUE(std::equal(ie.begin(), ie.end(), body->end() - static_cast<std::ptrdiff_t>(ie.size())));
  auto dec = decode_beacon_body(b.bssid, *body);
  ASSERT_TRUE(dec);
  EXPECT_EQ(*dec, b);
}

TEST(Beacon, RejectsOversizeBody) {
  Beacon b{MacAddress::from_index(0x02, 3), "mesh", 0, {}, 1, 0};
  Bytes extra;
  while (extra.size() + 257 < kMaxBeaconBody) {
    extra.push_back(0x10);
    extra.push_back(255);
    extra.insert(extra.end(), 255, 0);
  }
  auto body = encode_beacon_body(b, 100, extra);
  ASSERT_FALSE(body);
  EXPECT_EQ(body.error().code, CodecErrc::body_too_large);

  Bytes huge(kMaxBeaconBody + 1, 0);
  EXPECT_EQ(decode_beacon_body(b.bssid, huge).error().code, CodecErrc::body_too_large);
}

TEST(Beacon, HopsMustMatchListLength) {
  Beacon b{MacAddress::from_index(0x02, 3), "mesh", 2, {6}, 1, 0};
  EXPECT_EQ(encode_beacon_body(b).error().code, CodecErrc::hops_list_mismatch);
}

TEST(Beacon, MissingVendorIeIsReported) {
  Beacon b{MacAddress::from_index(0x02, 3), "mesh", 0, {}, 1, 0};
  Bytes body = *encode_beacon_body(b);
  body.resize(body.size() - 7);  // strip the vendor IE
  EXPECT_EQ(decode_beacon_body(b.bssid, body).error().code, CodecErrc::missing_vendor_ie);
}

TEST(Beacon, RandomRoundTrips) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    Beacon b;
    b.bssid = random_mac(rng);
    b.ssid = std::string(rng() % 33, 'a');
    b.channel_list = random_channels(rng, rng() % 40);
    b.hops = static_cast<int>(b.channel_list.size());
    b.tx_channel = static_cast<Channel>(1 + rng() % 255);
    b.timestamp = static_cast<Micros>(rng() >> 1);
    auto body = encode_beacon_body(b);
    ASSERT_TRUE(body);
    auto dec = decode_beacon_body(b.bssid, *body);
    ASSERT_TRUE(dec);
    ASSERT_EQ(*dec, b);
  }
}

TEST(Eo11, WrapsInnerFrameUnchanged) {
  const auto h1 = MacAddress::from_index(0x0A, 1);
  const auto h2 = MacAddress::from_index(0x0A, 2);
  const auto m1 = MacAddress::from_index(0x02, 1);
  const auto m2 = MacAddress::from_index(0x02, 2);
  const auto m3 = MacAddress::from_index(0x02, 3);
  EthernetFrame inner{h2, h1, 0x0800, Bytes(100, 0x5A)};
  const Bytes inner_bytes = inner.to_bytes();

  auto outer = encode_eo11(inner, m2, m1);
  EXPECT_EQ(outer.outer_dst, m2);
  EXPECT_EQ(outer.outer_src, m1);
  EXPECT_EQ(outer.outer_ethertype, 0x88B5);
  const Bytes wire = serialize(outer);
  ASSERT_EQ(wire.size(), 14 + inner_bytes.size());
  EXPECT_TRUE(std::equal(inner_bytes.begin(), inner_bytes.end(), wire.begin() + 14));
  EXPECT_EQ(wire[12], 0x88);
  EXPECT_EQ(wire[13], 0xB5);

  auto relayed = reencapsulate(outer, m3, m2);
  EXPECT_EQ(relayed.outer_dst, m3);
  EXPECT_EQ(relayed.outer_src, m2);
  EXPECT_EQ(relayed.inner, inner);
}

TEST(Eo11, DecodeErrors) {
  EXPECT_EQ(decode_eo11(Bytes(13, 0)).error().code, CodecErrc::truncated);
  Bytes wrong(28, 0);
  wrong[12] = 0x08;
  EXPECT_EQ(decode_eo11(wrong).error().code, CodecErrc::bad_ethertype);
  Bytes short_inner(20, 0);
  short_inner[12] = 0x88;
  short_inner[13] = 0xB5;
  EXPECT_EQ(decode_eo11(short_inner).error().code, CodecErrc::truncated);
}

TEST(Eo11, RandomRoundTrips) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    EthernetFrame inner{random_mac(rng), random_mac(rng), static_cast<std::uint16_t>(rng()), Bytes(rng() % 1500)};
    for (auto& o : inner.payload) o = static_cast<std::uint8_t>(rng());
    const auto f = encode_eo11(inner, random_mac(rng), random_mac(rng));
    auto dec = decode_eo11(serialize(f));
    ASSERT_TRUE(dec);
    ASSERT_EQ(*dec, f);
    ASSERT_EQ(dec->inner.to_bytes(), inner.to_bytes());
  }
}

TEST(Tr, GatewayMessageLayout) {
  const auto gw = MacAddress::from_index(0x02, 1);
  auto enc = encode_tr(TrMessage{0, gw, gw});
  ASSERT_TRUE(enc);
  EXPECT_EQ(*enc, fixture("tr_gateway.hex"));
}

TEST(Tr, BoundariesAndErrors) {
  const auto a = MacAddress::from_index(0x02, 1);
  const auto b = MacAddress::from_index(0x02, 2);
  auto max = decode_tr(*encode_tr(TrMessage{255, a, b}));
  ASSERT_TRUE(max);
  EXPECT_EQ(max->hops, 255);
  EXPECT_EQ(encode_tr(TrMessage{256, a, b}).error().code, CodecErrc::hops_out_of_range);
  EXPECT_EQ(decode_tr(Bytes(12, 0)).error().code, CodecErrc::truncated);
  EXPECT_EQ(decode_tr(Bytes(14, 0)).error().code, CodecErrc::length_mismatch);
}

TEST(Tr, RandomRoundTrips) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 10000; ++i) {
    TrMessage m{static_cast<int>(rng() % 256), random_mac(rng), random_mac(rng)};
    auto dec = decode_tr(*encode_tr(m));
    ASSERT_TRUE(dec);
    ASSERT_EQ(*dec, m);
  }
}

TEST(Hex, ParsesCommentsAndRejectsOddDigits) {
  EXPECT_EQ(*from_hex("# c\nDD 05\n0a"), (Bytes{0xDD, 0x05, 0x0A}));
  EXPECT_FALSE(from_hex("D D"));
  EXPECT_FALSE(from_hex("DDD"));
  EXPECT_FALSE(from_hex("ZZ"));
}
