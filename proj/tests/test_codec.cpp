#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "frame_gen.hpp"
#include "test_support.hpp"
#include "udsmon/codec.hpp"
#include "udsmon/error.hpp"

using namespace udsmon;
using udsmon::testing::random_request;
using udsmon::testing::random_response;

namespace {

// Service table transcribed independently of the registry.
const std::set<Sid> kServices{0x10, 0x11, 0x14, 0x19, 0x22, 0x23, 0x24, 0x27, 0x28, 0x29, 0x2A, 0x2C, 0x2E, 0x2F,
                              0x31, 0x34, 0x35, 0x36, 0x37, 0x38, 0x3D, 0x3E, 0x83, 0x84, 0x85, 0x86, 0x87};

} // namespace

TEST(Registry, MatchesServiceTable) {
    std::set<Sid> seen;
    std::size_t in_context = 0;
    for (const auto &d : service_registry()) {
        seen.insert(d.sid);
        if (d.in_context_table) ++in_context;
    }
    EXPECT_EQ(seen, kServices);
    EXPECT_EQ(service_registry().size(), 27u);
    EXPECT_EQ(in_context, 26u);
}

TEST(Registry, Lookups) {
    auto rdbi = service_info(0x22);
    ASSERT_TRUE(rdbi);
    EXPECT_EQ(rdbi->name, "ReadDataByIdentifier");
    EXPECT_EQ(rdbi->short_name, "RDBI");
    auto atp = service_info(0x83);
    ASSERT_TRUE(atp);
    EXPECT_EQ(atp->name, "AccessTimingParameters");
    EXPECT_FALSE(atp->in_context_table);
    EXPECT_FALSE(service_info(0x99));
}

TEST(ParseRequest, SplitsFields) {
    auto sa = parse_request(Bytes{0x27, 0x01});
    EXPECT_EQ(sa.sid, 0x27);
    EXPECT_EQ(sa.subfunction, 0x01);
    EXPECT_TRUE(sa.payload.empty());

    auto tp = parse_request(Bytes{0x3E});
    EXPECT_EQ(tp.sid, 0x3E);
    EXPECT_FALSE(tp.subfunction);
    EXPECT_TRUE(tp.payload.empty());

    auto unknown = parse_request(Bytes{0xBA, 0x00});
    EXPECT_TRUE(unknown.unknown_service());
    EXPECT_EQ(unknown.sid, 0xBA);
    EXPECT_FALSE(unknown.subfunction);
    EXPECT_EQ(unknown.payload, Bytes{0x00});

    auto rdbi = parse_request(Bytes{0x22, 0xF1, 0x90});
    EXPECT_FALSE(rdbi.subfunction);
    EXPECT_EQ(rdbi.payload, (Bytes{0xF1, 0x90}));
}

TEST(ParseRequest, UnknownMatchesOracle) {
    for (int b = 0; b < 256; ++b) {
        auto r = parse_request(Bytes{static_cast<std::uint8_t>(b), 0x00});
        EXPECT_EQ(r.unknown_service(), !kServices.contains(static_cast<Sid>(b))) << b;
    }
}

TEST(ParseResponse, Frames) {
    auto neg = parse_response(Bytes{0x7F, 0x27, 0x35});
    EXPECT_TRUE(neg.negative());
    EXPECT_EQ(neg.sid, 0x27);
    EXPECT_EQ(neg.nrc, 0x35);

    auto pos = parse_response(Bytes{0x67, 0x01, 0xAA, 0xBB});
    EXPECT_TRUE(pos.positive());
    EXPECT_EQ(pos.sid, 0x27);
    EXPECT_EQ(pos.payload, (Bytes{0x01, 0xAA, 0xBB}));
    EXPECT_FALSE(pos.nrc);
}

TEST(ParseResponse, MalformedFramesRejected) {
    EXPECT_THROW(parse_request(Bytes{}), MalformedFrame);
    EXPECT_THROW(parse_response(Bytes{}), MalformedFrame);
    EXPECT_THROW(parse_response(Bytes{0x7F}), MalformedFrame);
    EXPECT_THROW(parse_response(Bytes{0x7F, 0x22}), MalformedFrame);
    EXPECT_THROW(parse_response(Bytes{0x7F, 0x22, 0x31, 0x00}), MalformedFrame);
    EXPECT_THROW(parse_response(Bytes{0x3F}), NotAResponse);
    EXPECT_THROW(parse_response(Bytes{0x00, 0x01}), NotAResponse);
    EXPECT_THROW(parse_response(Bytes{0x10, 0x03}), NotAResponse);
}

TEST(Encode, Layout) {
    EXPECT_EQ(encode_request(parse_request(Bytes{0x10, 0x03})), (Bytes{0x10, 0x03}));
    EXPECT_EQ(encode_response(UdsResponse::make_negative(0x31, 0x31)), (Bytes{0x7F, 0x31, 0x31}));
    EXPECT_EQ(encode_response(UdsResponse::make_positive(0x22, {0xF1, 0x90})), (Bytes{0x62, 0xF1, 0x90}));
}

TEST(Encode, RoundtripProperty) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20000; ++i) {
        auto req = random_request(rng);
        ASSERT_EQ(parse_request(encode_request(req)), req);
        auto rsp = random_response(rng);
        auto wire = encode_response(rsp);
        ASSERT_EQ(parse_response(wire), rsp);
        if (rsp.negative()) { ASSERT_EQ(wire.size(), 3u); }
    }
}

TEST(Hex, Conversions) {
    EXPECT_EQ(to_hex(Bytes{0x00, 0xAB, 0x7F}), "00ab7f");
    EXPECT_EQ(from_hex("00AB7f"), (Bytes{0x00, 0xAB, 0x7F}));
    EXPECT_FALSE(from_hex("abc"));
    EXPECT_FALSE(from_hex("zz"));
    EXPECT_EQ(hex_byte(0x27), "0x27");
    EXPECT_EQ(hex_u16(0xF190), "0xf190");
    EXPECT_EQ(hex_u64(0xFF0000), "0xff0000");
    EXPECT_EQ(parse_hex_number("0x1A"), 0x1Au);
    EXPECT_EQ(parse_hex_number("1a"), 0x1Au);
    EXPECT_FALSE(parse_hex_number("0xg1"));
}

TEST(Trace, Roundtrip) {
    std::vector<UdsExchange> trace{
        udsmon::testing::exchange({0x27, 0x01}, {0x67, 0x01, 0x11, 0x22}, 10),
        udsmon::testing::exchange({0x27, 0x02, 0x33, 0x44}, {0x7F, 0x27, 0x35}, 20),
        udsmon::testing::exchange({0x3E, 0x80}, {}, 30, 0x1003, "BCM", "body"),
    };
    std::stringstream ss;
    write_trace(ss, trace);
    EXPECT_EQ(read_trace(ss, "mem"), trace);
}

TEST(Trace, ParseErrorsCarryLine) {
    std::stringstream ss;
    ss << R"({"ts":1,"link":"obd","src":"0e80","ecu":"ECM","req":"1003"})" << "\n";
    ss << R"({"ts":2,"link":"obd","src":"0e80","ecu":"ECM","req":"10zz"})" << "\n";
    try {
        read_trace(ss, "t.jsonl");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.path(), "t.jsonl");
    }

    std::stringstream back;
    back << R"({"ts":5,"link":"obd","src":"0e80","ecu":"ECM","req":"1003"})" << "\n";
    back << R"({"ts":4,"link":"obd","src":"0e80","ecu":"ECM","req":"1003"})" << "\n";
    EXPECT_THROW(read_trace(back, "t"), ParseError);

    std::stringstream truncated;
    truncated << R"({"ts":5,"link":"obd","src":"0e80","ecu":"ECM","req":"22f190","rsp":"7f22"})" << "\n";
    EXPECT_THROW(read_trace(truncated, "t"), ParseError);
}

TEST(Trace, EmptyInput) {
    std::stringstream ss;
    EXPECT_TRUE(read_trace(ss, "empty").empty());
}
