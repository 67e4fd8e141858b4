#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <variant>
#include <vector>

#include <unistd.h>

#include "tokenring/framing.hpp"

using namespace tokenring;

namespace {

using Bytes = std::vector<std::uint8_t>;

DecodeResult decode(const Bytes& bytes, std::size_t chunk = 0) {
    BufferSource src(bytes, chunk);
    return decode_frame(src);
}

Frame random_frame(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(1, 3);
    std::uniform_int_distribution<std::uint32_t> u32;
    std::uniform_int_distribution<std::size_t> len(0, kMaxPayloadLimit);
    std::uniform_int_distribution<int> byte(0, 255);
    Frame f;
    f.kind = static_cast<FrameKind>(kind(rng));
    f.hop_count = u32(rng);
    f.ttl = u32(rng);
    f.payload.resize(len(rng));
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(byte(rng));
    return f;
}

}  // namespace

TEST_CASE("encode_frame produces the fixed 11-byte header layout") {
    CHECK(encode_frame(Frame{FrameKind::token, 0, 0, {}}) ==
          Bytes{0x01, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    CHECK(encode_frame(Frame{FrameKind::data, 1, 5, {'A'}}) ==
          Bytes{0x02, 0, 0, 0, 0x01, 0, 0, 0, 0x05, 0, 0x01, 0x41});
    CHECK(encode_frame(Frame{FrameKind::shutdown, 0, 4, {}}) ==
          Bytes{0x03, 0, 0, 0, 0, 0, 0, 0, 0x04, 0, 0});
    // big-endian multi-byte fields
    CHECK(encode_frame(Frame{FrameKind::token, 0x01020304, 0xA0B0C0D0, Bytes(0x0102, 0)}).size() ==
          kFrameHeaderSize + 0x0102);
    auto wide = encode_frame(Frame{FrameKind::token, 0x01020304, 0xA0B0C0D0, Bytes(0x0102, 0)});
    CHECK(Bytes(wide.begin(), wide.begin() + 11) ==
          Bytes{0x01, 0x01, 0x02, 0x03, 0x04, 0xA0, 0xB0, 0xC0, 0xD0, 0x01, 0x02});
}

TEST_CASE("encode_frame rejects oversize payloads") {
    Frame f{FrameKind::data, 0, 1, Bytes(kMaxPayloadLimit + 1, 0)};
    CHECK_THROWS_AS(encode_frame(f), OversizePayload);
    f.payload.resize(kMaxPayloadLimit);
    CHECK_NOTHROW(encode_frame(f));
    f.payload.resize(17);
    CHECK_THROWS_AS(encode_frame(f, 16), OversizePayload);
}

TEST_CASE("decode_frame basics") {
    auto token = decode(Bytes{0x01, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    REQUIRE(std::holds_alternative<Frame>(token));
    CHECK(std::get<Frame>(token) == Frame{FrameKind::token, 0, 0, {}});

    CHECK(std::holds_alternative<EndOfStream>(decode(Bytes{})));

    auto junk = decode(Bytes{0x7F, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    REQUIRE(std::holds_alternative<MalformedFrame>(junk));
    CHECK(std::get<MalformedFrame>(junk).reason.find("0x7f") != std::string::npos);

    // kind 0x00 and 0x04 sit right outside the enumeration
    CHECK(std::holds_alternative<MalformedFrame>(decode(Bytes{0x00, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0})));
    CHECK(std::holds_alternative<MalformedFrame>(decode(Bytes{0x04, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0})));
}

TEST_CASE("decode_frame rejects declared lengths above the limit") {
    Bytes header{0x02, 0, 0, 0, 0, 0, 0, 0, 1, 0x04, 0x01};  // 1025
    header.resize(header.size() + 1025, 0);
    CHECK(std::holds_alternative<MalformedFrame>(decode(header)));

    auto small = encode_frame(Frame{FrameKind::data, 0, 1, Bytes(32, 7)});
    BufferSource src(small);
    CHECK(std::holds_alternative<MalformedFrame>(decode_frame(src, 16)));
}

TEST_CASE("decode_frame survives one-byte reads") {
    auto bytes = encode_frame(Frame{FrameKind::data, 9, 3, {1, 2, 3, 4, 5}});
    auto result = decode(bytes, 1);
    REQUIRE(std::holds_alternative<Frame>(result));
    CHECK(std::get<Frame>(result).payload == Bytes{1, 2, 3, 4, 5});
}

TEST_CASE("property: roundtrip over randomized frames") {
    std::mt19937_64 rng(0x5eed);
    for (int i = 0; i < 2000; ++i) {
        Frame f = random_frame(rng);
        auto bytes = encode_frame(f);
        auto result = decode(bytes, (i % 7 == 0) ? 3 : 0);
        REQUIRE(std::holds_alternative<Frame>(result));
        REQUIRE(std::get<Frame>(result) == f);
    }
}

TEST_CASE("property: concatenated frames decode in order") {
    std::mt19937_64 rng(42);
    std::vector<Frame> frames;
    Bytes stream;
    for (int i = 0; i < 50; ++i) {
        frames.push_back(random_frame(rng));
        auto bytes = encode_frame(frames.back());
        stream.insert(stream.end(), bytes.begin(), bytes.end());
    }
    BufferSource src(stream, 100);
    for (const auto& f : frames) {
        auto r = decode_frame(src);
        REQUIRE(std::holds_alternative<Frame>(r));
        CHECK(std::get<Frame>(r) == f);
    }
    CHECK(std::holds_alternative<EndOfStream>(decode_frame(src)));
}

TEST_CASE("property: every strict prefix of an encoding is malformed") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        Frame f = random_frame(rng);
        f.payload.resize(f.payload.size() % 64);
        auto bytes = encode_frame(f);
        for (std::size_t cut = 1; cut < bytes.size(); ++cut) {
            Bytes prefix(bytes.begin(), bytes.begin() + static_cast<long>(cut));
            REQUIRE_MESSAGE(std::holds_alternative<MalformedFrame>(decode(prefix)), "cut at ", cut);
        }
    }
}

TEST_CASE("frames travel through a real pipe") {
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    Frame f{FrameKind::data, 1, 5, {'h', 'i'}};
    write_frame(fds[1], f);
    write_frame(fds[1], Frame{FrameKind::shutdown, 0, 4, {}});
    ::close(fds[1]);
    FdSource src(fds[0]);
    auto a = decode_frame(src);
    auto b = decode_frame(src);
    auto c = decode_frame(src);
    ::close(fds[0]);
    REQUIRE(std::holds_alternative<Frame>(a));
    CHECK(std::get<Frame>(a) == f);
    REQUIRE(std::holds_alternative<Frame>(b));
    CHECK(std::get<Frame>(b).kind == FrameKind::shutdown);
    CHECK(std::holds_alternative<EndOfStream>(c));
}
