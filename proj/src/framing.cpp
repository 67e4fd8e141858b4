#include "tokenring/framing.hpp"

#include <algorithm>
#include <array>

#include "tokenring/fd.hpp"

namespace tokenring {

namespace {

void put_u32(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v >> 24);
    out[1] = static_cast<std::uint8_t>(v >> 16);
    out[2] = static_cast<std::uint8_t>(v >> 8);
    out[3] = static_cast<std::uint8_t>(v);
}

std::uint32_t get_u32(const std::uint8_t* in) {
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
           (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

bool known_kind(std::uint8_t byte) {
    return byte == static_cast<std::uint8_t>(FrameKind::token) ||
           byte == static_cast<std::uint8_t>(FrameKind::data) ||
           byte == static_cast<std::uint8_t>(FrameKind::shutdown);
}

// Fills the buffer completely; returns the number of bytes obtained before
// end-of-stream.
std::size_t read_fully(ByteSource& source, std::span<std::uint8_t> buffer) {
    std::size_t got = 0;
    while (got < buffer.size()) {
        std::size_t n = source.read_some(buffer.subspan(got));
        if (n == 0) break;
        got += n;
    }
    return got;
}

}  // namespace

std::string_view to_string(FrameKind kind) {
    switch (kind) {
        case FrameKind::token: return "TOKEN";
        case FrameKind::data: return "DATA";
        case FrameKind::shutdown: return "SHUTDOWN";
    }
    return "?";
}

std::vector<std::uint8_t> encode_frame(const Frame& frame, std::size_t max_payload) {
    max_payload = std::min(max_payload, kMaxPayloadLimit);
    if (frame.payload.size() > max_payload) {
        throw OversizePayload("frame payload of " + std::to_string(frame.payload.size()) +
                              " bytes exceeds limit of " + std::to_string(max_payload));
    }
    std::vector<std::uint8_t> out(kFrameHeaderSize + frame.payload.size());
    out[0] = static_cast<std::uint8_t>(frame.kind);
    put_u32(&out[1], frame.hop_count);
    put_u32(&out[5], frame.ttl);
    auto len = static_cast<std::uint16_t>(frame.payload.size());
    out[9] = static_cast<std::uint8_t>(len >> 8);
    out[10] = static_cast<std::uint8_t>(len);
    std::copy(frame.payload.begin(), frame.payload.end(), out.begin() + kFrameHeaderSize);
    return out;
}

std::size_t FdSource::read_some(std::span<std::uint8_t> buffer) {
    return tokenring::read_some(fd_, buffer);
}

std::size_t BufferSource::read_some(std::span<std::uint8_t> buffer) {
    std::size_t n = std::min(buffer.size(), bytes_.size());
    if (chunk_ > 0) n = std::min(n, chunk_);
    std::copy_n(bytes_.begin(), n, buffer.begin());
    bytes_ = bytes_.subspan(n);
    return n;
}

DecodeResult decode_frame(ByteSource& source, std::size_t max_payload) {
    max_payload = std::min(max_payload, kMaxPayloadLimit);
    std::array<std::uint8_t, kFrameHeaderSize> header{};

    std::size_t got = read_fully(source, header);
    if (got == 0) return EndOfStream{};
    // Check the kind as soon as it is available so garbage is reported as
    // such rather than as truncation.
    if (!known_kind(header[0])) {
        return MalformedFrame{"unknown frame kind 0x" +
                              std::string{"0123456789abcdef"[header[0] >> 4]} +
                              "0123456789abcdef"[header[0] & 0xf]};
    }
    if (got < header.size()) {
        return MalformedFrame{"truncated header: " + std::to_string(got) + " of " +
                              std::to_string(kFrameHeaderSize) + " bytes"};
    }

    Frame frame;
    frame.kind = static_cast<FrameKind>(header[0]);
    frame.hop_count = get_u32(&header[1]);
    frame.ttl = get_u32(&header[5]);
    std::size_t length = (std::size_t{header[9]} << 8) | header[10];
    if (length > max_payload) {
        return MalformedFrame{"declared payload length " + std::to_string(length) +
                              " exceeds limit of " + std::to_string(max_payload)};
    }
    frame.payload.resize(length);
    got = read_fully(source, frame.payload);
    if (got < length) {
        return MalformedFrame{"truncated payload: " + std::to_string(got) + " of " +
                              std::to_string(length) + " bytes"};
    }
    return frame;
}

void write_frame(int fd, const Frame& frame, std::size_t max_payload) {
    write_all(fd, encode_frame(frame, max_payload));
}

}  // namespace tokenring
