#pragma once

// Wire format for ring links. Every frame is an 11-byte header followed by
// the payload:
//
//   offset  size  field
//   0       1     kind            (0x01 TOKEN, 0x02 DATA, 0x03 SHUTDOWN)
//   1       4     hop_count       big-endian
//   5       4     ttl             big-endian
//   9       2     payload_length  big-endian
//   11      n     payload
//
// There is no checksum and no sync marker; a reader must start on a frame
// boundary.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tokenring {

enum class FrameKind : std::uint8_t {
    token = 0x01,
    data = 0x02,
    shutdown = 0x03,
};

std::string_view to_string(FrameKind kind);

inline constexpr std::size_t kFrameHeaderSize = 11;
inline constexpr std::size_t kMaxPayloadLimit = 1024;

struct Frame {
    FrameKind kind = FrameKind::token;
    std::uint32_t hop_count = 0;
    /// Remaining forwards before absorption. Unused (0) for TOKEN frames.
    std::uint32_t ttl = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

class OversizePayload : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Serializes header and payload. Throws OversizePayload when the payload
/// exceeds max_payload.
std::vector<std::uint8_t> encode_frame(const Frame& frame,
                                       std::size_t max_payload = kMaxPayloadLimit);

struct EndOfStream {
    friend bool operator==(EndOfStream, EndOfStream) = default;
};

struct MalformedFrame {
    std::string reason;
};

using DecodeResult = std::variant<Frame, EndOfStream, MalformedFrame>;

/// Pull-style byte stream. read_some returns 0 only at end-of-stream.
class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
};

/// Reads straight from a descriptor with no buffering, so a frame reader
/// never consumes bytes beyond the frame it returns.
class FdSource final : public ByteSource {
public:
    explicit FdSource(int fd) noexcept : fd_(fd) {}
    std::size_t read_some(std::span<std::uint8_t> buffer) override;

private:
    int fd_;
};

/// In-memory source. chunk > 0 caps how many bytes a single read returns,
/// which lets tests exercise short reads.
class BufferSource final : public ByteSource {
public:
    explicit BufferSource(std::span<const std::uint8_t> bytes, std::size_t chunk = 0) noexcept
        : bytes_(bytes), chunk_(chunk) {}
    std::size_t read_some(std::span<std::uint8_t> buffer) override;
    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t chunk_;
};

/// Reads exactly one frame. EndOfStream is returned only when the stream is
/// exhausted at a frame boundary; a stream that ends inside a frame, an
/// unknown kind byte, or a declared length above max_payload is malformed.
DecodeResult decode_frame(ByteSource& source, std::size_t max_payload = kMaxPayloadLimit);

/// Encodes and writes one frame with a single write loop. Throws LinkBroken.
void write_frame(int fd, const Frame& frame, std::size_t max_payload = kMaxPayloadLimit);

}  // namespace tokenring
