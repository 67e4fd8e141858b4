#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>

namespace tokenring {

/// Owning wrapper around a POSIX file descriptor. Closes on destruction.
class Fd {
public:
    Fd() noexcept = default;
    explicit Fd(int fd) noexcept : fd_(fd) {}
    ~Fd() { reset(); }

    Fd(Fd&& other) noexcept : fd_(other.release()) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) reset(other.release());
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;

    [[nodiscard]] int get() const noexcept { return fd_; }
    [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
    explicit operator bool() const noexcept { return valid(); }

    int release() noexcept {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset(int fd = -1) noexcept;

private:
    int fd_ = -1;
};

/// Raised when the successor end of a ring link is gone (EPIPE) or a write fails.
class LinkBroken : public std::system_error {
public:
    using std::system_error::system_error;
};

/// Writes the whole buffer, retrying on EINTR and short writes.
void write_all(int fd, std::span<const std::uint8_t> bytes);

/// One read(2) call with EINTR retry. Returns 0 at end-of-stream.
std::size_t read_some(int fd, std::span<std::uint8_t> buffer);

[[noreturn]] void throw_errno(const std::string& what);

}  // namespace tokenring
