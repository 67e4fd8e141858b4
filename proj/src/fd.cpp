#include "tokenring/fd.hpp"

#include <cerrno>

#include <unistd.h>

namespace tokenring {

void Fd::reset(int fd) noexcept {
    if (fd_ >= 0 && fd_ != fd) ::close(fd_);
    fd_ = fd;
}

void throw_errno(const std::string& what) {
    throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, std::span<const std::uint8_t> bytes) {
    while (!bytes.empty()) {
        ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw LinkBroken(errno, std::generic_category(), "write to ring link");
        }
        bytes = bytes.subspan(static_cast<std::size_t>(n));
    }
}

std::size_t read_some(int fd, std::span<std::uint8_t> buffer) {
    for (;;) {
        ssize_t n = ::read(fd, buffer.data(), buffer.size());
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno != EINTR) throw_errno("read from ring link");
    }
}

}  // namespace tokenring
