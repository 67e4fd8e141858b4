#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "tokenring/ring_core.hpp"
#include "tokenring/token_proto.hpp"

namespace tokenring {

struct CliInvocation {
    std::string program = "ring";
    Scenario subcommand = Scenario::identify_only;
    int n = 1;
    std::uint32_t laps = 1;
    bool paper_format = false;
    std::chrono::milliseconds hold{0};
    std::size_t max_payload = kMaxPayloadLimit;
    std::chrono::milliseconds timeout = kDefaultTeardownTimeout;
    bool probe = false;

    [[nodiscard]] RingSpec spec() const;
    [[nodiscard]] NodeBehavior behavior() const;
};

/// Thrown for --help; what() is the help text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the full argument vector (program name first). Throws UsageError,
/// ResourceError or HelpRequested.
CliInvocation parse_invocation(std::span<const std::string> args);

std::string usage_text(const std::string& program);

/// The ring executable: parse, build the ring, run this process's node.
/// Returns the process exit status in every process of the ring.
int run_cli(std::span<const std::string> args);

}  // namespace tokenring
