#pragma once

#include <chrono>
#include <cstdint>
#include <string_view>
#include <optional>

#include "tokenring/events.hpp"
#include "tokenring/framing.hpp"
#include "tokenring/ring_core.hpp"

namespace tokenring {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

enum class Scenario { identify_only, circulate, mutex };

std::string_view to_string(Scenario scenario);
std::optional<Scenario> scenario_from_string(std::string_view name);

struct NodeBehavior {
    Scenario scenario = Scenario::identify_only;
    /// Token laps before the origin absorbs it. At least 1 unless identify_only.
    std::uint32_t revolutions = 0;
    /// Simulated work inside the critical section.
    std::chrono::milliseconds cs_hold{0};
    /// Run a DATA probe round (one probe per node, ttl = n) before the token
    /// is injected.
    bool probe = false;

    friend bool operator==(const NodeBehavior&, const NodeBehavior&) = default;
};

struct TokenState {
    bool holds_token = false;
    std::uint32_t entries_made = 0;
};

/// Links a frame has crossed when it is read: the sender's hop value plus
/// the link it just came over.
constexpr std::uint64_t traversals(const Frame& frame) noexcept {
    return std::uint64_t{frame.hop_count} + 1;
}

/// Origin only: writes TOKEN hop=0 and emits TOKEN_TX.
void inject_token(const NodeContext& ctx, const DiagnosticSink& sink);

/// Writes a copy of `frame` with hop_count + 1 and emits the matching *_TX
/// event. TTL is left alone. Throws LinkBroken.
Frame forward(const NodeContext& ctx, const Frame& frame, const DiagnosticSink& sink);

/// Origin only: writes SHUTDOWN hop=0 ttl=n and emits SHUTDOWN_TX.
void initiate_shutdown(const NodeContext& ctx, const DiagnosticSink& sink);

/// Writes this node's DATA probe (ttl = n, payload = big-endian index).
void inject_probe(const NodeContext& ctx, const DiagnosticSink& sink);

/// Runs one node to completion and returns its exit status (0 or 2).
/// Closes the ring endpoints and reaps children before returning. A child
/// that exited unsuccessfully makes this node fail as well, so failures
/// propagate to the origin's exit status.
int run_node(NodeContext& ctx, const NodeBehavior& behavior, const RingSpec& spec,
             const DiagnosticSink& sink);

}  // namespace tokenring
