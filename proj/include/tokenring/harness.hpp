#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tokenring/events.hpp"
#include "tokenring/ring_core.hpp"
#include "tokenring/token_proto.hpp"

namespace tokenring {

struct Verdict {
    bool pass = false;
    std::string detail;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Everything observed from one run of the ring executable.
struct RingReport {
    RingSpec spec;
    NodeBehavior behavior;
    /// Merged capture in arrival order; each node's own events keep the order
    /// the node wrote them.
    std::vector<LogEvent> events;
    /// Diagnostic lines that did not parse as events.
    std::vector<std::string> residue;
    /// node -> exit status. Node 1 comes from waitpid on the root; the others
    /// from their terminal event (EXIT = 0, PROTOCOL_ERROR = 2).
    std::map<int, int> exit_codes;
    std::map<std::string, Verdict> verdicts;
    /// Raw diagnostic stream.
    std::string transcript;
    std::uint64_t stdout_bytes = 0;
    std::chrono::microseconds elapsed{0};
    /// From the end of the protocol (last IDENTIFY, or first SHUTDOWN_TX) to
    /// the moment the whole tree was gone.
    std::chrono::microseconds teardown{0};

    friend bool operator==(const RingReport&, const RingReport&) = default;

    [[nodiscard]] std::vector<LogEvent> node_events(int node) const;
    [[nodiscard]] std::vector<LogEvent> events_of(EventKind kind) const;
    [[nodiscard]] std::size_t count(EventKind kind) const;
    [[nodiscard]] bool all_passed() const;
    [[nodiscard]] int root_exit() const;
};

struct LaunchOptions {
    std::string cli_path;
    bool paper_format = false;
    /// Hard ceiling for the whole run; the process group is killed after it.
    std::chrono::milliseconds run_timeout{10000};
};

/// Command line that asks the cli for this spec and behavior.
std::vector<std::string> cli_arguments(const RingSpec& spec, const NodeBehavior& behavior,
                                       bool paper_format);

/// Runs the cli with arbitrary arguments (argv[0] excluded) in its own process
/// group and captures both output streams. Fills the generic verdicts:
/// teardown, tree_empty, stdout_silent, parse_total.
RingReport launch_args(const std::vector<std::string>& args, const LaunchOptions& options,
                       const RingSpec& spec = {}, const NodeBehavior& behavior = {});

/// launch_args for a scenario, plus the scenario verdicts (chain, token,
/// mutex, closure) and exit_status.
RingReport launch(const RingSpec& spec, const NodeBehavior& behavior,
                  const LaunchOptions& options);

/// Indices exactly {1..n}, distinct pids, ppid(i+1) == pid(i).
Verdict verify_chain(const RingReport& report);

/// TOKEN_TX hops 0..k*n-1 each exactly once; TOKEN_RX at hop h happens at
/// node (h+1) mod n + 1.
Verdict verify_token(const RingReport& report, std::uint32_t k);

/// CS events ordered by token hop strictly alternate ENTER/EXIT on the same
/// node, and every node enters once per revolution.
Verdict verify_mutex(const RingReport& report);

/// Every node's probe came back to it after exactly n links.
Verdict verify_closure(const RingReport& report);

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-delimited JSON: a header record, then one record per event.
void save_report(const RingReport& report, const std::filesystem::path& path);
RingReport load_report(const std::filesystem::path& path);

}  // namespace tokenring
