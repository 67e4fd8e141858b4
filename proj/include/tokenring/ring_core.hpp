#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <sys/types.h>

#include "tokenring/events.hpp"
#include "tokenring/fd.hpp"
#include "tokenring/framing.hpp"

namespace tokenring {

inline constexpr int kMaxRingSize = 512;
inline constexpr std::chrono::milliseconds kDefaultTeardownTimeout{2000};

/// Validated run parameters.
struct RingSpec {
    int n = 1;
    std::uint32_t revolutions = 0;
    std::size_t max_payload = kMaxPayloadLimit;
    std::chrono::milliseconds teardown_timeout = kDefaultTeardownTimeout;

    friend bool operator==(const RingSpec&, const RingSpec&) = default;
};

/// Bad command-line count. The CLI reports it and exits with status 1.
class UsageError : public std::invalid_argument {
public:
    UsageError(std::string program, const std::string& reason)
        : std::invalid_argument(reason), program_(std::move(program)) {}
    [[nodiscard]] const std::string& program() const noexcept { return program_; }
    /// "Utilizare: <program> nprocs", the demo program's usage line.
    [[nodiscard]] std::string paper_usage() const { return "Utilizare: " + program_ + " nprocs"; }

private:
    std::string program_;
};

/// Request exceeds what the ring is willing to allocate (more than
/// kMaxRingSize processes).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// pipe(2) or dup2(2) failed while wiring the ring.
class EndpointFailure : public std::system_error {
public:
    using std::system_error::system_error;
};

/// fork(2) failed during a splice. index() is the node that tried to spawn.
class SpawnFailure : public std::system_error {
public:
    SpawnFailure(int index, int error, const std::string& what)
        : std::system_error(error, std::generic_category(), what), index_(index) {}
    [[nodiscard]] int index() const noexcept { return index_; }

private:
    int index_;
};

/// Parses `<program> <count>`. Only a plain decimal count in [1, kMaxRingSize]
/// is accepted; counts above the limit raise ResourceError, everything else
/// UsageError.
RingSpec validate_spec(std::span<const std::string> args);

/// Raw pipe pair before rebinding.
struct RawPipe {
    Fd read_end;
    Fd write_end;
};

RawPipe make_pipe();

/// One process's place in the ring. ring_in and ring_out occupy the
/// standard input and output slots once construction is done.
struct NodeContext {
    int index = 1;
    int n = 1;
    pid_t self_id = 0;
    pid_t parent_id = 0;
    /// Direct child created by this node's splice, if any.
    std::optional<pid_t> child_id;
    Fd ring_in;
    Fd ring_out;

    [[nodiscard]] bool is_origin() const noexcept { return index == 1; }
};

/// Connects the calling process's standard output to its own standard
/// input through a fresh pipe and releases the raw pipe descriptors.
NodeContext make_self_loop();

using ForkFunction = pid_t (*)();

enum class SpliceRole { parent, child };

struct SpliceOutcome {
    SpliceRole role;
    NodeContext ctx;
};

/// Inserts a new process after `ctx`. The parent's ring_out is rebound to
/// the new pipe's write end; the child's ring_in to its read end. `spawn`
/// defaults to fork(2) and exists so tests can simulate spawn failure.
SpliceOutcome splice_in_successor(NodeContext ctx, ForkFunction spawn = nullptr);

/// Self-loop followed by n-1 splices. Returns in every process of the ring
/// with that process's own context; the caller that started it gets index 1.
NodeContext build_ring(const RingSpec& spec, ForkFunction spawn = nullptr);

/// Emits and returns this node's IDENTIFY event. Never touches ring_out.
LogEvent identify(const NodeContext& ctx, const DiagnosticSink& sink);

struct ReapRecord {
    pid_t child_id = 0;
    /// Raw wait status as returned by waitpid(2).
    int status = 0;

    [[nodiscard]] bool clean() const noexcept;
};

struct ReapResult {
    std::vector<ReapRecord> records;
    /// Set when a child had to be killed after the timeout expired.
    bool timed_out = false;
};

/// Waits for every child of the calling process, like a wait(2) loop until
/// ECHILD, emitting CHILD_REAPED per child. A child still running after
/// `timeout` is killed and still reaped.
ReapResult reap_children(const NodeContext& ctx, const DiagnosticSink& sink,
                         std::chrono::milliseconds timeout = kDefaultTeardownTimeout);

}  // namespace tokenring
