#pragma once

// Diagnostic-stream event records.
//
// Structured grammar, one event per line:
//
//   RING <EVENT> node=<int> pid=<int>[ ppid=<int>][ hop=<int>][ ttl=<int>][ child=<int>]
//
// Optional fields appear only in that order. With the compatibility format
// enabled, IDENTIFY and CHILD_REAPED are rendered in the original demo
// program's wording instead:
//
//   Procesul[<node>], ProcessID = <pid>, ParentID = <ppid>
//   Inca un copil mort PID = <child>.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tokenring {

enum class EventKind {
    identify,
    token_rx,
    token_tx,
    data_tx,
    data_delivered,
    cs_enter,
    cs_exit,
    shutdown_rx,
    shutdown_tx,
    child_reaped,
    protocol_error,
    exit,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

/// True for the *_RX / *_TX kinds, which must carry a hop value.
bool requires_hop(EventKind kind);

struct LogEvent {
    EventKind kind = EventKind::identify;
    /// Ring index. 0 only for compat-format reap lines not yet attributed.
    std::int64_t node = 0;
    std::int64_t pid = 0;
    std::optional<std::int64_t> ppid;
    std::optional<std::int64_t> hop;
    std::optional<std::int64_t> ttl;
    std::optional<std::int64_t> child;

    friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

/// Structured grammar line, without the trailing newline.
std::string format_event(const LogEvent& event);

/// Compat rendering for IDENTIFY and CHILD_REAPED; std::nullopt for any
/// other kind.
std::optional<std::string> format_paper_event(const LogEvent& event);

/// Parses one line (newline already stripped) in either the structured
/// grammar or the compat wording. Compat reap lines yield node = pid = 0.
std::optional<LogEvent> parse_event_line(std::string_view line);

/// Writes events to a descriptor, one write(2) per line so lines from
/// different processes sharing the descriptor never interleave.
class DiagnosticSink {
public:
    explicit DiagnosticSink(int fd, bool paper_format = false) noexcept
        : fd_(fd), paper_format_(paper_format) {}

    void emit(const LogEvent& event) const;
    /// Free-form line for humans; the harness keeps these as residue.
    void note(std::string_view text) const;

    [[nodiscard]] bool paper_format() const noexcept { return paper_format_; }

private:
    void write_line(std::string line) const;

    int fd_;
    bool paper_format_;
};

}  // namespace tokenring
