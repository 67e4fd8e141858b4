#include "tokenring/events.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <utility>

#include <unistd.h>

namespace tokenring {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 12> kNames{{
    {EventKind::identify, "IDENTIFY"},
    {EventKind::token_rx, "TOKEN_RX"},
    {EventKind::token_tx, "TOKEN_TX"},
    {EventKind::data_tx, "DATA_TX"},
    {EventKind::data_delivered, "DATA_DELIVERED"},
    {EventKind::cs_enter, "CS_ENTER"},
    {EventKind::cs_exit, "CS_EXIT"},
    {EventKind::shutdown_rx, "SHUTDOWN_RX"},
    {EventKind::shutdown_tx, "SHUTDOWN_TX"},
    {EventKind::child_reaped, "CHILD_REAPED"},
    {EventKind::protocol_error, "PROTOCOL_ERROR"},
    {EventKind::exit, "EXIT"},
}};

constexpr std::string_view kPaperIdentifyPrefix = "Procesul[";
constexpr std::string_view kPaperReapPrefix = "Inca un copil mort PID = ";

std::optional<std::int64_t> parse_int(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

void append_field(std::string& out, std::string_view key, std::int64_t value) {
    out += ' ';
    out += key;
    out += '=';
    out += std::to_string(value);
}

// Consumes `prefix` from the front of `text`.
bool consume(std::string_view& text, std::string_view prefix) {
    if (!text.starts_with(prefix)) return false;
    text.remove_prefix(prefix.size());
    return true;
}

// Consumes a decimal integer terminated by `terminator` (or end of text if
// the terminator is empty).
std::optional<std::int64_t> consume_int(std::string_view& text, std::string_view terminator) {
    std::size_t end = terminator.empty() ? text.size() : text.find(terminator);
    if (end == std::string_view::npos) return std::nullopt;
    auto value = parse_int(text.substr(0, end));
    if (!value) return std::nullopt;
    text.remove_prefix(end + terminator.size());
    return value;
}

std::optional<LogEvent> parse_paper_line(std::string_view line) {
    LogEvent ev;
    if (consume(line, kPaperIdentifyPrefix)) {
        ev.kind = EventKind::identify;
        auto node = consume_int(line, "], ProcessID = ");
        if (!node) return std::nullopt;
        auto pid = consume_int(line, ", ParentID = ");
        if (!pid) return std::nullopt;
        auto ppid = consume_int(line, "");
        if (!ppid) return std::nullopt;
        ev.node = *node;
        ev.pid = *pid;
        ev.ppid = *ppid;
        return ev;
    }
    if (consume(line, kPaperReapPrefix)) {
        ev.kind = EventKind::child_reaped;
        auto child = consume_int(line, ".");
        if (!child || !line.empty()) return std::nullopt;
        ev.child = *child;
        return ev;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kNames)
        if (k == kind) return name;
    return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

bool requires_hop(EventKind kind) {
    switch (kind) {
        case EventKind::token_rx:
        case EventKind::token_tx:
        case EventKind::data_tx:
        case EventKind::shutdown_rx:
        case EventKind::shutdown_tx:
            return true;
        default:
            return false;
    }
}

std::string format_event(const LogEvent& event) {
    std::string out = "RING ";
    out += to_string(event.kind);
    append_field(out, "node", event.node);
    append_field(out, "pid", event.pid);
    if (event.ppid) append_field(out, "ppid", *event.ppid);
    if (event.hop) append_field(out, "hop", *event.hop);
    if (event.ttl) append_field(out, "ttl", *event.ttl);
    if (event.child) append_field(out, "child", *event.child);
    return out;
}

std::optional<std::string> format_paper_event(const LogEvent& event) {
    if (event.kind == EventKind::identify) {
        return std::string{kPaperIdentifyPrefix} + std::to_string(event.node) +
               "], ProcessID = " + std::to_string(event.pid) +
               ", ParentID = " + std::to_string(event.ppid.value_or(0));
    }
    if (event.kind == EventKind::child_reaped) {
        return std::string{kPaperReapPrefix} + std::to_string(event.child.value_or(0)) + ".";
    }
    return std::nullopt;
}

std::optional<LogEvent> parse_event_line(std::string_view line) {
    if (!line.starts_with("RING ")) return parse_paper_line(line);
    line.remove_prefix(5);

    std::size_t space = line.find(' ');
    if (space == std::string_view::npos) return std::nullopt;
    auto kind = event_kind_from_string(line.substr(0, space));
    if (!kind) return std::nullopt;
    line.remove_prefix(space + 1);

    LogEvent ev;
    ev.kind = *kind;

    static constexpr std::array<std::string_view, 6> kOrder{"node", "pid", "ppid",
                                                            "hop",  "ttl", "child"};
    std::size_t next = 0;  // index into kOrder of the earliest acceptable key
    bool have_node = false;
    bool have_pid = false;
    while (!line.empty()) {
        std::size_t end = line.find(' ');
        std::string_view field = line.substr(0, end);
        line = end == std::string_view::npos ? std::string_view{} : line.substr(end + 1);
        if (end != std::string_view::npos && line.empty()) return std::nullopt;  // trailing space

        std::size_t eq = field.find('=');
        if (eq == std::string_view::npos) return std::nullopt;
        std::string_view key = field.substr(0, eq);
        auto value = parse_int(field.substr(eq + 1));
        if (!value) return std::nullopt;

        std::size_t slot = next;
        while (slot < kOrder.size() && kOrder[slot] != key) ++slot;
        if (slot == kOrder.size()) return std::nullopt;  // unknown, repeated or out of order
        // node and pid are mandatory and lead
        if (slot >= 2 && !(have_node && have_pid)) return std::nullopt;
        next = slot + 1;

        switch (slot) {
            case 0: ev.node = *value; have_node = true; break;
            case 1: ev.pid = *value; have_pid = true; break;
            case 2: ev.ppid = *value; break;
            case 3: ev.hop = *value; break;
            case 4: ev.ttl = *value; break;
            case 5: ev.child = *value; break;
        }
    }
    if (!have_node || !have_pid) return std::nullopt;
    if (requires_hop(ev.kind) && !ev.hop) return std::nullopt;
    return ev;
}

void DiagnosticSink::emit(const LogEvent& event) const {
    if (paper_format_) {
        if (auto line = format_paper_event(event)) {
            write_line(std::move(*line));
            return;
        }
    }
    write_line(format_event(event));
}

void DiagnosticSink::note(std::string_view text) const {
    write_line(std::string{text});
}

void DiagnosticSink::write_line(std::string line) const {
    line += '\n';
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            return;  // diagnostics are best effort
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

}  // namespace tokenring
