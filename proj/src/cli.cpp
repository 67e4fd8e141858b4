#include "tokenring/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include <signal.h>
#include <unistd.h>

#include "CLI11.hpp"

namespace tokenring {

RingSpec CliInvocation::spec() const {
    RingSpec s;
    s.n = n;
    s.revolutions = subcommand == Scenario::identify_only ? 0 : laps;
    s.max_payload = max_payload;
    s.teardown_timeout = timeout;
    return s;
}

NodeBehavior CliInvocation::behavior() const {
    NodeBehavior b;
    b.scenario = subcommand;
    b.revolutions = subcommand == Scenario::identify_only ? 0 : laps;
    b.cs_hold = hold;
    b.probe = probe;
    return b;
}

std::string usage_text(const std::string& program) {
    return "usage: " + program +
           " [--paper-format] [--max-payload BYTES] [--timeout SECS] "
           "{identify|token|mutex} NPROCS [--laps K] [--hold MS] [--probe]";
}

CliInvocation parse_invocation(std::span<const std::string> args) {
    CliInvocation inv;
    if (!args.empty()) inv.program = args.front();

    CLI::App app{"Unidirectional process ring over pipes", inv.program};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::size_t max_payload = kMaxPayloadLimit;
    double timeout_secs = static_cast<double>(kDefaultTeardownTimeout.count()) / 1000.0;
    std::string bare_count;
    app.add_flag("--paper-format", inv.paper_format, "Print identify and reap lines in the classic demo wording");
    app.add_option("--max-payload", max_payload, "Largest accepted frame payload in bytes (<= 1024)");
    app.add_option("--timeout", timeout_secs, "Teardown timeout in seconds");
    app.add_option("nprocs", bare_count, "Node count; same as 'identify NPROCS'");

    std::string count;
    std::uint32_t laps = 1;
    std::int64_t hold_ms = 0;
    bool probe = false;

    auto* identify_cmd = app.add_subcommand("identify", "Build the ring, identify every node, reap, exit");
    identify_cmd->add_option("nprocs", count, "Number of processes in the ring");

    auto* token_cmd = app.add_subcommand("token", "Circulate a token for K laps, then shut down");
    token_cmd->add_option("nprocs", count, "Number of processes in the ring");
    token_cmd->add_option("--laps", laps, "Token revolutions (default 1)");
    token_cmd->add_flag("--probe", probe, "Send a DATA probe around the ring from every node first");

    auto* mutex_cmd = app.add_subcommand("mutex", "Token-guarded critical sections for K laps");
    mutex_cmd->add_option("nprocs", count, "Number of processes in the ring");
    mutex_cmd->add_option("--laps", laps, "Token revolutions (default 1)");
    mutex_cmd->add_option("--hold", hold_ms, "Milliseconds spent inside each critical section");
    mutex_cmd->add_flag("--probe", probe, "Send a DATA probe around the ring from every node first");

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());  // CLI11 consumes from the back
    try {
        app.parse(rest);
    } catch (const CLI::Success&) {
        throw HelpRequested(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(inv.program, e.what());
    }

    const bool sub = identify_cmd->parsed() || token_cmd->parsed() || mutex_cmd->parsed();
    if (sub && !bare_count.empty()) throw UsageError(inv.program, "unexpected argument " + bare_count);
    if (token_cmd->parsed()) inv.subcommand = Scenario::circulate;
    if (mutex_cmd->parsed()) inv.subcommand = Scenario::mutex;
    const std::string& chosen = sub ? count : bare_count;
    std::vector<std::string> count_args{inv.program};
    if (!chosen.empty()) count_args.push_back(chosen);
    RingSpec spec = validate_spec(count_args);
    inv.n = spec.n;

    if (laps < 1) throw UsageError(inv.program, "--laps must be at least 1");
    if (std::uint64_t{laps} * std::uint64_t(inv.n) > std::numeric_limits<std::uint32_t>::max()) {
        throw UsageError(inv.program, "--laps times NPROCS must fit in a 32-bit hop counter");
    }
    inv.laps = laps;
    if (hold_ms < 0) throw UsageError(inv.program, "--hold must not be negative");
    inv.hold = std::chrono::milliseconds{hold_ms};
    inv.probe = probe;
    if (max_payload > kMaxPayloadLimit) {
        throw UsageError(inv.program, "--max-payload must not exceed " + std::to_string(kMaxPayloadLimit));
    }
    inv.max_payload = max_payload;
    if (!(timeout_secs > 0) || !std::isfinite(timeout_secs)) {
        throw UsageError(inv.program, "--timeout must be positive");
    }
    inv.timeout = std::chrono::milliseconds{static_cast<std::int64_t>(std::llround(timeout_secs * 1000.0))};
    return inv;
}

int run_cli(std::span<const std::string> args) {
    const std::string program = args.empty() ? std::string{"ring"} : args.front();
    const bool paper_format =
        std::find(args.begin(), args.end(), std::string{"--paper-format"}) != args.end();
    DiagnosticSink early(STDERR_FILENO, paper_format);

    CliInvocation inv;
    try {
        inv = parse_invocation(args);
    } catch (const UsageError& e) {
        if (paper_format) {
            early.note(e.paper_usage());
        } else {
            early.note(program + ": " + e.what());
            early.note(usage_text(program));
        }
        return kExitUsage;
    } catch (const ResourceError& e) {
        early.note(program + ": " + e.what());
        return kExitFailure;
    } catch (const HelpRequested& e) {
        std::cout << e.what();
        return kExitOk;
    }

    // A vanished successor must surface as EPIPE, not kill the node.
    ::signal(SIGPIPE, SIG_IGN);

    DiagnosticSink sink(STDERR_FILENO, inv.paper_format);
    RingSpec spec = inv.spec();
    NodeBehavior behavior = inv.behavior();
    NodeContext ctx;
    try {
        ctx = build_ring(spec);
    } catch (const SpawnFailure& e) {
        sink.note(program + ": node " + std::to_string(e.index()) + ": " + e.what());
        LogEvent ev;
        ev.kind = EventKind::protocol_error;
        ev.node = e.index();
        ev.pid = ::getpid();
        sink.emit(ev);
        return kExitFailure;
    } catch (const std::system_error& e) {
        sink.note(program + ": " + e.what());
        return kExitFailure;
    }
    return run_node(ctx, behavior, spec, sink);
}

}  // namespace tokenring
