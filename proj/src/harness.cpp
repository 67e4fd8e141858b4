#include "tokenring/harness.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <iomanip>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tokenring/fd.hpp"

namespace tokenring {

namespace {

using clock = std::chrono::steady_clock;

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

std::string join(const std::vector<std::int64_t>& values) {
    std::string out;
    for (auto v : values) {
        if (!out.empty()) out += ',';
        out += std::to_string(v);
    }
    return out;
}

// Compat-format reap lines carry only the child's pid. The child's own
// IDENTIFY names its parent, which is the reaper.
void attribute_reaps(std::vector<LogEvent>& events) {
    for (auto& ev : events) {
        if (ev.kind != EventKind::child_reaped || ev.node != 0 || !ev.child) continue;
        for (const auto& id : events) {
            if (id.kind == EventKind::identify && id.pid == *ev.child && id.ppid) {
                ev.node = id.node - 1;
                ev.pid = *id.ppid;
                break;
            }
        }
    }
}

struct Capture {
    std::string transcript;
    std::vector<std::string> lines;
    std::vector<clock::time_point> arrivals;
    std::string pending;
    std::uint64_t stdout_bytes = 0;

    void take_stderr(const char* data, std::size_t size, clock::time_point now) {
        transcript.append(data, size);
        pending.append(data, size);
        std::size_t start = 0;
        for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1) {
            lines.emplace_back(pending.substr(start, nl - start));
            arrivals.push_back(now);
        }
        pending.erase(0, start);
    }
};

class ProcessGroupRun {
public:
    ProcessGroupRun(const std::vector<std::string>& argv, const LaunchOptions& options)
        : options_(options) {
        // Orphans of a broken run re-parent to us so they can be reaped.
        ::prctl(PR_SET_CHILD_SUBREAPER, 1);

        RawPipe out = make_pipe();
        RawPipe err = make_pipe();
        Fd devnull{::open("/dev/null", O_RDONLY | O_CLOEXEC)};
        if (!devnull) throw_errno("open /dev/null");

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);

        started_ = clock::now();
        pid_ = ::fork();
        if (pid_ < 0) throw_errno("fork");
        if (pid_ == 0) {
            ::setpgid(0, 0);
            ::dup2(devnull.get(), STDIN_FILENO);
            ::dup2(out.write_end.get(), STDOUT_FILENO);
            ::dup2(err.write_end.get(), STDERR_FILENO);
            ::signal(SIGPIPE, SIG_DFL);
            sigset_t none;
            ::sigemptyset(&none);
            ::sigprocmask(SIG_SETMASK, &none, nullptr);
            ::execv(cargv[0], cargv.data());
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        out_ = std::move(out.read_end);
        err_ = std::move(err.read_end);
    }

    ProcessGroupRun(const ProcessGroupRun&) = delete;
    ProcessGroupRun& operator=(const ProcessGroupRun&) = delete;

    void run(Capture& capture) {
        auto deadline = started_ + options_.run_timeout;
        std::array<char, 4096> buf{};
        while (out_ || err_) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
            if (left.count() <= 0) {
                timed_out_ = true;
                break;
            }
            std::array<pollfd, 2> fds{{{out_.get(), POLLIN, 0}, {err_.get(), POLLIN, 0}}};
            int r = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
            if (r < 0) {
                if (errno == EINTR) continue;
                throw_errno("poll");
            }
            auto now = clock::now();
            if (fds[0].revents) {
                ssize_t n = ::read(out_.get(), buf.data(), buf.size());
                if (n > 0) capture.stdout_bytes += static_cast<std::uint64_t>(n);
                else if (n == 0 || errno != EINTR) out_.reset();
            }
            if (fds[1].revents) {
                ssize_t n = ::read(err_.get(), buf.data(), buf.size());
                if (n > 0) capture.take_stderr(buf.data(), static_cast<std::size_t>(n), now);
                else if (n == 0 || errno != EINTR) err_.reset();
            }
        }
        if (!capture.pending.empty()) {
            capture.lines.push_back(std::move(capture.pending));
            capture.arrivals.push_back(clock::now());
            capture.pending.clear();
        }

        while (!timed_out_) {
            int status = 0;
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                root_status_ = status;
                break;
            }
            if (r < 0 && errno != EINTR) break;
            if (clock::now() >= deadline) {
                timed_out_ = true;
                break;
            }
            ::usleep(500);
        }
        if (timed_out_) {
            ::kill(-pid_, SIGKILL);
            int status = 0;
            if (::waitpid(pid_, &status, 0) == pid_) root_status_ = status;
        }
        finished_ = clock::now();

        tree_empty_ = ::kill(-pid_, 0) < 0 && errno == ESRCH;
        if (!tree_empty_) {
            ::kill(-pid_, SIGKILL);
            auto give_up = clock::now() + std::chrono::seconds(2);
            while (clock::now() < give_up) {
                pid_t r = ::waitpid(-pid_, nullptr, WNOHANG);
                if (r < 0 && errno == ECHILD) break;
                if (r == 0) ::usleep(1000);
            }
        }
    }

    [[nodiscard]] clock::time_point started() const { return started_; }
    [[nodiscard]] clock::time_point finished() const { return finished_; }
    [[nodiscard]] bool timed_out() const { return timed_out_; }
    [[nodiscard]] bool tree_empty() const { return tree_empty_; }
    [[nodiscard]] int root_status() const { return root_status_; }

private:
    const LaunchOptions& options_;
    pid_t pid_ = -1;
    Fd out_;
    Fd err_;
    clock::time_point started_;
    clock::time_point finished_;
    bool timed_out_ = false;
    bool tree_empty_ = false;
    int root_status_ = -1;
};

std::string format_seconds(std::chrono::milliseconds ms) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << static_cast<double>(ms.count()) / 1000.0;
    return out.str();
}

}  // namespace

std::vector<LogEvent> RingReport::node_events(int node) const {
    std::vector<LogEvent> out;
    for (const auto& ev : events)
        if (ev.node == node) out.push_back(ev);
    return out;
}

std::vector<LogEvent> RingReport::events_of(EventKind kind) const {
    std::vector<LogEvent> out;
    for (const auto& ev : events)
        if (ev.kind == kind) out.push_back(ev);
    return out;
}

std::size_t RingReport::count(EventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [kind](const LogEvent& e) { return e.kind == kind; }));
}

bool RingReport::all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second.pass; });
}

int RingReport::root_exit() const {
    auto it = exit_codes.find(1);
    return it == exit_codes.end() ? -1 : it->second;
}

std::vector<std::string> cli_arguments(const RingSpec& spec, const NodeBehavior& behavior,
                                       bool paper_format) {
    std::vector<std::string> args;
    if (paper_format) args.emplace_back("--paper-format");
    args.emplace_back("--max-payload");
    args.push_back(std::to_string(spec.max_payload));
    args.emplace_back("--timeout");
    args.push_back(format_seconds(spec.teardown_timeout));
    switch (behavior.scenario) {
        case Scenario::identify_only: args.emplace_back("identify"); break;
        case Scenario::circulate: args.emplace_back("token"); break;
        case Scenario::mutex: args.emplace_back("mutex"); break;
    }
    args.push_back(std::to_string(spec.n));
    if (behavior.scenario != Scenario::identify_only) {
        args.emplace_back("--laps");
        args.push_back(std::to_string(behavior.revolutions));
        if (behavior.probe) args.emplace_back("--probe");
    }
    if (behavior.scenario == Scenario::mutex && behavior.cs_hold.count() > 0) {
        args.emplace_back("--hold");
        args.push_back(std::to_string(behavior.cs_hold.count()));
    }
    return args;
}

RingReport launch_args(const std::vector<std::string>& args, const LaunchOptions& options,
                       const RingSpec& spec, const NodeBehavior& behavior) {
    std::vector<std::string> argv;
    argv.push_back(options.cli_path);
    argv.insert(argv.end(), args.begin(), args.end());

    Capture capture;
    ProcessGroupRun run(argv, options);
    run.run(capture);

    RingReport report;
    report.spec = spec;
    report.behavior = behavior;
    report.transcript = std::move(capture.transcript);
    report.stdout_bytes = capture.stdout_bytes;
    report.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(run.finished() - run.started());

    std::optional<clock::time_point> protocol_done;
    std::size_t identified = 0;
    for (std::size_t i = 0; i < capture.lines.size(); ++i) {
        auto ev = parse_event_line(capture.lines[i]);
        if (!ev) {
            report.residue.push_back(capture.lines[i]);
            continue;
        }
        if (behavior.scenario == Scenario::identify_only) {
            if (ev->kind == EventKind::identify && ++identified == static_cast<std::size_t>(spec.n))
                protocol_done = capture.arrivals[i];
        } else if (ev->kind == EventKind::shutdown_tx && !protocol_done) {
            protocol_done = capture.arrivals[i];
        }
        report.events.push_back(*ev);
    }
    attribute_reaps(report.events);

    report.exit_codes[1] = decode_status(run.root_status());
    for (const auto& ev : report.events) {
        if (ev.node <= 1) continue;
        if (ev.kind == EventKind::exit) report.exit_codes[static_cast<int>(ev.node)] = 0;
        if (ev.kind == EventKind::protocol_error)
            report.exit_codes[static_cast<int>(ev.node)] = kExitFailure;
    }

    auto teardown_from = protocol_done.value_or(run.started());
    report.teardown =
        std::chrono::duration_cast<std::chrono::microseconds>(run.finished() - teardown_from);

    Verdict teardown;
    if (run.timed_out()) {
        teardown = {false, "run exceeded " + std::to_string(options.run_timeout.count()) +
                               " ms; process group killed"};
    } else if (!run.tree_empty()) {
        teardown = {false, "processes remained after the root exited"};
    } else {
        teardown.pass = report.teardown <= spec.teardown_timeout;
        teardown.detail = "settled in " + std::to_string(report.teardown.count()) + " us (limit " +
                          std::to_string(spec.teardown_timeout.count()) + " ms)";
    }
    report.verdicts["teardown"] = teardown;
    report.verdicts["tree_empty"] = {run.tree_empty(), run.tree_empty() ? "" : "live processes found"};
    report.verdicts["stdout_silent"] = {report.stdout_bytes == 0,
                                        std::to_string(report.stdout_bytes) + " bytes on stdout"};
    report.verdicts["parse_total"] = {report.residue.empty(),
                                      std::to_string(report.residue.size()) + " unparsed lines"};
    return report;
}

RingReport launch(const RingSpec& spec, const NodeBehavior& behavior, const LaunchOptions& options) {
    RingSpec effective = spec;
    effective.revolutions = behavior.revolutions;
    RingReport report = launch_args(cli_arguments(effective, behavior, options.paper_format),
                                    options, effective, behavior);

    report.verdicts["exit_status"] = {report.root_exit() == kExitOk,
                                      "root exited with " + std::to_string(report.root_exit())};
    report.verdicts["chain"] = verify_chain(report);
    if (behavior.scenario != Scenario::identify_only)
        report.verdicts["token"] = verify_token(report, behavior.revolutions);
    if (behavior.scenario == Scenario::mutex) report.verdicts["mutex"] = verify_mutex(report);
    if (behavior.probe) report.verdicts["closure"] = verify_closure(report);
    return report;
}

Verdict verify_chain(const RingReport& report) {
    const int n = report.spec.n;
    auto ids = report.events_of(EventKind::identify);

    std::map<std::int64_t, std::vector<const LogEvent*>> by_index;
    for (const auto& ev : ids) by_index[ev.node].push_back(&ev);

    std::vector<std::int64_t> duplicated, missing, stray;
    for (const auto& [index, list] : by_index) {
        if (index < 1 || index > n) stray.push_back(index);
        if (list.size() > 1) duplicated.push_back(index);
    }
    for (int i = 1; i <= n; ++i)
        if (!by_index.contains(i)) missing.push_back(i);

    std::string detail;
    if (!duplicated.empty()) detail += "duplicated indices: " + join(duplicated) + "; ";
    if (!missing.empty()) detail += "missing indices: " + join(missing) + "; ";
    if (!stray.empty()) detail += "indices outside 1.." + std::to_string(n) + ": " + join(stray) + "; ";

    std::set<std::int64_t> pids;
    for (const auto& ev : ids) pids.insert(ev.pid);
    if (pids.size() != ids.size()) detail += "pids are not distinct; ";

    if (detail.empty()) {
        std::vector<std::int64_t> broken;
        for (int i = 1; i < n; ++i) {
            const LogEvent& parent = *by_index[i].front();
            const LogEvent& child = *by_index[i + 1].front();
            if (child.ppid != parent.pid) broken.push_back(i + 1);
        }
        if (!broken.empty()) detail += "ppid does not match predecessor pid at nodes: " + join(broken) + "; ";
    }
    if (!detail.empty()) {
        detail.resize(detail.size() - 2);
        return {false, detail};
    }
    return {true, std::to_string(n) + " nodes chained"};
}

Verdict verify_token(const RingReport& report, std::uint32_t k) {
    const std::int64_t n = report.spec.n;
    const std::int64_t total = std::int64_t{k} * n;
    std::vector<int> tx(static_cast<std::size_t>(total), 0);
    std::vector<int> rx(static_cast<std::size_t>(total), 0);
    std::vector<std::int64_t> outside, misplaced;

    for (const auto& ev : report.events) {
        if (ev.kind != EventKind::token_tx && ev.kind != EventKind::token_rx) continue;
        std::int64_t h = ev.hop.value_or(-1);
        if (h < 0 || h >= total) {
            outside.push_back(h);
            continue;
        }
        if (ev.kind == EventKind::token_tx) {
            ++tx[static_cast<std::size_t>(h)];
        } else {
            ++rx[static_cast<std::size_t>(h)];
            if (ev.node != (h + 1) % n + 1) misplaced.push_back(h);
        }
    }

    std::vector<std::int64_t> tx_missing, tx_dup, rx_missing, rx_dup;
    for (std::int64_t h = 0; h < total; ++h) {
        int t = tx[static_cast<std::size_t>(h)];
        int r = rx[static_cast<std::size_t>(h)];
        if (t == 0) tx_missing.push_back(h);
        if (t > 1) tx_dup.push_back(h);
        if (r == 0) rx_missing.push_back(h);
        if (r > 1) rx_dup.push_back(h);
    }

    std::string detail;
    if (!tx_missing.empty()) detail += "missing TX hops: " + join(tx_missing) + "; ";
    if (!tx_dup.empty()) detail += "duplicated TX hops: " + join(tx_dup) + "; ";
    if (!rx_missing.empty()) detail += "missing RX hops: " + join(rx_missing) + "; ";
    if (!rx_dup.empty()) detail += "duplicated RX hops: " + join(rx_dup) + "; ";
    if (!outside.empty()) detail += "hops outside 0.." + std::to_string(total - 1) + ": " + join(outside) + "; ";
    if (!misplaced.empty()) detail += "RX at the wrong node for hops: " + join(misplaced) + "; ";
    if (!detail.empty()) {
        detail.resize(detail.size() - 2);
        return {false, detail};
    }
    return {true, std::to_string(total) + " hops"};
}

Verdict verify_mutex(const RingReport& report) {
    const std::int64_t n = report.spec.n;
    const std::int64_t k = report.spec.revolutions;

    std::vector<LogEvent> cs;
    for (const auto& ev : report.events) {
        if (ev.kind != EventKind::cs_enter && ev.kind != EventKind::cs_exit) continue;
        if (!ev.hop) return {false, "critical-section event without hop at node " + std::to_string(ev.node)};
        cs.push_back(ev);
    }
    std::stable_sort(cs.begin(), cs.end(),
                     [](const LogEvent& a, const LogEvent& b) { return *a.hop < *b.hop; });

    std::map<std::int64_t, std::int64_t> entries;
    std::map<std::pair<std::int64_t, std::int64_t>, int> per_revolution;  // (revolution, node)
    const LogEvent* open = nullptr;
    for (const auto& ev : cs) {
        if (ev.kind == EventKind::cs_enter) {
            if (open) {
                return {false, "CS_ENTER by node " + std::to_string(ev.node) + " at hop " +
                                   std::to_string(*ev.hop) + " while node " + std::to_string(open->node) +
                                   " is inside since hop " + std::to_string(*open->hop)};
            }
            open = &ev;
            ++entries[ev.node];
            if (n > 0) ++per_revolution[{*ev.hop / n, ev.node}];
        } else {
            if (!open) {
                return {false, "CS_EXIT by node " + std::to_string(ev.node) + " at hop " +
                                   std::to_string(*ev.hop) + " without a matching CS_ENTER"};
            }
            if (open->node != ev.node || open->hop != ev.hop) {
                return {false, "CS_EXIT by node " + std::to_string(ev.node) + " at hop " +
                                   std::to_string(*ev.hop) + " does not close node " +
                                   std::to_string(open->node) + "'s section"};
            }
            open = nullptr;
        }
    }
    if (open) return {false, "node " + std::to_string(open->node) + " never left its critical section"};

    std::vector<std::int64_t> unfair;
    for (std::int64_t i = 1; i <= n; ++i) {
        if (entries[i] != k) unfair.push_back(i);
    }
    if (!unfair.empty()) {
        return {false, "nodes without exactly " + std::to_string(k) + " entries: " + join(unfair)};
    }
    for (std::int64_t r = 0; r < k; ++r) {
        for (std::int64_t i = 1; i <= n; ++i) {
            if (per_revolution[{r, i}] != 1) {
                return {false, "node " + std::to_string(i) + " did not enter exactly once in revolution " +
                                   std::to_string(r + 1)};
            }
        }
    }
    std::int64_t total = 0;
    for (const auto& [node, count] : entries) total += count;
    return {true, std::to_string(total) + " entries"};
}

Verdict verify_closure(const RingReport& report) {
    const std::int64_t n = report.spec.n;
    std::map<std::int64_t, int> delivered;
    std::vector<std::int64_t> wrong_length;
    for (const auto& ev : report.events_of(EventKind::data_delivered)) {
        ++delivered[ev.node];
        if (ev.hop.value_or(-1) != n) wrong_length.push_back(ev.node);
    }
    std::vector<std::int64_t> bad;
    for (std::int64_t i = 1; i <= n; ++i)
        if (delivered[i] != 1) bad.push_back(i);
    std::string detail;
    if (!bad.empty()) detail += "nodes without exactly one returned probe: " + join(bad) + "; ";
    if (!wrong_length.empty()) detail += "probes that did not travel " + std::to_string(n) + " links at nodes: " + join(wrong_length) + "; ";
    if (!detail.empty()) {
        detail.resize(detail.size() - 2);
        return {false, detail};
    }
    return {true, std::to_string(n) + " probes closed the ring"};
}

}  // namespace tokenring
