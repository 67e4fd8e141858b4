#include "tokenring/ring_core.hpp"

#include <cerrno>
#include <charconv>
#include <ctime>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace tokenring {

namespace {

// Points `slot` at the same open file as `raw`, then drops `raw` unless the
// kernel happened to hand out the slot number itself.
void rebind(Fd& raw, int slot) {
    if (raw.get() == slot) {
        ::fcntl(slot, F_SETFD, 0);  // slots must survive exec
        return;
    }
    if (::dup2(raw.get(), slot) < 0) {
        throw EndpointFailure(errno, std::generic_category(),
                              "dup2 onto descriptor " + std::to_string(slot));
    }
}

void release_raw(Fd& raw) {
    if (raw.get() == STDIN_FILENO || raw.get() == STDOUT_FILENO)
        raw.release();
    else
        raw.reset();
}

}  // namespace

RingSpec validate_spec(std::span<const std::string> args) {
    std::string program = args.empty() ? std::string{"ring"} : args.front();
    if (args.size() != 2) {
        throw UsageError(program, "expected exactly one node count argument");
    }
    const std::string& text = args[1];
    long long count = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), count);
    if (text.empty() || ptr != text.data() + text.size()) {
        throw UsageError(program, "node count '" + text + "' is not a decimal integer");
    }
    if (ec == std::errc::result_out_of_range) {
        if (text.front() == '-') throw UsageError(program, "node count must be at least 1");
        throw ResourceError("node count " + text + " exceeds the limit of " +
                            std::to_string(kMaxRingSize));
    }
    if (count <= 0) throw UsageError(program, "node count must be at least 1");
    if (count > kMaxRingSize) {
        throw ResourceError("node count " + text + " exceeds the limit of " +
                            std::to_string(kMaxRingSize));
    }
    RingSpec spec;
    spec.n = static_cast<int>(count);
    return spec;
}

RawPipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) < 0) {
        throw EndpointFailure(errno, std::generic_category(), "pipe");
    }
    return RawPipe{Fd{fds[0]}, Fd{fds[1]}};
}

NodeContext make_self_loop() {
    RawPipe pipe = make_pipe();
    rebind(pipe.read_end, STDIN_FILENO);
    rebind(pipe.write_end, STDOUT_FILENO);
    release_raw(pipe.read_end);
    release_raw(pipe.write_end);

    NodeContext ctx;
    ctx.index = 1;
    ctx.n = 1;
    ctx.self_id = ::getpid();
    ctx.parent_id = ::getppid();
    ctx.ring_in = Fd{STDIN_FILENO};
    ctx.ring_out = Fd{STDOUT_FILENO};
    return ctx;
}

SpliceOutcome splice_in_successor(NodeContext ctx, ForkFunction spawn) {
    RawPipe pipe = make_pipe();
    pid_t child = spawn ? spawn() : ::fork();
    if (child < 0) {
        throw SpawnFailure(ctx.index, errno,
                           "spawning successor of node " + std::to_string(ctx.index));
    }

    if (child > 0) {
        rebind(pipe.write_end, ctx.ring_out.get());
        release_raw(pipe.read_end);
        release_raw(pipe.write_end);
        ctx.child_id = child;
        return {SpliceRole::parent, std::move(ctx)};
    }

    rebind(pipe.read_end, ctx.ring_in.get());
    release_raw(pipe.read_end);
    release_raw(pipe.write_end);
    ctx.index += 1;
    ctx.parent_id = ctx.self_id;
    ctx.self_id = ::getpid();
    ctx.child_id.reset();
    return {SpliceRole::child, std::move(ctx)};
}

NodeContext build_ring(const RingSpec& spec, ForkFunction spawn) {
    NodeContext ctx = make_self_loop();
    ctx.n = spec.n;
    for (int i = 1; i < spec.n; ++i) {
        SpliceOutcome outcome = splice_in_successor(std::move(ctx), spawn);
        ctx = std::move(outcome.ctx);
        if (outcome.role == SpliceRole::parent) break;
    }
    return ctx;
}

LogEvent identify(const NodeContext& ctx, const DiagnosticSink& sink) {
    LogEvent ev;
    ev.kind = EventKind::identify;
    ev.node = ctx.index;
    ev.pid = ctx.self_id;
    ev.ppid = ctx.parent_id;
    sink.emit(ev);
    return ev;
}

bool ReapRecord::clean() const noexcept {
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

ReapResult reap_children(const NodeContext& ctx, const DiagnosticSink& sink,
                         std::chrono::milliseconds timeout) {
    using clock = std::chrono::steady_clock;

    // SIGCHLD stays pending while blocked, so sigtimedwait can sleep until a
    // child changes state without racing against waitpid.
    sigset_t chld;
    sigset_t saved;
    ::sigemptyset(&chld);
    ::sigaddset(&chld, SIGCHLD);
    ::sigprocmask(SIG_BLOCK, &chld, &saved);

    ReapResult result;
    auto deadline = clock::now() + timeout;
    bool killed = false;

    for (;;) {
        int status = 0;
        pid_t pid = ::waitpid(-1, &status, WNOHANG);
        if (pid > 0) {
            result.records.push_back({pid, status});
            LogEvent ev;
            ev.kind = EventKind::child_reaped;
            ev.node = ctx.index;
            ev.pid = ctx.self_id;
            ev.child = pid;
            sink.emit(ev);
            continue;
        }
        if (pid < 0) {
            if (errno == EINTR) continue;
            break;  // ECHILD: nothing left
        }

        auto remaining = deadline - clock::now();
        if (remaining <= clock::duration::zero()) {
            if (killed || !ctx.child_id) break;
            ::kill(*ctx.child_id, SIGKILL);
            killed = true;
            result.timed_out = true;
            deadline = clock::now() + timeout;
            continue;
        }
        auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(remaining).count();
        timespec ts{static_cast<time_t>(ns / 1'000'000'000), static_cast<long>(ns % 1'000'000'000)};
        ::sigtimedwait(&chld, nullptr, &ts);
    }

    ::sigprocmask(SIG_SETMASK, &saved, nullptr);
    return result;
}

}  // namespace tokenring
