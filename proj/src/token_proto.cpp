#include "tokenring/token_proto.hpp"

#include <stdexcept>
#include <string>
#include <thread>
#include <variant>

namespace tokenring {

namespace {

LogEvent make_event(EventKind kind, const NodeContext& ctx) {
    LogEvent ev;
    ev.kind = kind;
    ev.node = ctx.index;
    ev.pid = ctx.self_id;
    return ev;
}

EventKind tx_kind(FrameKind kind) {
    switch (kind) {
        case FrameKind::token: return EventKind::token_tx;
        case FrameKind::data: return EventKind::data_tx;
        case FrameKind::shutdown: return EventKind::shutdown_tx;
    }
    return EventKind::token_tx;
}

void send(const NodeContext& ctx, const Frame& frame, const DiagnosticSink& sink) {
    write_frame(ctx.ring_out.get(), frame);
    LogEvent ev = make_event(tx_kind(frame.kind), ctx);
    ev.hop = frame.hop_count;
    if (frame.kind != FrameKind::token) ev.ttl = frame.ttl;
    sink.emit(ev);
}

std::vector<std::uint8_t> index_payload(int index) {
    auto v = static_cast<std::uint32_t>(index);
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
            static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

class NodeLoop {
public:
    NodeLoop(NodeContext& ctx, const NodeBehavior& behavior, const RingSpec& spec,
             const DiagnosticSink& sink)
        : ctx_(ctx), behavior_(behavior), spec_(spec), sink_(sink) {}

    int run() {
        try {
            if (ctx_.is_origin()) {
                if (behavior_.probe)
                    inject_probe(ctx_, sink_);
                else
                    inject_token(ctx_, sink_);
            }
            FdSource source(ctx_.ring_in.get());
            for (;;) {
                DecodeResult decoded = decode_frame(source, spec_.max_payload);
                if (auto* bad = std::get_if<MalformedFrame>(&decoded))
                    return fail("malformed frame: " + bad->reason);
                if (std::holds_alternative<EndOfStream>(decoded)) break;
                if (!handle(std::get<Frame>(decoded))) break;
            }
        } catch (const std::system_error& e) {
            return fail(e.what());
        } catch (const ProtocolViolation& e) {
            return fail(e.what());
        }
        return finish(false);
    }

private:
    struct ProtocolViolation : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    // Returns false once this node's part in the run is over.
    bool handle(const Frame& frame) {
        switch (frame.kind) {
            case FrameKind::token: on_token(frame); return true;
            case FrameKind::data: on_data(frame); return true;
            case FrameKind::shutdown: on_shutdown(frame); return false;
        }
        return true;
    }

    void on_token(const Frame& frame) {
        LogEvent rx = make_event(EventKind::token_rx, ctx_);
        rx.hop = frame.hop_count;
        sink_.emit(rx);
        state_.holds_token = true;

        if (behavior_.scenario == Scenario::mutex) {
            LogEvent enter = make_event(EventKind::cs_enter, ctx_);
            enter.hop = frame.hop_count;
            sink_.emit(enter);
            ++state_.entries_made;
            if (behavior_.cs_hold.count() > 0) std::this_thread::sleep_for(behavior_.cs_hold);
            LogEvent exit = make_event(EventKind::cs_exit, ctx_);
            exit.hop = frame.hop_count;
            sink_.emit(exit);
        }

        std::uint64_t total = std::uint64_t{behavior_.revolutions} * std::uint64_t(ctx_.n);
        state_.holds_token = false;
        if (ctx_.is_origin() && traversals(frame) >= total) {
            initiate_shutdown(ctx_, sink_);
            return;
        }
        forward(ctx_, frame, sink_);
    }

    void on_data(const Frame& frame) {
        if (traversals(frame) >= frame.ttl) {
            LogEvent ev = make_event(EventKind::data_delivered, ctx_);
            ev.hop = static_cast<std::int64_t>(traversals(frame));
            ev.ttl = frame.ttl;
            sink_.emit(ev);
            if (behavior_.probe && frame.payload != index_payload(ctx_.index)) {
                throw ProtocolViolation("probe delivered to node " + std::to_string(ctx_.index) +
                                        " was not injected there");
            }
        } else {
            forward(ctx_, frame, sink_);
        }

        if (!behavior_.probe) return;
        if (ctx_.is_origin()) {
            if (++probes_seen_ == ctx_.n) inject_token(ctx_, sink_);
        } else if (!probe_sent_) {
            probe_sent_ = true;
            inject_probe(ctx_, sink_);
        }
    }

    void on_shutdown(const Frame& frame) {
        LogEvent rx = make_event(EventKind::shutdown_rx, ctx_);
        rx.hop = frame.hop_count;
        rx.ttl = frame.ttl;
        sink_.emit(rx);
        if (frame.ttl > 1) {
            Frame next = frame;
            next.ttl -= 1;
            forward(ctx_, next, sink_);
        }
    }

    int fail(const std::string& reason) {
        sink_.note("ring: node " + std::to_string(ctx_.index) + ": " + reason);
        return finish(true);
    }

    int finish(bool failed) {
        ctx_.ring_out.reset();
        ctx_.ring_in.reset();
        ReapResult reaped = reap_children(ctx_, sink_, spec_.teardown_timeout);
        if (reaped.timed_out) failed = true;
        for (const auto& r : reaped.records)
            if (!r.clean()) failed = true;
        sink_.emit(make_event(failed ? EventKind::protocol_error : EventKind::exit, ctx_));
        return failed ? kExitFailure : kExitOk;
    }

    NodeContext& ctx_;
    const NodeBehavior& behavior_;
    const RingSpec& spec_;
    const DiagnosticSink& sink_;
    TokenState state_;
    int probes_seen_ = 0;
    bool probe_sent_ = false;
};

}  // namespace

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::identify_only: return "IDENTIFY_ONLY";
        case Scenario::circulate: return "CIRCULATE";
        case Scenario::mutex: return "MUTEX";
    }
    return "?";
}

std::optional<Scenario> scenario_from_string(std::string_view name) {
    if (name == "IDENTIFY_ONLY") return Scenario::identify_only;
    if (name == "CIRCULATE") return Scenario::circulate;
    if (name == "MUTEX") return Scenario::mutex;
    return std::nullopt;
}

void inject_token(const NodeContext& ctx, const DiagnosticSink& sink) {
    send(ctx, Frame{FrameKind::token, 0, 0, {}}, sink);
}

Frame forward(const NodeContext& ctx, const Frame& frame, const DiagnosticSink& sink) {
    Frame next = frame;
    next.hop_count += 1;
    send(ctx, next, sink);
    return next;
}

void initiate_shutdown(const NodeContext& ctx, const DiagnosticSink& sink) {
    send(ctx, Frame{FrameKind::shutdown, 0, static_cast<std::uint32_t>(ctx.n), {}}, sink);
}

void inject_probe(const NodeContext& ctx, const DiagnosticSink& sink) {
    send(ctx, Frame{FrameKind::data, 0, static_cast<std::uint32_t>(ctx.n), index_payload(ctx.index)},
         sink);
}

int run_node(NodeContext& ctx, const NodeBehavior& behavior, const RingSpec& spec,
             const DiagnosticSink& sink) {
    if (behavior.scenario == Scenario::identify_only) {
        // Same order as the classic demo: wait for the subtree, then speak.
        ReapResult reaped = reap_children(ctx, sink, spec.teardown_timeout);
        identify(ctx, sink);
        bool failed = reaped.timed_out;
        for (const auto& r : reaped.records)
            if (!r.clean()) failed = true;
        LogEvent ev;
        ev.kind = failed ? EventKind::protocol_error : EventKind::exit;
        ev.node = ctx.index;
        ev.pid = ctx.self_id;
        ctx.ring_out.reset();
        ctx.ring_in.reset();
        sink.emit(ev);
        return failed ? kExitFailure : kExitOk;
    }
    if (behavior.revolutions == 0) {
        throw std::invalid_argument("token scenarios need at least one revolution");
    }
    identify(ctx, sink);
    return NodeLoop(ctx, behavior, spec, sink).run();
}

}  // namespace tokenring
