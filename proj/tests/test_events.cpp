#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include <unistd.h>

#include "tokenring/events.hpp"

using namespace tokenring;

TEST_CASE("structured lines follow the fixed field order") {
    LogEvent id{EventKind::identify, 2, 1234, 1230, {}, {}, {}};
    CHECK(format_event(id) == "RING IDENTIFY node=2 pid=1234 ppid=1230");

    LogEvent shut{EventKind::shutdown_tx, 3, 77, {}, 2, 1, {}};
    CHECK(format_event(shut) == "RING SHUTDOWN_TX node=3 pid=77 hop=2 ttl=1");

    LogEvent reap{EventKind::child_reaped, 1, 10, {}, {}, {}, 11};
    CHECK(format_event(reap) == "RING CHILD_REAPED node=1 pid=10 child=11");
}

TEST_CASE("paper wording for identify and reap") {
    LogEvent id{EventKind::identify, 2, 1234, 1230, {}, {}, {}};
    CHECK(format_paper_event(id) == "Procesul[2], ProcessID = 1234, ParentID = 1230");

    LogEvent reap{EventKind::child_reaped, 1, 1230, {}, {}, {}, 1235};
    CHECK(format_paper_event(reap) == "Inca un copil mort PID = 1235.");

    LogEvent tx{EventKind::token_tx, 1, 1, {}, 0, {}, {}};
    CHECK_FALSE(format_paper_event(tx).has_value());
}

TEST_CASE("parse inverts format for every kind") {
    for (int k = 0; k <= static_cast<int>(EventKind::exit); ++k) {
        LogEvent ev;
        ev.kind = static_cast<EventKind>(k);
        ev.node = 5;
        ev.pid = 4242;
        if (ev.kind == EventKind::identify) ev.ppid = 4241;
        if (requires_hop(ev.kind)) ev.hop = 17;
        if (ev.kind == EventKind::shutdown_tx || ev.kind == EventKind::data_delivered) ev.ttl = 3;
        if (ev.kind == EventKind::child_reaped) ev.child = 4243;
        auto parsed = parse_event_line(format_event(ev));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == ev);
    }
}

TEST_CASE("parser accepts paper wording") {
    auto id = parse_event_line("Procesul[3], ProcessID = 565, ParentID = 564");
    REQUIRE(id);
    CHECK(id->kind == EventKind::identify);
    CHECK(id->node == 3);
    CHECK(id->pid == 565);
    CHECK(id->ppid == 564);

    auto reap = parse_event_line("Inca un copil mort PID = 566.");
    REQUIRE(reap);
    CHECK(reap->kind == EventKind::child_reaped);
    CHECK(reap->child == 566);
    CHECK(reap->node == 0);
}

TEST_CASE("parser rejects lines outside the grammar") {
    const char* bad[] = {
        "",
        "RING",
        "RING IDENTIFY",
        "RING BOGUS node=1 pid=2",
        "RING EXIT pid=2 node=1",             // order
        "RING EXIT node=1",                   // pid missing
        "RING EXIT node=1 pid=2 ",            // trailing space
        "RING EXIT node=1 pid=2 hop=1 ppid=3",  // optional order
        "RING EXIT node=1 pid=2 hop=1 hop=2",
        "RING EXIT node=1 pid=x",
        "RING EXIT node=1 pid=2 colour=3",
        "RING TOKEN_TX node=1 pid=2",         // hop required
        "ring EXIT node=1 pid=2",
        "Procesul[3], ProcessID = 565",
        "Inca un copil mort PID = 566",
        "usage: ring identify NPROCS",
    };
    for (const char* line : bad) {
        CAPTURE(line);
        CHECK_FALSE(parse_event_line(line).has_value());
    }
}

TEST_CASE("sink switches rendering with the compat flag") {
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    DiagnosticSink plain(fds[1], false);
    DiagnosticSink paper(fds[1], true);
    LogEvent id{EventKind::identify, 2, 1234, 1230, {}, {}, {}};
    LogEvent exit{EventKind::exit, 2, 1234, {}, {}, {}, {}};
    plain.emit(id);
    paper.emit(id);
    paper.emit(exit);
    paper.note("free text");
    ::close(fds[1]);
    std::string got;
    char buf[256];
    for (ssize_t n; (n = ::read(fds[0], buf, sizeof buf)) > 0;) got.append(buf, static_cast<std::size_t>(n));
    ::close(fds[0]);
    CHECK(got ==
          "RING IDENTIFY node=2 pid=1234 ppid=1230\n"
          "Procesul[2], ProcessID = 1234, ParentID = 1230\n"
          "RING EXIT node=2 pid=1234\n"
          "free text\n");
}
