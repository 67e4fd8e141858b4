#include <fstream>
#include <string>

#include "json.hpp"
#include "tokenring/harness.hpp"

namespace tokenring {

namespace {

using nlohmann::json;

json event_to_json(const LogEvent& ev) {
    json j = {{"record", "event"},
              {"event", std::string{to_string(ev.kind)}},
              {"node", ev.node},
              {"pid", ev.pid}};
    if (ev.ppid) j["ppid"] = *ev.ppid;
    if (ev.hop) j["hop"] = *ev.hop;
    if (ev.ttl) j["ttl"] = *ev.ttl;
    if (ev.child) j["child"] = *ev.child;
    return j;
}

std::optional<std::int64_t> optional_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<std::int64_t>();
}

LogEvent event_from_json(const json& j) {
    auto kind = event_kind_from_string(j.at("event").get<std::string>());
    if (!kind) throw IoFailure("unknown event kind " + j.at("event").dump());
    LogEvent ev;
    ev.kind = *kind;
    ev.node = j.at("node").get<std::int64_t>();
    ev.pid = j.at("pid").get<std::int64_t>();
    ev.ppid = optional_field(j, "ppid");
    ev.hop = optional_field(j, "hop");
    ev.ttl = optional_field(j, "ttl");
    ev.child = optional_field(j, "child");
    return ev;
}

json header_to_json(const RingReport& r) {
    json verdicts = json::object();
    for (const auto& [name, v] : r.verdicts) verdicts[name] = {{"pass", v.pass}, {"detail", v.detail}};
    json exit_codes = json::object();
    for (const auto& [node, code] : r.exit_codes) exit_codes[std::to_string(node)] = code;

    return {
        {"record", "header"},
        {"spec",
         {{"n", r.spec.n},
          {"revolutions", r.spec.revolutions},
          {"max_payload", r.spec.max_payload},
          {"teardown_timeout_ms", r.spec.teardown_timeout.count()}}},
        {"behavior",
         {{"scenario", std::string{to_string(r.behavior.scenario)}},
          {"revolutions", r.behavior.revolutions},
          {"cs_hold_ms", r.behavior.cs_hold.count()},
          {"probe", r.behavior.probe}}},
        {"exit_codes", exit_codes},
        {"verdicts", verdicts},
        {"residue", r.residue},
        {"transcript", r.transcript},
        {"stdout_bytes", r.stdout_bytes},
        {"elapsed_us", r.elapsed.count()},
        {"teardown_us", r.teardown.count()},
    };
}

void header_from_json(const json& j, RingReport& r) {
    const json& spec = j.at("spec");
    r.spec.n = spec.at("n").get<int>();
    r.spec.revolutions = spec.at("revolutions").get<std::uint32_t>();
    r.spec.max_payload = spec.at("max_payload").get<std::size_t>();
    r.spec.teardown_timeout = std::chrono::milliseconds{spec.at("teardown_timeout_ms").get<std::int64_t>()};

    const json& behavior = j.at("behavior");
    auto scenario = scenario_from_string(behavior.at("scenario").get<std::string>());
    if (!scenario) throw IoFailure("unknown scenario " + behavior.at("scenario").dump());
    r.behavior.scenario = *scenario;
    r.behavior.revolutions = behavior.at("revolutions").get<std::uint32_t>();
    r.behavior.cs_hold = std::chrono::milliseconds{behavior.at("cs_hold_ms").get<std::int64_t>()};
    r.behavior.probe = behavior.at("probe").get<bool>();

    for (const auto& [node, code] : j.at("exit_codes").items()) r.exit_codes[std::stoi(node)] = code.get<int>();
    for (const auto& [name, v] : j.at("verdicts").items())
        r.verdicts[name] = {v.at("pass").get<bool>(), v.at("detail").get<std::string>()};
    r.residue = j.at("residue").get<std::vector<std::string>>();
    r.transcript = j.at("transcript").get<std::string>();
    r.stdout_bytes = j.at("stdout_bytes").get<std::uint64_t>();
    r.elapsed = std::chrono::microseconds{j.at("elapsed_us").get<std::int64_t>()};
    r.teardown = std::chrono::microseconds{j.at("teardown_us").get<std::int64_t>()};
}

}  // namespace

void save_report(const RingReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out << header_to_json(report).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    for (const auto& ev : report.events) out << event_to_json(ev).dump() << '\n';
    out.flush();
    if (!out) throw IoFailure("write to " + path.string() + " failed");
}

RingReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());

    RingReport report;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            std::string record = j.at("record").get<std::string>();
            if (record == "header") {
                if (have_header) throw IoFailure("second header record");
                header_from_json(j, report);
                have_header = true;
            } else if (record == "event") {
                if (!have_header) throw IoFailure("event record before header");
                report.events.push_back(event_from_json(j));
            } else {
                throw IoFailure("unknown record type '" + record + "'");
            }
        } catch (const json::exception& e) {
            throw IoFailure(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const IoFailure& e) {
            throw IoFailure(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw IoFailure(path.string() + ": no header record");
    return report;
}

}  // namespace tokenring
