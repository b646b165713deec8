#include "tapf/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace tapf {

using nlohmann::json;

namespace {

json cell_json(Cell c) { return json::array({c.x, c.y}); }

Cell cell_from(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw std::invalid_argument("expected [x, y]");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<std::string> map_rows(const GridMap& map) {
    std::vector<std::string> rows;
    for (int y = 0; y < map.height(); ++y) {
        std::string r;
        for (int x = 0; x < map.width(); ++x) {
            r += map.passable({x, y}) ? '.' : '@';
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

std::string trace_header_line(const GridMap& map, const std::vector<int>& agent_groups, const std::string& label) {
    json j = {{"kind", "header"},       {"v", 1},          {"width", map.width()}, {"height", map.height()},
              {"rows", map_rows(map)}, {"groups", agent_groups}, {"label", label}};
    return j.dump();
}

std::string trace_tick_line(const SimState& state, bool replanned) {
    json agents = json::array();
    for (const auto& a : state.agents) {
        agents.push_back(cell_json(a.cell));
    }
    json goals = json::array();
    for (const auto& g : state.active_goals) {
        json gj = json::array();
        for (const auto& c : g) {
            gj.push_back(cell_json(c));
        }
        goals.push_back(std::move(gj));
    }
    json j = {{"kind", "tick"},      {"tick", state.tick},   {"agents", std::move(agents)},
              {"goals", std::move(goals)}, {"replan", replanned}, {"cbm_calls", state.metrics.cbm_calls}};
    if (state.window) {
        const auto& w = *state.window;
        j["window"] = json::array({w.min_x, w.min_y, w.max_x, w.max_y});
    } else {
        j["window"] = nullptr;
    }
    if (replanned && state.last_call) {
        j["cbm_ms"] = state.last_call->seconds * 1000.0;
    }
    return j.dump();
}

TraceWriter::TraceWriter(std::ostream& out, const GridMap& map, const std::vector<ScenarioGroup>& groups,
                         const std::string& label)
    : out_(&out) {
    std::vector<int> ag;
    for (const auto& g : groups) {
        ag.insert(ag.end(), g.starts.size(), g.id);
    }
    *out_ << trace_header_line(map, ag, label) << "\n";
}

void TraceWriter::operator()(const SimState& state, bool replanned) {
    *out_ << trace_tick_line(state, replanned) << "\n";
}

Trace read_trace(std::istream& in) {
    Trace t;
    std::string line;
    int ln = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++ln;
        if (in.eof()) {
            throw TraceParseError(ln, "line is not terminated; trace truncated");
        }
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw TraceParseError(ln, std::string("invalid JSON: ") + e.what());
        }
        try {
            const auto kind = j.at("kind").get<std::string>();
            if (!header) {
                if (kind != "header") {
                    throw TraceParseError(ln, "first object must be the header");
                }
                if (j.at("v").get<int>() != 1) {
                    throw TraceParseError(ln, "unsupported trace version");
                }
                const int w = j.at("width").get<int>();
                const int h = j.at("height").get<int>();
                const auto rows = j.at("rows").get<std::vector<std::string>>();
                if (w < 1 || h < 1 || static_cast<int>(rows.size()) != h) {
                    throw TraceParseError(ln, "map rows do not match width and height");
                }
                std::vector<std::uint8_t> cells;
                for (const auto& r : rows) {
                    if (static_cast<int>(r.size()) != w) {
                        throw TraceParseError(ln, "map row of wrong width");
                    }
                    for (char c : r) {
                        cells.push_back(c == '.' ? 1 : 0);
                    }
                }
                t.map = GridMap(w, h, std::move(cells));
                t.agent_groups = j.at("groups").get<std::vector<int>>();
                t.label = j.value("label", "");
                header = true;
                continue;
            }
            if (kind != "tick") {
                throw TraceParseError(ln, "unknown object kind '" + kind + "'");
            }
            TraceTick tk;
            tk.tick = j.at("tick").get<int>();
            for (const auto& c : j.at("agents")) {
                tk.agents.push_back(cell_from(c));
            }
            for (const auto& g : j.at("goals")) {
                auto& dst = tk.goals.emplace_back();
                for (const auto& c : g) {
                    dst.push_back(cell_from(c));
                }
            }
            const auto& w = j.at("window");
            if (!w.is_null()) {
                const auto v = w.get<std::vector<int>>();
                if (v.size() != 4) {
                    throw TraceParseError(ln, "window must have four bounds");
                }
                tk.window = Window{v[0], v[1], v[2], v[3]};
            }
            tk.replanned = j.at("replan").get<bool>();
            tk.cbm_calls = j.at("cbm_calls").get<int>();
            if (j.contains("cbm_ms")) {
                tk.cbm_ms = j["cbm_ms"].get<double>();
            }
            const int expected = t.ticks.empty() ? 0 : t.ticks.back().tick + 1;
            if (tk.tick != expected) {
                throw TraceParseError(ln, "expected tick " + std::to_string(expected) + ", found " +
                                              std::to_string(tk.tick));
            }
            if (tk.agents.size() != t.agent_groups.size()) {
                throw TraceParseError(ln, "tick " + std::to_string(tk.tick) + " lists " +
                                              std::to_string(tk.agents.size()) + " agents, header has " +
                                              std::to_string(t.agent_groups.size()));
            }
            t.ticks.push_back(std::move(tk));
        } catch (const json::exception& e) {
            throw TraceParseError(ln, std::string("bad field: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw TraceParseError(ln, e.what());
        }
    }
    if (!header) {
        throw TraceParseError(ln, "empty trace");
    }
    if (t.ticks.empty()) {
        throw TraceParseError(ln, "trace has no ticks");
    }
    return t;
}

std::vector<Violation> validate_trace(const Trace& t) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < t.ticks.size(); ++i) {
        const auto& tk = t.ticks[i];
        const auto v = check_positions(t.map, tk.agents, tk.tick);
        out.insert(out.end(), v.begin(), v.end());
        if (i > 0) {
            const auto m = check_transition(t.map, t.ticks[i - 1].agents, tk.agents, t.ticks[i - 1].tick);
            out.insert(out.end(), m.begin(), m.end());
        }
    }
    return out;
}

std::string strip_timing(const std::string& trace_text) {
    std::istringstream in(trace_text);
    std::string out;
    std::string line;
    while (std::getline(in, line)) {
        try {
            auto j = json::parse(line);
            j.erase("cbm_ms");
            out += j.dump();
        } catch (const json::exception&) {
            out += line;
        }
        out += "\n";
    }
    return out;
}

}  // namespace tapf
