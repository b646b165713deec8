#include "tapf/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace tapf {

namespace {

std::vector<std::string_view> split_words(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
            ++i;
        }
        const std::size_t j = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        if (i > j) {
            out.push_back(line.substr(j, i - j));
        }
    }
    return out;
}

int to_int(std::string_view s, int line, const char* field) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw ScenarioError(line, std::string("bad ") + field + " '" + std::string(s) + "'");
    }
    return v;
}

std::pair<int, int> to_pair(std::string_view s, int line, const char* field) {
    const auto comma = s.find(',');
    if (comma == std::string_view::npos) {
        throw ScenarioError(line, std::string("bad ") + field + " '" + std::string(s) + "', expected x,y");
    }
    return {to_int(s.substr(0, comma), line, field), to_int(s.substr(comma + 1), line, field)};
}

std::string cell_text(Cell c) { return std::to_string(c.x) + "," + std::to_string(c.y); }

struct Parser {
    Scenario s;
    bool saw_map = false;
    GoalPattern* open_pattern = nullptr;
    int pattern_line = 0;
    // First line of each element, for diagnostics during validation.
    std::vector<int> group_lines;
    std::vector<int> spec_lines;

    void expect_args(const std::vector<std::string_view>& w, std::size_t n, int line) {
        if (w.size() != n) {
            throw ScenarioError(line, "'" + std::string(w[0]) + "' takes " + std::to_string(n - 1) + " argument(s)");
        }
    }

    void line(const std::vector<std::string_view>& w, int ln) {
        const auto key = w[0];
        if (open_pattern != nullptr) {
            if (key == "goals") {
                if (w.size() < 2) {
                    throw ScenarioError(ln, "'goals' needs a group id");
                }
                const int gid = to_int(w[1], ln, "group id");
                if (gid < 0 || gid > 1000) {
                    throw ScenarioError(ln, "group id out of range");
                }
                auto& offs = open_pattern->offsets;
                if (offs.size() <= static_cast<std::size_t>(gid)) {
                    offs.resize(static_cast<std::size_t>(gid) + 1);
                }
                auto& dst = offs[static_cast<std::size_t>(gid)];
                if (!dst.empty()) {
                    throw ScenarioError(ln, "goals for group " + std::to_string(gid) + " given twice");
                }
                for (std::size_t i = 2; i < w.size(); ++i) {
                    const auto [dx, dy] = to_pair(w[i], ln, "offset");
                    dst.push_back({dx, dy});
                }
                if (dst.empty()) {
                    throw ScenarioError(ln, "'goals' needs at least one offset");
                }
            } else if (key == "end") {
                expect_args(w, 1, ln);
                open_pattern = nullptr;
            } else {
                throw ScenarioError(ln, "unexpected '" + std::string(key) + "' inside pattern");
            }
            return;
        }
        if (key == "map") {
            expect_args(w, 2, ln);
            s.map_path = std::string(w[1]);
            saw_map = true;
        } else if (key == "k") {
            expect_args(w, 2, ln);
            s.k = to_int(w[1], ln, "k");
            if (s.k < 1) {
                throw ScenarioError(ln, "k must be at least 1");
            }
        } else if (key == "window") {
            expect_args(w, 4, ln);
            s.window.cap_w = to_int(w[1], ln, "window width");
            s.window.cap_h = to_int(w[2], ln, "window height");
            s.window.margin = to_int(w[3], ln, "window margin");
            if (s.window.cap_w < 1 || s.window.cap_h < 1 || s.window.margin < 0) {
                throw ScenarioError(ln, "window sizes must be positive and the margin non-negative");
            }
        } else if (key == "max_ticks") {
            expect_args(w, 2, ln);
            s.max_ticks = to_int(w[1], ln, "max_ticks");
            if (s.max_ticks < 0) {
                throw ScenarioError(ln, "max_ticks must be non-negative");
            }
        } else if (key == "group") {
            if (w.size() < 4) {
                throw ScenarioError(ln, "'group' needs an id, a name and at least one start");
            }
            ScenarioGroup g;
            g.id = to_int(w[1], ln, "group id");
            g.name = std::string(w[2]);
            for (std::size_t i = 3; i < w.size(); ++i) {
                const auto [x, y] = to_pair(w[i], ln, "start");
                g.starts.push_back({x, y});
            }
            s.groups.push_back(std::move(g));
            group_lines.push_back(ln);
        } else if (key == "pattern") {
            expect_args(w, 2, ln);
            if (s.find_pattern(w[1]) != nullptr) {
                throw ScenarioError(ln, "pattern '" + std::string(w[1]) + "' defined twice");
            }
            s.patterns.push_back({std::string(w[1]), {}});
            open_pattern = &s.patterns.back();
            pattern_line = ln;
        } else if (key == "spec") {
            expect_args(w, 4, ln);
            ScheduleEntry e;
            e.pattern = std::string(w[1]);
            const auto [x, y] = to_pair(w[2], ln, "anchor");
            e.anchor = {x, y};
            e.rotation = to_int(w[3], ln, "rotation");
            s.schedule.push_back(std::move(e));
            spec_lines.push_back(ln);
        } else {
            throw ScenarioError(ln, "unknown directive '" + std::string(key) + "'");
        }
    }
};

void check_rotation(int rotation) {
    if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270) {
        throw std::invalid_argument("rotation must be 0, 90, 180 or 270, got " + std::to_string(rotation));
    }
}

void validate_with_lines(const Scenario& s, const std::vector<int>& group_lines, const std::vector<int>& spec_lines) {
    auto gline = [&](std::size_t i) { return i < group_lines.size() ? group_lines[i] : 0; };
    auto sline = [&](std::size_t i) { return i < spec_lines.size() ? spec_lines[i] : 0; };
    if (s.map_path.empty()) {
        throw ScenarioError(0, "missing 'map'");
    }
    if (s.k < 1) {
        throw ScenarioError(0, "k must be at least 1");
    }
    if (s.groups.empty()) {
        throw ScenarioError(0, "no groups");
    }
    if (s.schedule.empty()) {
        throw ScenarioError(0, "schedule is empty");
    }
    std::set<std::pair<int, int>> starts;
    for (std::size_t i = 0; i < s.groups.size(); ++i) {
        const auto& g = s.groups[i];
        if (g.id != static_cast<int>(i)) {
            throw ScenarioError(gline(i), "group ids must be 0, 1, ... in order; expected " + std::to_string(i));
        }
        if (g.starts.empty()) {
            throw ScenarioError(gline(i), "group " + std::to_string(g.id) + " has no agents");
        }
        for (const auto& c : g.starts) {
            if (!starts.insert({c.x, c.y}).second) {
                throw ScenarioError(gline(i), "start " + cell_text(c) + " used twice");
            }
        }
    }
    for (const auto& p : s.patterns) {
        if (p.offsets.size() != s.groups.size()) {
            throw ScenarioError(0, "pattern '" + p.name + "' must give goals for each of the " +
                                       std::to_string(s.groups.size()) + " groups");
        }
        std::set<std::pair<int, int>> seen;
        for (std::size_t g = 0; g < p.offsets.size(); ++g) {
            if (p.offsets[g].size() != s.groups[g].starts.size()) {
                throw ScenarioError(0, "pattern '" + p.name + "' has " + std::to_string(p.offsets[g].size()) +
                                           " goals for group " + std::to_string(g) + " of size " +
                                           std::to_string(s.groups[g].starts.size()));
            }
            for (const auto& o : p.offsets[g]) {
                if (!seen.insert({o.dx, o.dy}).second) {
                    throw ScenarioError(0, "pattern '" + p.name + "' repeats offset " + std::to_string(o.dx) + "," +
                                               std::to_string(o.dy));
                }
            }
        }
    }
    for (std::size_t i = 0; i < s.schedule.size(); ++i) {
        const auto& e = s.schedule[i];
        if (s.find_pattern(e.pattern) == nullptr) {
            throw ScenarioError(sline(i), "unknown pattern '" + e.pattern + "'");
        }
        try {
            check_rotation(e.rotation);
        } catch (const std::invalid_argument& ex) {
            throw ScenarioError(sline(i), ex.what());
        }
    }
}

}  // namespace

const GoalPattern* Scenario::find_pattern(std::string_view name) const {
    for (const auto& p : patterns) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

Scenario load_scenario(std::string_view text) {
    Parser ps;
    int ln = 0;
    bool header = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        auto raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++ln;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
            raw = raw.substr(0, hash);
        }
        if (!raw.empty() && raw.back() == '\r') {
            raw.remove_suffix(1);
        }
        const auto w = split_words(raw);
        if (w.empty()) {
            continue;
        }
        if (!header) {
            if (w.size() != 2 || w[0] != "tapf-scenario") {
                throw ScenarioError(ln, "expected 'tapf-scenario 1'");
            }
            if (w[1] != "1") {
                throw ScenarioError(ln, "unsupported scenario version " + std::string(w[1]));
            }
            header = true;
            continue;
        }
        ps.line(w, ln);
    }
    if (!header) {
        throw ScenarioError(1, "expected 'tapf-scenario 1'");
    }
    if (ps.open_pattern != nullptr) {
        throw ScenarioError(ps.pattern_line, "pattern '" + ps.open_pattern->name + "' is missing 'end'");
    }
    validate_with_lines(ps.s, ps.group_lines, ps.spec_lines);
    return ps.s;
}

void validate_scenario(const Scenario& s) { validate_with_lines(s, {}, {}); }

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open scenario " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return load_scenario(ss.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(e.line(), path + ": " + std::string(e.what()));
    }
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "tapf-scenario 1\n";
    out << "map " << s.map_path << "\n";
    out << "k " << s.k << "\n";
    out << "window " << s.window.cap_w << " " << s.window.cap_h << " " << s.window.margin << "\n";
    out << "max_ticks " << s.max_ticks << "\n";
    for (const auto& g : s.groups) {
        out << "group " << g.id << " " << g.name;
        for (const auto& c : g.starts) {
            out << " " << cell_text(c);
        }
        out << "\n";
    }
    for (const auto& p : s.patterns) {
        out << "pattern " << p.name << "\n";
        for (std::size_t g = 0; g < p.offsets.size(); ++g) {
            out << "  goals " << g;
            for (const auto& o : p.offsets[g]) {
                out << " " << o.dx << "," << o.dy;
            }
            out << "\n";
        }
        out << "end\n";
    }
    for (const auto& e : s.schedule) {
        out << "spec " << e.pattern << " " << cell_text(e.anchor) << " " << e.rotation << "\n";
    }
    return out.str();
}

Offset rotate(Offset o, int rotation) {
    check_rotation(rotation);
    switch (rotation) {
        case 90:
            return {-o.dy, o.dx};
        case 180:
            return {-o.dx, -o.dy};
        case 270:
            return {o.dy, -o.dx};
        default:
            return o;
    }
}

std::vector<std::vector<Cell>> resolve_pattern(const GoalPattern& p, Cell anchor, int rotation, const GridMap& map) {
    check_rotation(rotation);
    std::vector<std::vector<Cell>> out(p.offsets.size());
    std::vector<Cell> bad;
    for (std::size_t g = 0; g < p.offsets.size(); ++g) {
        for (const auto& o : p.offsets[g]) {
            const auto r = rotate(o, rotation);
            const Cell c{anchor.x + r.dx, anchor.y + r.dy};
            if (!map.passable(c)) {
                bad.push_back(c);
            }
            out[g].push_back(c);
        }
    }
    if (!bad.empty()) {
        std::string msg = "pattern '" + p.name + "' at " + cell_text(anchor) + " rotated " + std::to_string(rotation) +
                          " hits blocked or out-of-bounds cells:";
        for (const auto& c : bad) {
            msg += " " + cell_text(c);
        }
        throw PlacementError(msg, std::move(bad));
    }
    return out;
}

std::string format_seconds(double seconds) {
    // The epsilon keeps decimal halves such as 0.1005 from rounding down
    // through binary representation error.
    const double scaled = std::floor(seconds * 1000.0 + 0.5 + 1e-9);
    const auto millis = static_cast<long long>(scaled);
    std::ostringstream out;
    out << millis / 1000 << "." << std::setw(3) << std::setfill('0') << millis % 1000;
    return out.str();
}

std::string write_metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "label,makespan,cbm_calls,avg_time_s,max_time_s\n";
    for (const auto& r : rows) {
        out += r.label + "," + std::to_string(r.metrics.makespan) + "," + std::to_string(r.metrics.cbm_calls) + "," +
               format_seconds(r.metrics.average_seconds()) + "," + format_seconds(r.metrics.max_seconds()) + "\n";
    }
    return out;
}

std::string write_metrics_table(const std::vector<MetricsRow>& rows) {
    const std::vector<std::string> head = {"instance", "makespan", "CBM calls", "avg time (s)", "max time (s)"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(head);
    for (const auto& r : rows) {
        cells.push_back({r.label, std::to_string(r.metrics.makespan), std::to_string(r.metrics.cbm_calls),
                         format_seconds(r.metrics.average_seconds()), format_seconds(r.metrics.max_seconds())});
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i) {
            if (i == 0) {
                out << std::left << std::setw(static_cast<int>(width[i])) << cells[r][i];
            } else {
                out << " | " << std::right << std::setw(static_cast<int>(width[i])) << cells[r][i];
            }
        }
        out << "\n";
        if (r == 0) {
            for (std::size_t i = 0; i < width.size(); ++i) {
                out << (i == 0 ? "" : "-|-") << std::string(width[i], '-');
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace tapf
