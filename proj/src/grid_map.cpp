#include "tapf/grid_map.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace tapf {

GridMap::GridMap(int width, int height, bool passable) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("map dimensions must be positive");
    }
    passable_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), passable ? 1 : 0);
}

GridMap::GridMap(int width, int height, std::vector<std::uint8_t> passable)
    : width_(width), height_(height), passable_(std::move(passable)) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("map dimensions must be positive");
    }
    if (passable_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::invalid_argument("passability vector does not match map dimensions");
    }
    for (auto& p : passable_) {
        p = p ? 1 : 0;
    }
}

void GridMap::set_passable(Cell c, bool value) {
    if (!in_bounds(c)) {
        throw std::out_of_range("cell outside map");
    }
    passable_[index(c)] = value ? 1 : 0;
}

int GridMap::passable_count() const {
    return static_cast<int>(std::count(passable_.begin(), passable_.end(), std::uint8_t{1}));
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            if (pos < text.size()) {
                lines.push_back(text.substr(pos));
            }
            break;
        }
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') {
            l.remove_suffix(1);
        }
    }
    return lines;
}

bool parse_header_value(std::string_view line, std::string_view key, int& out) {
    if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ' ') {
        return false;
    }
    auto rest = line.substr(key.size() + 1);
    while (!rest.empty() && rest.front() == ' ') {
        rest.remove_prefix(1);
    }
    while (!rest.empty() && rest.back() == ' ') {
        rest.remove_suffix(1);
    }
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), out);
    return ec == std::errc{} && ptr == rest.data() + rest.size();
}

}  // namespace

GridMap parse_map(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0].substr(0, 5) != "type ") {
        throw ParseError(1, "expected 'type <name>' header");
    }
    int height = -1;
    int width = -1;
    for (int i = 1; i <= 2; ++i) {
        if (static_cast<std::size_t>(i) >= lines.size()) {
            throw ParseError(i + 1, "unexpected end of header");
        }
        int value = 0;
        if (parse_header_value(lines[i], "height", value) && height < 0) {
            height = value;
        } else if (parse_header_value(lines[i], "width", value) && width < 0) {
            width = value;
        } else {
            throw ParseError(i + 1, "expected 'height <H>' or 'width <W>'");
        }
    }
    if (height < 1 || width < 1) {
        throw ParseError(3, "map dimensions must be positive");
    }
    if (lines.size() < 4 || lines[3] != "map") {
        throw ParseError(4, "expected 'map'");
    }
    std::size_t last = lines.size();
    while (last > 4 && lines[last - 1].empty()) {
        --last;
    }
    const std::size_t rows = last - 4;
    if (rows != static_cast<std::size_t>(height)) {
        throw ParseError(static_cast<int>(std::min(last, 4 + static_cast<std::size_t>(height))) + 1,
                         "expected " + std::to_string(height) + " map rows, found " + std::to_string(rows));
    }
    std::vector<std::uint8_t> passable(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        auto row = lines[4 + static_cast<std::size_t>(y)];
        if (row.size() != static_cast<std::size_t>(width)) {
            throw ParseError(5 + y, "expected row of width " + std::to_string(width) + ", found " +
                                        std::to_string(row.size()));
        }
        for (int x = 0; x < width; ++x) {
            char ch = row[static_cast<std::size_t>(x)];
            passable[static_cast<std::size_t>(y * width + x)] = (ch == '.' || ch == 'G') ? 1 : 0;
        }
    }
    return GridMap(width, height, std::move(passable));
}

std::string serialize_map(const GridMap& map) {
    std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " +
                      std::to_string(map.width()) + "\nmap\n";
    out.reserve(out.size() + static_cast<std::size_t>(map.cell_count() + map.height()));
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            out.push_back(map.passable({x, y}) ? '.' : '@');
        }
        out.push_back('\n');
    }
    return out;
}

GridMap load_map_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open map file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_map(ss.str());
    } catch (const ParseError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::vector<Cell> neighbors(const GridMap& map, Cell c) {
    std::vector<Cell> out;
    if (!map.passable(c)) {
        return out;
    }
    out.reserve(4);
    const Cell candidates[4] = {{c.x + 1, c.y}, {c.x, c.y + 1}, {c.x - 1, c.y}, {c.x, c.y - 1}};
    for (const auto& n : candidates) {
        if (map.passable(n)) {
            out.push_back(n);
        }
    }
    return out;
}

DistanceField bfs_distances(const GridMap& map, std::span<const Cell> sources) {
    if (sources.empty()) {
        throw std::invalid_argument("bfs_distances: no sources");
    }
    std::vector<int> dist(static_cast<std::size_t>(map.cell_count()), DistanceField::kUnreachable);
    std::deque<int> queue;
    for (const auto& s : sources) {
        if (!map.passable(s)) {
            throw std::invalid_argument("bfs_distances: impassable source");
        }
        auto& d = dist[static_cast<std::size_t>(map.index(s))];
        if (d != 0) {
            d = 0;
            queue.push_back(map.index(s));
        }
    }
    const int w = map.width();
    while (!queue.empty()) {
        const int cur = queue.front();
        queue.pop_front();
        const Cell c = map.cell(cur);
        const int next = dist[static_cast<std::size_t>(cur)] + 1;
        const Cell candidates[4] = {{c.x + 1, c.y}, {c.x, c.y + 1}, {c.x - 1, c.y}, {c.x, c.y - 1}};
        for (const auto& n : candidates) {
            if (!map.passable(n)) {
                continue;
            }
            auto& d = dist[static_cast<std::size_t>(n.y * w + n.x)];
            if (d == DistanceField::kUnreachable) {
                d = next;
                queue.push_back(n.y * w + n.x);
            }
        }
    }
    return DistanceField(map, std::move(dist));
}

namespace {

struct Span {
    int lo;
    int hi;
};

// One axis of the window placement. `box` is the inflated, clipped bounding
// box of agents and goals; `agents` is the agents' extent. An oversized box
// becomes a cap-sized one centered as close to the goal centroid as the
// agents and the map allow.
Span place_axis(Span box, Span agents, double goal_center, int cap, int size, const char* axis) {
    if (box.hi - box.lo + 1 <= cap) {
        return box;
    }
    if (agents.hi - agents.lo + 1 > cap) {
        throw WindowError(std::string("agents span more than the window cap along ") + axis);
    }
    const int wanted = static_cast<int>(std::floor(goal_center - (cap - 1) / 2.0 + 0.5));
    const int lo = std::clamp(wanted, std::max(0, agents.hi - cap + 1), std::min(agents.lo, size - cap));
    return {lo, lo + cap - 1};
}

}  // namespace

WindowResult compute_window(const GridMap& map, std::span<const Cell> agents,
                            const std::vector<std::vector<Cell>>& goal_groups, const WindowConfig& cfg) {
    if (agents.empty()) {
        throw std::invalid_argument("compute_window: no agents");
    }
    if (cfg.cap_w < 1 || cfg.cap_h < 1 || cfg.margin < 0) {
        throw std::invalid_argument("compute_window: invalid window config");
    }
    Span ax{agents[0].x, agents[0].x};
    Span ay{agents[0].y, agents[0].y};
    for (const auto& a : agents) {
        if (!map.passable(a)) {
            throw std::invalid_argument("compute_window: agent on impassable cell");
        }
        ax = {std::min(ax.lo, a.x), std::max(ax.hi, a.x)};
        ay = {std::min(ay.lo, a.y), std::max(ay.hi, a.y)};
    }
    Span bx = ax;
    Span by = ay;
    double gx = 0.0;
    double gy = 0.0;
    std::size_t goal_count = 0;
    for (const auto& group : goal_groups) {
        for (const auto& g : group) {
            bx = {std::min(bx.lo, g.x), std::max(bx.hi, g.x)};
            by = {std::min(by.lo, g.y), std::max(by.hi, g.y)};
            gx += g.x;
            gy += g.y;
            ++goal_count;
        }
    }
    if (goal_count > 0) {
        gx /= static_cast<double>(goal_count);
        gy /= static_cast<double>(goal_count);
    } else {
        gx = (ax.lo + ax.hi) / 2.0;
        gy = (ay.lo + ay.hi) / 2.0;
    }
    bx = {std::max(0, bx.lo - cfg.margin), std::min(map.width() - 1, bx.hi + cfg.margin)};
    by = {std::max(0, by.lo - cfg.margin), std::min(map.height() - 1, by.hi + cfg.margin)};

    const Span wx = place_axis(bx, ax, gx, cfg.cap_w, map.width(), "x");
    const Span wy = place_axis(by, ay, gy, cfg.cap_h, map.height(), "y");
    WindowResult result{Window{wx.lo, wy.lo, wx.hi, wy.hi}, goal_groups};
    const Window& win = result.window;

    struct Pending {
        Cell goal;
        std::size_t group;
        std::size_t slot;
    };
    std::vector<Pending> outside;
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(win.width() * win.height()), 0);
    for (std::size_t g = 0; g < goal_groups.size(); ++g) {
        for (std::size_t i = 0; i < goal_groups[g].size(); ++i) {
            const Cell c = goal_groups[g][i];
            if (win.contains(c)) {
                const Cell l = win.to_local(c);
                taken[static_cast<std::size_t>(l.y * win.width() + l.x)] = 1;
            } else {
                outside.push_back({c, g, i});
            }
        }
    }
    if (outside.empty()) {
        return result;
    }
    std::sort(outside.begin(), outside.end(),
              [](const Pending& a, const Pending& b) { return row_major_less(a.goal, b.goal); });

    // Candidates must be reachable from the agents without leaving the window.
    const GridMap local = crop(map, win);
    std::vector<Cell> local_agents;
    local_agents.reserve(agents.size());
    for (const auto& a : agents) {
        local_agents.push_back(win.to_local(a));
    }
    const DistanceField inside = bfs_distances(local, local_agents);

    for (const auto& p : outside) {
        if (!map.passable(p.goal)) {
            throw std::invalid_argument("compute_window: goal on impassable cell");
        }
        const Cell source[1] = {p.goal};
        const DistanceField to_goal = bfs_distances(map, source);
        int best = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (int ly = 0; ly < win.height(); ++ly) {
            for (int lx = 0; lx < win.width(); ++lx) {
                const int li = ly * win.width() + lx;
                if (taken[static_cast<std::size_t>(li)] || !inside.reachable({lx, ly})) {
                    continue;
                }
                const int d = to_goal.at(win.to_global({lx, ly}));
                if (d != DistanceField::kUnreachable && d < best_dist) {
                    best_dist = d;
                    best = li;
                }
            }
        }
        if (best < 0) {
            throw WindowError("no in-window intermediate goal reachable for goal (" + std::to_string(p.goal.x) + "," +
                              std::to_string(p.goal.y) + ")");
        }
        taken[static_cast<std::size_t>(best)] = 1;
        result.goals[p.group][p.slot] = win.to_global({best % win.width(), best / win.width()});
    }
    return result;
}

GridMap crop(const GridMap& map, const Window& w) {
    std::vector<std::uint8_t> passable(static_cast<std::size_t>(w.width() * w.height()));
    for (int y = 0; y < w.height(); ++y) {
        for (int x = 0; x < w.width(); ++x) {
            passable[static_cast<std::size_t>(y * w.width() + x)] = map.passable(w.to_global({x, y})) ? 1 : 0;
        }
    }
    return GridMap(w.width(), w.height(), std::move(passable));
}

}  // namespace tapf
