#include "tapf/validator.hpp"

#include <algorithm>
#include <numeric>

namespace tapf {

std::string to_string(Violation::Kind kind) {
    switch (kind) {
        case Violation::Kind::kHorizon:
            return "horizon";
        case Violation::Kind::kStart:
            return "start";
        case Violation::Kind::kStep:
            return "step";
        case Violation::Kind::kVertexCollision:
            return "vertex-collision";
        case Violation::Kind::kSwapCollision:
            return "swap-collision";
        case Violation::Kind::kGoalCoverage:
            return "goal-coverage";
    }
    return "unknown";
}

std::string describe(const Violation& v) {
    std::string out = to_string(v.kind);
    if (v.t >= 0) {
        out += " at tick " + std::to_string(v.t);
    }
    if (v.agent_a >= 0) {
        out += " agent " + std::to_string(v.agent_a);
    }
    if (v.agent_b >= 0) {
        out += " and agent " + std::to_string(v.agent_b);
    }
    if (!v.detail.empty()) {
        out += ": " + v.detail;
    }
    return out;
}

namespace {

std::string cell_str(Cell c) {
    return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

}  // namespace

std::vector<Violation> check_positions(const GridMap& map, std::span<const Cell> cells, int t) {
    std::vector<Violation> out;
    std::vector<int> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return row_major_less(cells[static_cast<std::size_t>(a)], cells[static_cast<std::size_t>(b)]);
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Cell c = cells[static_cast<std::size_t>(order[i])];
        if (!map.passable(c)) {
            out.push_back({Violation::Kind::kStep, t, order[i], -1, "on impassable cell " + cell_str(c)});
        }
        for (std::size_t j = i + 1; j < order.size() && cells[static_cast<std::size_t>(order[j])] == c; ++j) {
            out.push_back({Violation::Kind::kVertexCollision, t, std::min(order[i], order[j]),
                           std::max(order[i], order[j]), "both at " + cell_str(c)});
        }
    }
    return out;
}

std::vector<Violation> check_transition(const GridMap& map, std::span<const Cell> before,
                                        std::span<const Cell> after, int t) {
    std::vector<Violation> out;
    if (before.size() != after.size()) {
        out.push_back({Violation::Kind::kHorizon, t, -1, -1, "agent count changed"});
        return out;
    }
    for (std::size_t a = 0; a < before.size(); ++a) {
        const int d = manhattan(before[a], after[a]);
        if (d > 1) {
            out.push_back({Violation::Kind::kStep, t, static_cast<int>(a), -1,
                           "jump " + cell_str(before[a]) + " -> " + cell_str(after[a])});
        } else if (d == 1 && !map.passable(after[a])) {
            out.push_back({Violation::Kind::kStep, t, static_cast<int>(a), -1,
                           "move onto impassable cell " + cell_str(after[a])});
        }
    }
    for (std::size_t a = 0; a < before.size(); ++a) {
        if (before[a] == after[a]) {
            continue;
        }
        for (std::size_t b = a + 1; b < before.size(); ++b) {
            if (before[a] == after[b] && before[b] == after[a]) {
                out.push_back({Violation::Kind::kSwapCollision, t, static_cast<int>(a), static_cast<int>(b),
                               "swap " + cell_str(before[a]) + " <-> " + cell_str(before[b])});
            }
        }
    }
    return out;
}

}  // namespace tapf
