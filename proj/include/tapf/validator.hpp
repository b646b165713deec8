#pragma once

#include <span>
#include <string>
#include <vector>

#include "tapf/grid_map.hpp"

namespace tapf {

struct Violation {
    enum class Kind { kHorizon, kStart, kStep, kVertexCollision, kSwapCollision, kGoalCoverage };
    Kind kind;
    int t = -1;
    int agent_a = -1;
    int agent_b = -1;
    std::string detail;
};

std::string to_string(Violation::Kind kind);
std::string describe(const Violation& v);

// Same-cell occupancy among `cells` (one entry per agent) at time t.
std::vector<Violation> check_positions(const GridMap& map, std::span<const Cell> cells, int t);

// Moves from time t to t+1: each agent waits or takes one 4-adjacent step
// onto a passable cell, and no two agents swap.
std::vector<Violation> check_transition(const GridMap& map, std::span<const Cell> before,
                                        std::span<const Cell> after, int t);

}  // namespace tapf
