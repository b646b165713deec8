#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tapf/grid_map.hpp"
#include "tapf/group_planner.hpp"
#include "tapf/validator.hpp"

namespace tapf {

struct TapfGroup {
    int id = 0;
    std::vector<Cell> starts;
    std::vector<Cell> goals;  // interchangeable among the group's agents
};

struct TapfInstance {
    GridMap map{1, 1};
    std::vector<TapfGroup> groups;
};

// Throws std::invalid_argument describing the first broken invariant.
void check_instance(const TapfInstance& instance);

struct Conflict {
    int g1 = 0;
    int g2 = 0;
    ConstraintKind kind = ConstraintKind::kVertex;
    Cell cell;  // vertex cell, or the from-cell of g1's move
    Cell to;    // edge only: g1 moves cell -> to while g2 moves to -> cell
    int t = 0;

    friend bool operator==(const Conflict&, const Conflict&) = default;
};

struct CTNode {
    std::vector<Constraint> constraints;
    std::vector<GroupPaths> plans;  // indexed by group position
    int conflict_count = 0;
};

struct AgentPath {
    int agent = 0;
    int group = 0;
    std::vector<Cell> cells;

    friend bool operator==(const AgentPath&, const AgentPath&) = default;
};

struct Solution {
    std::vector<AgentPath> paths;  // by agent id: groups in order, starts in order
    int makespan = 0;

    friend bool operator==(const Solution&, const Solution&) = default;
};

struct SearchConfig {
    int max_horizon = 512;
    std::int64_t max_expansions = 200000;
    // Called for every collision-tree node popped from the open list.
    std::function<void(const CTNode&)> on_expand;
};

struct SearchStats {
    int lower_bound = 0;
    int horizons_tried = 0;
    std::int64_t expansions = 0;
    std::int64_t group_solves = 0;
};

// First inter-group conflict scanning t = 0..T; at each t vertex conflicts
// (smallest row-major cell) come before swap conflicts (smallest from-cell).
// `group_ids` maps plan position to group id.
std::optional<Conflict> detect_first_conflict(const std::vector<GroupPaths>& plans,
                                              const std::vector<int>& group_ids);

// Number of conflicting agent pairs over all time steps.
int count_conflicts(const std::vector<GroupPaths>& plans, const std::vector<int>& group_ids);

// The two constraints whose children resolve `c`: first for g1, then g2.
std::pair<Constraint, Constraint> branch(const Conflict& c);

// Minimum-makespan collision-free plan. Throws UnsolvableError or
// ResourceLimitError.
Solution cbm_solve(const TapfInstance& instance, const SearchConfig& cfg = {}, SearchStats* stats = nullptr);

// Independent check of every Solution invariant; empty when valid.
std::vector<Violation> validate_solution(const TapfInstance& instance, const Solution& s);

}  // namespace tapf
