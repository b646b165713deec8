#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "tapf/flow_solver.hpp"
#include "tapf/grid_map.hpp"

namespace tapf {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Some group cannot reach its goals at any horizon.
class UnsolvableError : public SolverError {
public:
    using SolverError::SolverError;
};

// Horizon or search-size guard exceeded.
class ResourceLimitError : public SolverError {
public:
    using SolverError::SolverError;
};

struct CostModel {
    std::int64_t move_cost = 1;
    std::int64_t wait_cost = 0;
    std::int64_t collision_penalty = 0;

    // Smallest penalty for which any collision-free plan over `horizon`
    // steps is cheaper than any colliding one.
    static std::int64_t penalty_for(int horizon, int total_agents, std::int64_t move_cost = 1);
    static CostModel for_horizon(int horizon, int total_agents);
};

enum class ConstraintKind { kVertex, kEdge };

// Vertex: the group may not occupy `cell` at time t.
// Edge: the group may not move from `cell` to `to` between t and t+1.
struct Constraint {
    int group = 0;
    ConstraintKind kind = ConstraintKind::kVertex;
    Cell cell;
    Cell to;
    int t = 0;

    static Constraint vertex(int group, Cell c, int t) { return {group, ConstraintKind::kVertex, c, c, t}; }
    static Constraint edge(int group, Cell from, Cell to, int t) { return {group, ConstraintKind::kEdge, from, to, t}; }

    friend bool operator==(const Constraint&, const Constraint&) = default;
};

// Occupancies and traversals that would collide with other groups' agents.
class PenaltyTable {
public:
    void add_occupancy(Cell c, int t) { occupancy_.insert(key(c, c, t)); }
    // Marks the move from->to between t and t+1 as colliding.
    void add_traversal(Cell from, Cell to, int t) { traversal_.insert(key(from, to, t)); }
    // Penalizes every cell/time the paths occupy and every reverse of their moves.
    void add_paths(const std::vector<std::vector<Cell>>& paths);

    bool occupied(Cell c, int t) const { return occupancy_.count(key(c, c, t)) != 0; }
    bool traversal(Cell from, Cell to, int t) const { return traversal_.count(key(from, to, t)) != 0; }
    bool empty() const { return occupancy_.empty() && traversal_.empty(); }

private:
    static std::uint64_t key(Cell a, Cell b, int t);

    std::unordered_set<std::uint64_t> occupancy_;
    std::unordered_set<std::uint64_t> traversal_;
};

struct GroupProblem {
    std::vector<Cell> starts;
    std::vector<Cell> goals;
    int horizon = 0;
    std::vector<Constraint> constraints;
    PenaltyTable penalties;
};

// One path of horizon+1 cells per agent, in the order of GroupProblem::starts.
struct GroupPaths {
    std::vector<std::vector<Cell>> paths;

    friend bool operator==(const GroupPaths&, const GroupPaths&) = default;
};

struct GroupPlan {
    GroupPaths paths;
    std::int64_t total_cost = 0;
    int moves = 0;
};

struct BuildOptions {
    // Drop (cell, t) layers that cannot lie on any start-to-goal path within
    // the horizon. Does not change optimal flows.
    bool prune = false;
};

struct TimeExpandedNetwork {
    enum class NodeKind : std::uint8_t { kSource, kSink, kIn, kOut, kGadget };
    struct NodeInfo {
        NodeKind kind;
        int cell;  // map index, -1 for non-cell nodes
        int t;
    };

    FlowNetwork net;
    std::vector<NodeInfo> nodes;
    int width = 0;
    int horizon = 0;
    // Indexed by t * cell_count + cell; -1 when absent.
    std::vector<int> in_node;
    std::vector<int> split_arc;

    int split_pairs = 0;
    int wait_arcs = 0;
    int gadgets = 0;
    int gadget_arcs = 0;
    int source_arcs = 0;
    int sink_arcs = 0;

    std::optional<int> split_arc_of(const GridMap& map, Cell c, int t) const;
};

TimeExpandedNetwork build_time_expanded_network(const GridMap& map, const GroupProblem& p, const CostModel& cm,
                                                BuildOptions opts = {});

// std::nullopt when no plan exists at the horizon.
std::optional<GroupPlan> solve_group(const GridMap& map, const GroupProblem& p, const CostModel& cm);

// Smallest feasible horizon, searching upward from the BFS lower bound.
// std::nullopt when some goal cannot be matched to a start by connectivity.
// Throws ResourceLimitError past max_horizon. With `from`, probing starts
// there, giving max(from, the minimum makespan).
std::optional<int> min_group_makespan(const GridMap& map, const std::vector<Cell>& starts,
                                      const std::vector<Cell>& goals, int max_horizon = 512, int from = 0);

// max over goals of the BFS distance from the nearest start, or nullopt if
// some goal is disconnected from all starts.
std::optional<int> group_makespan_lower_bound(const GridMap& map, const std::vector<Cell>& starts,
                                              const std::vector<Cell>& goals);

}  // namespace tapf
