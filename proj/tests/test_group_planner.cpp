#include <algorithm>

#include "doctest.h"
#include "joint_oracle.hpp"
#include "random_instances.hpp"
#include "tapf/group_planner.hpp"

using namespace tapf;

namespace {

// Checks GroupPaths invariants from scratch; returns a description of the
// first problem or an empty string.
std::string group_paths_problem(const GridMap& map, const GroupProblem& p, const GroupPaths& gp) {
    const auto len = static_cast<std::size_t>(p.horizon) + 1;
    if (gp.paths.size() != p.starts.size()) {
        return "path count";
    }
    std::vector<Cell> ends;
    for (std::size_t a = 0; a < gp.paths.size(); ++a) {
        const auto& path = gp.paths[a];
        if (path.size() != len) {
            return "path length";
        }
        if (!(path.front() == p.starts[a])) {
            return "start";
        }
        for (std::size_t t = 0; t < len; ++t) {
            if (!map.passable(path[t])) {
                return "impassable";
            }
            if (t + 1 < len && manhattan(path[t], path[t + 1]) > 1) {
                return "jump";
            }
        }
        ends.push_back(path.back());
    }
    auto goals = p.goals;
    std::sort(ends.begin(), ends.end(), row_major_less);
    std::sort(goals.begin(), goals.end(), row_major_less);
    if (ends != goals) {
        return "goal set";
    }
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t a = 0; a < gp.paths.size(); ++a) {
            for (std::size_t b = a + 1; b < gp.paths.size(); ++b) {
                if (gp.paths[a][t] == gp.paths[b][t]) {
                    return "shared cell";
                }
                if (t + 1 < len && gp.paths[a][t] == gp.paths[b][t + 1] && gp.paths[b][t] == gp.paths[a][t + 1] &&
                    !(gp.paths[a][t] == gp.paths[a][t + 1])) {
                    return "swap";
                }
            }
        }
    }
    for (const auto& c : p.constraints) {
        if (static_cast<std::size_t>(c.t) >= len) {
            continue;
        }
        for (const auto& path : gp.paths) {
            if (c.kind == ConstraintKind::kVertex && path[static_cast<std::size_t>(c.t)] == c.cell) {
                return "vertex constraint";
            }
            if (c.kind == ConstraintKind::kEdge && static_cast<std::size_t>(c.t) + 1 < len &&
                path[static_cast<std::size_t>(c.t)] == c.cell && path[static_cast<std::size_t>(c.t) + 1] == c.to) {
                return "edge constraint";
            }
        }
    }
    return "";
}

GroupProblem problem(std::vector<Cell> starts, std::vector<Cell> goals, int horizon) {
    GroupProblem p;
    p.starts = std::move(starts);
    p.goals = std::move(goals);
    p.horizon = horizon;
    return p;
}

}  // namespace

TEST_CASE("network counts for a 1x2 corridor") {
    const GridMap m(2, 1);
    const auto p = problem({{0, 0}}, {{1, 0}}, 1);
    const auto ten = build_time_expanded_network(m, p, CostModel::for_horizon(1, 1));
    CHECK(ten.split_pairs == 4);
    CHECK(ten.wait_arcs == 2);
    CHECK(ten.gadgets == 1);
    CHECK(ten.gadget_arcs == 5);
    CHECK(ten.source_arcs == 1);
    CHECK(ten.sink_arcs == 1);
    CHECK(ten.net.node_count() == 2 + 8 + 2);
    CHECK(ten.net.arcs().size() == 4 + 2 + 5 + 1 + 1);
}

TEST_CASE("vertex constraint removes the split arc") {
    const GridMap m(2, 1);
    auto p = problem({{0, 0}}, {{1, 0}}, 1);
    p.constraints.push_back(Constraint::vertex(0, {1, 0}, 1));
    const auto ten = build_time_expanded_network(m, p, CostModel::for_horizon(1, 1));
    CHECK_FALSE(ten.split_arc_of(m, {1, 0}, 1).has_value());
    CHECK(ten.split_arc_of(m, {1, 0}, 0).has_value());
    CHECK_FALSE(solve_group(m, p, CostModel::for_horizon(1, 1)).has_value());
}

TEST_CASE("penalized occupancy costs M on the split arc") {
    const GridMap m(2, 1);
    auto p = problem({{0, 0}}, {{1, 0}}, 1);
    p.penalties.add_occupancy({1, 0}, 1);
    const auto cm = CostModel::for_horizon(1, 2);
    CHECK(cm.collision_penalty == 5);
    const auto ten = build_time_expanded_network(m, p, cm);
    const auto arc = ten.split_arc_of(m, {1, 0}, 1);
    REQUIRE(arc.has_value());
    CHECK(ten.net.arc(*arc).cost == cm.collision_penalty);
    CHECK(ten.net.arc(*ten.split_arc_of(m, {0, 0}, 1)).cost == 0);
}

TEST_CASE("edge constraint and traversal penalty act on the gadget entry") {
    const GridMap m(3, 1);
    auto p = problem({{0, 0}}, {{2, 0}}, 3);
    p.constraints.push_back(Constraint::edge(0, {0, 0}, {1, 0}, 0));
    const auto cm = CostModel::for_horizon(3, 1);
    const auto plan = solve_group(m, p, cm);
    REQUIRE(plan.has_value());
    const auto& path = plan->paths.paths[0];
    CHECK(path[1] == Cell{0, 0});
    CHECK(path[3] == Cell{2, 0});

    auto q = problem({{0, 0}}, {{2, 0}}, 2);
    q.penalties.add_traversal({0, 0}, {1, 0}, 0);
    const auto pen = solve_group(m, q, CostModel::for_horizon(2, 2));
    REQUIRE(pen.has_value());
    CHECK(pen->total_cost == 2 + CostModel::for_horizon(2, 2).collision_penalty);
}

TEST_CASE("solve_group basics") {
    const GridMap one(1, 1);
    auto stay = solve_group(one, problem({{0, 0}}, {{0, 0}}, 0), CostModel{});
    REQUIRE(stay);
    CHECK(stay->paths.paths == std::vector<std::vector<Cell>>{{{0, 0}}});

    const GridMap two(2, 1);
    auto both = solve_group(two, problem({{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}, 0), CostModel{});
    REQUIRE(both);
    CHECK(both->paths.paths[0] == std::vector<Cell>{{0, 0}});
    CHECK(both->paths.paths[1] == std::vector<Cell>{{1, 0}});

    // Goals listed in the other order are still satisfied by staying put.
    auto swapped = solve_group(two, problem({{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}, 2), CostModel{});
    REQUIRE(swapped);
    CHECK(swapped->moves == 0);

    const GridMap three(3, 1);
    auto walk = solve_group(three, problem({{0, 0}}, {{2, 0}}, 2), CostModel{});
    REQUIRE(walk);
    CHECK(walk->paths.paths[0] == std::vector<Cell>{{0, 0}, {1, 0}, {2, 0}});
    CHECK(walk->total_cost == 2);
    CHECK(walk->moves == 2);

    CHECK_FALSE(solve_group(three, problem({{0, 0}}, {{2, 0}}, 1), CostModel{}).has_value());
}

TEST_CASE("gadget forbids swapping two agents of a group") {
    // Two agents in a 1x2 corridor with exchanged goals would have to swap;
    // anonymity makes staying the plan.
    const GridMap m(2, 1);
    const auto plan = solve_group(m, problem({{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}, 1), CostModel{});
    REQUIRE(plan);
    CHECK(plan->paths.paths[0] == std::vector<Cell>{{0, 0}, {0, 0}});
}

TEST_CASE("feasibility and cost match joint-state search on random 4x4 maps") {
    testgen::Rng rng(404);
    int feasible = 0;
    for (int i = 0; i < 150; ++i) {
        const auto m = testgen::random_map(rng, 4, 4, testgen::draw(rng, 0, 25));
        const auto comp = testgen::largest_component(m);
        if (comp.size() < 4) {
            continue;
        }
        const auto starts = testgen::pick_distinct(rng, comp, 2);
        const auto goals = testgen::pick_distinct(rng, comp, 2);
        oracle::GroupSpec spec;
        spec.starts = starts;
        spec.goals = goals;
        GroupProblem p = problem(starts, goals, 0);
        const int constraints = testgen::draw(rng, 0, 3);
        for (int k = 0; k < constraints; ++k) {
            const Cell c = comp[static_cast<std::size_t>(testgen::draw(rng, 0, static_cast<int>(comp.size()) - 1))];
            const int t = testgen::draw(rng, 1, 5);
            p.constraints.push_back(Constraint::vertex(0, c, t));
            spec.vertex_forbidden.insert({c.x, c.y, t});
            const auto ns = neighbors(m, c);
            if (!ns.empty()) {
                const Cell to = ns[static_cast<std::size_t>(testgen::draw(rng, 0, static_cast<int>(ns.size()) - 1))];
                const int te = testgen::draw(rng, 0, 4);
                p.constraints.push_back(Constraint::edge(0, c, to, te));
                spec.edge_forbidden.insert({c.x, c.y, to.x, to.y, te});
            }
        }
        const int penalties = testgen::draw(rng, 0, 4);
        for (int k = 0; k < penalties; ++k) {
            const Cell c = comp[static_cast<std::size_t>(testgen::draw(rng, 0, static_cast<int>(comp.size()) - 1))];
            const int t = testgen::draw(rng, 0, 5);
            p.penalties.add_occupancy(c, t);
            spec.occupancy_penalty.insert({c.x, c.y, t});
            const auto ns = neighbors(m, c);
            if (!ns.empty()) {
                const Cell to = ns.front();
                p.penalties.add_traversal(c, to, t);
                spec.traversal_penalty.insert({c.x, c.y, to.x, to.y, t});
            }
        }
        bool was_feasible = false;
        for (int T = 0; T <= 6; ++T) {
            p.horizon = T;
            const auto cm = CostModel::for_horizon(T, 4);
            const auto plan = solve_group(m, p, cm);
            const auto best = oracle::min_cost_at_horizon(m, {spec}, T);
            CAPTURE(i);
            CAPTURE(T);
            REQUIRE(plan.has_value() == best.has_value());
            if (was_feasible && p.constraints.empty()) {
                CHECK(plan.has_value());  // monotone in T
            }
            if (!plan) {
                continue;
            }
            was_feasible = true;
            ++feasible;
            CHECK(group_paths_problem(m, p, plan->paths) == "");
            CHECK(plan->moves == best->moves);
            CHECK(plan->total_cost == best->penalties * cm.collision_penalty + best->moves);
            if (best->penalties == 0) {
                CHECK(plan->total_cost < cm.collision_penalty);
            }
        }
    }
    CHECK(feasible > 100);
}

TEST_CASE("min_group_makespan") {
    const GridMap open(5, 5);
    CHECK(min_group_makespan(open, {{1, 1}, {2, 3}}, {{1, 1}, {2, 3}}) == 0);
    CHECK(min_group_makespan(open, {{0, 0}}, {{4, 3}}) == 7);

    auto walled = GridMap(5, 5);
    for (int y = 0; y < 5; ++y) {
        walled.set_passable({2, y}, false);
    }
    CHECK_FALSE(min_group_makespan(walled, {{0, 0}}, {{4, 0}}).has_value());
    // Each goal is reachable from some start, but not as a matching.
    CHECK_FALSE(min_group_makespan(walled, {{0, 0}, {0, 1}}, {{1, 0}, {4, 0}}).has_value());
}

TEST_CASE("min_group_makespan through a doorway matches joint-state search") {
    // Two rooms joined by a one-cell doorway at (3,2).
    const auto m = parse_map(
        "type octile\nheight 5\nwidth 7\nmap\n"
        "...@...\n"
        "...@...\n"
        ".......\n"
        "...@...\n"
        "...@...\n");
    const std::vector<Cell> starts = {{2, 1}, {2, 3}};
    const std::vector<Cell> goals = {{4, 1}, {4, 3}};
    oracle::GroupSpec spec;
    spec.starts = starts;
    spec.goals = goals;
    const auto expected = oracle::min_makespan(m, {spec});
    REQUIRE(expected.has_value());
    CHECK(*expected == 5);
    CHECK(min_group_makespan(m, starts, goals) == expected);
    // Lower bound alone would say 4.
    CHECK(group_makespan_lower_bound(m, starts, goals) == 4);
}

TEST_CASE("min_group_makespan matches joint-state search on random maps") {
    testgen::Rng rng(17);
    for (int i = 0; i < 60; ++i) {
        const auto m = testgen::random_map(rng, testgen::draw(rng, 3, 6), testgen::draw(rng, 3, 6), 20);
        const auto comp = testgen::largest_component(m);
        const int k = testgen::draw(rng, 1, 3);
        if (static_cast<int>(comp.size()) < k + 1) {
            continue;
        }
        oracle::GroupSpec spec;
        spec.starts = testgen::pick_distinct(rng, comp, static_cast<std::size_t>(k));
        spec.goals = testgen::pick_distinct(rng, comp, static_cast<std::size_t>(k));
        CAPTURE(i);
        CHECK(min_group_makespan(m, spec.starts, spec.goals) == oracle::min_makespan(m, {spec}));
    }
}
