#include "tapf/group_planner.hpp"

#include <algorithm>
#include <string>

namespace tapf {

std::int64_t CostModel::penalty_for(int horizon, int total_agents, std::int64_t move_cost) {
    return static_cast<std::int64_t>(horizon + 1) * total_agents * std::max<std::int64_t>(move_cost, 1) + 1;
}

CostModel CostModel::for_horizon(int horizon, int total_agents) {
    CostModel cm;
    cm.collision_penalty = penalty_for(horizon, total_agents, cm.move_cost);
    return cm;
}

std::uint64_t PenaltyTable::key(Cell a, Cell b, int t) {
    std::uint64_t dir = 0;
    const int dx = b.x - a.x;
    const int dy = b.y - a.y;
    if (dx == 0 && dy == 0) {
        dir = 4;
    } else if (dx == 1 && dy == 0) {
        dir = 0;
    } else if (dx == 0 && dy == 1) {
        dir = 1;
    } else if (dx == -1 && dy == 0) {
        dir = 2;
    } else if (dx == 0 && dy == -1) {
        dir = 3;
    } else {
        throw std::invalid_argument("traversal between non-adjacent cells");
    }
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)) << 35) |
           (static_cast<std::uint64_t>(static_cast<std::uint16_t>(a.x)) << 19) |
           (static_cast<std::uint64_t>(static_cast<std::uint16_t>(a.y)) << 3) | dir;
}

void PenaltyTable::add_paths(const std::vector<std::vector<Cell>>& paths) {
    for (const auto& path : paths) {
        for (std::size_t t = 0; t < path.size(); ++t) {
            add_occupancy(path[t], static_cast<int>(t));
            if (t + 1 < path.size() && !(path[t] == path[t + 1])) {
                add_traversal(path[t + 1], path[t], static_cast<int>(t));
            }
        }
    }
}

std::optional<int> TimeExpandedNetwork::split_arc_of(const GridMap& map, Cell c, int t) const {
    if (!map.in_bounds(c) || t < 0 || t > horizon) {
        return std::nullopt;
    }
    const int a = split_arc[static_cast<std::size_t>(t * map.cell_count() + map.index(c))];
    if (a < 0) {
        return std::nullopt;
    }
    return a;
}

TimeExpandedNetwork build_time_expanded_network(const GridMap& map, const GroupProblem& p, const CostModel& cm,
                                                BuildOptions opts) {
    if (p.starts.size() != p.goals.size()) {
        throw std::invalid_argument("group problem needs as many goals as starts");
    }
    if (p.horizon < 0) {
        throw std::invalid_argument("negative horizon");
    }
    const int T = p.horizon;
    const int cells = map.cell_count();
    const auto layer = [cells](int t, int c) { return static_cast<std::size_t>(t * cells + c); };

    PenaltyTable forbidden;
    for (const auto& c : p.constraints) {
        if (c.kind == ConstraintKind::kVertex) {
            forbidden.add_occupancy(c.cell, c.t);
        } else {
            forbidden.add_traversal(c.cell, c.to, c.t);
        }
    }

    std::vector<int> from_start;
    std::vector<int> to_goal;
    if (opts.prune && !p.starts.empty()) {
        from_start = bfs_distances(map, p.starts).raw();
        to_goal = bfs_distances(map, p.goals).raw();
    }
    const auto keep = [&](int c, int t) {
        if (!map.passable(map.cell(c))) {
            return false;
        }
        if (from_start.empty()) {
            return true;
        }
        const int ds = from_start[static_cast<std::size_t>(c)];
        const int dg = to_goal[static_cast<std::size_t>(c)];
        return ds >= 0 && dg >= 0 && ds <= t && dg <= T - t;
    };

    TimeExpandedNetwork ten;
    ten.width = map.width();
    ten.horizon = T;
    ten.in_node.assign(static_cast<std::size_t>(cells) * static_cast<std::size_t>(T + 1), -1);
    ten.split_arc.assign(ten.in_node.size(), -1);
    FlowNetwork& net = ten.net;
    const int source = net.add_node();
    const int sink = net.add_node();
    ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kSource, -1, -1});
    ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kSink, -1, -1});
    net.set_terminals(source, sink);

    for (int t = 0; t <= T; ++t) {
        for (int c = 0; c < cells; ++c) {
            if (keep(c, t)) {
                const int in = net.add_nodes(2);
                ten.in_node[layer(t, c)] = in;
                ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kIn, c, t});
                ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kOut, c, t});
                ++ten.split_pairs;
            }
        }
    }
    const auto in_of = [&](Cell c, int t) { return ten.in_node[layer(t, map.index(c))]; };

    for (const auto& s : p.starts) {
        if (!map.passable(s)) {
            throw std::invalid_argument("start on impassable cell");
        }
        const int in = in_of(s, 0);
        if (in >= 0) {
            net.add_arc(source, in, 1, 0);
            ++ten.source_arcs;
        }
    }

    for (int t = 0; t <= T; ++t) {
        for (int c = 0; c < cells; ++c) {
            const int in = ten.in_node[layer(t, c)];
            const Cell cell = map.cell(c);
            if (in < 0 || forbidden.occupied(cell, t)) {
                continue;
            }
            const std::int64_t cost = p.penalties.occupied(cell, t) ? cm.collision_penalty : 0;
            ten.split_arc[layer(t, c)] = net.add_arc(in, in + 1, 1, cost);
        }
        if (t == T) {
            break;
        }
        for (int c = 0; c < cells; ++c) {
            const int here = ten.in_node[layer(t, c)];
            const int next = ten.in_node[layer(t + 1, c)];
            if (here >= 0 && next >= 0) {
                net.add_arc(here + 1, next, 1, cm.wait_cost);
                ++ten.wait_arcs;
            }
        }
        for (int c = 0; c < cells; ++c) {
            const Cell u = map.cell(c);
            if (!map.passable(u)) {
                continue;
            }
            for (const Cell v : {Cell{u.x + 1, u.y}, Cell{u.x, u.y + 1}}) {
                if (!map.passable(v)) {
                    continue;
                }
                const int u_now = in_of(u, t);
                const int v_now = in_of(v, t);
                const int u_next = in_of(u, t + 1);
                const int v_next = in_of(v, t + 1);
                const bool enter_u = u_now >= 0 && !forbidden.traversal(u, v, t);
                const bool enter_v = v_now >= 0 && !forbidden.traversal(v, u, t);
                if (!((enter_u && v_next >= 0) || (enter_v && u_next >= 0))) {
                    continue;
                }
                const int g1 = net.add_nodes(2);
                const int g2 = g1 + 1;
                ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kGadget, -1, t});
                ten.nodes.push_back({TimeExpandedNetwork::NodeKind::kGadget, -1, t});
                ++ten.gadgets;
                if (enter_u) {
                    net.add_arc(u_now + 1, g1, 1,
                                cm.move_cost + (p.penalties.traversal(u, v, t) ? cm.collision_penalty : 0));
                    ++ten.gadget_arcs;
                }
                if (enter_v) {
                    net.add_arc(v_now + 1, g1, 1,
                                cm.move_cost + (p.penalties.traversal(v, u, t) ? cm.collision_penalty : 0));
                    ++ten.gadget_arcs;
                }
                net.add_arc(g1, g2, 1, 0);
                ++ten.gadget_arcs;
                if (u_next >= 0) {
                    net.add_arc(g2, u_next, 1, 0);
                    ++ten.gadget_arcs;
                }
                if (v_next >= 0) {
                    net.add_arc(g2, v_next, 1, 0);
                    ++ten.gadget_arcs;
                }
            }
        }
    }

    for (const auto& g : p.goals) {
        if (!map.passable(g)) {
            throw std::invalid_argument("goal on impassable cell");
        }
        const int in = in_of(g, T);
        if (in >= 0) {
            net.add_arc(in + 1, sink, 1, 0);
            ++ten.sink_arcs;
        }
    }
    return ten;
}

std::optional<GroupPlan> solve_group(const GridMap& map, const GroupProblem& p, const CostModel& cm) {
    const std::size_t k = p.starts.size();
    if (k != p.goals.size()) {
        throw std::invalid_argument("group problem needs as many goals as starts");
    }
    GroupPlan plan;
    if (k == 0) {
        return plan;
    }
    const TimeExpandedNetwork ten = build_time_expanded_network(map, p, cm, BuildOptions{.prune = true});
    const FlowResult flow = min_cost_max_flow(ten.net);
    if (flow.value != static_cast<std::int64_t>(k)) {
        return std::nullopt;
    }
    const auto node_paths = decompose_unit_paths(ten.net, flow);
    const auto T = static_cast<std::size_t>(p.horizon);

    plan.paths.paths.assign(k, {});
    std::vector<std::uint8_t> assigned(k, 0);
    for (const auto& np : node_paths) {
        std::vector<Cell> cells(T + 1, Cell{-1, -1});
        std::size_t filled = 0;
        for (const int node : np) {
            const auto& info = ten.nodes[static_cast<std::size_t>(node)];
            if (info.kind == TimeExpandedNetwork::NodeKind::kIn) {
                cells[static_cast<std::size_t>(info.t)] = map.cell(info.cell);
                ++filled;
            }
        }
        if (filled != T + 1) {
            throw std::logic_error("decoded path does not cover every time step");
        }
        std::size_t agent = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (!assigned[i] && p.starts[i] == cells[0]) {
                agent = i;
                break;
            }
        }
        if (agent == k) {
            throw std::logic_error("decoded path does not begin at an unassigned start");
        }
        assigned[agent] = 1;
        for (std::size_t t = 0; t < T; ++t) {
            if (!(cells[t] == cells[t + 1])) {
                ++plan.moves;
            }
        }
        plan.paths.paths[agent] = std::move(cells);
    }
    plan.total_cost = flow.total_cost;
    return plan;
}

std::optional<int> group_makespan_lower_bound(const GridMap& map, const std::vector<Cell>& starts,
                                              const std::vector<Cell>& goals) {
    if (starts.empty()) {
        return 0;
    }
    const DistanceField d = bfs_distances(map, starts);
    int bound = 0;
    for (const auto& g : goals) {
        if (!map.passable(g) || !d.reachable(g)) {
            return std::nullopt;
        }
        bound = std::max(bound, d.at(g));
    }
    return bound;
}

namespace {

// Each connected component must hold as many goals as starts.
bool components_balanced(const GridMap& map, const std::vector<Cell>& starts, const std::vector<Cell>& goals) {
    std::vector<int> label(static_cast<std::size_t>(map.cell_count()), -1);
    std::vector<int> balance;
    const auto label_of = [&](Cell c) {
        int& l = label[static_cast<std::size_t>(map.index(c))];
        if (l < 0) {
            const Cell src[1] = {c};
            const DistanceField d = bfs_distances(map, src);
            const int id = static_cast<int>(balance.size());
            balance.push_back(0);
            for (std::size_t i = 0; i < label.size(); ++i) {
                if (d.raw()[i] != DistanceField::kUnreachable) {
                    label[i] = id;
                }
            }
        }
        return l;
    };
    for (const auto& s : starts) {
        ++balance[static_cast<std::size_t>(label_of(s))];
    }
    for (const auto& g : goals) {
        --balance[static_cast<std::size_t>(label_of(g))];
    }
    return std::all_of(balance.begin(), balance.end(), [](int b) { return b == 0; });
}

}  // namespace

std::optional<int> min_group_makespan(const GridMap& map, const std::vector<Cell>& starts,
                                      const std::vector<Cell>& goals, int max_horizon, int from) {
    if (starts.size() != goals.size()) {
        throw std::invalid_argument("group needs as many goals as starts");
    }
    for (const auto& c : starts) {
        if (!map.passable(c)) {
            throw std::invalid_argument("start on impassable cell");
        }
    }
    for (const auto& c : goals) {
        if (!map.passable(c)) {
            throw std::invalid_argument("goal on impassable cell");
        }
    }
    const auto bound = group_makespan_lower_bound(map, starts, goals);
    if (!bound || !components_balanced(map, starts, goals)) {
        return std::nullopt;
    }
    GroupProblem p;
    p.starts = starts;
    p.goals = goals;
    for (int T = std::max(*bound, from); T <= max_horizon; ++T) {
        p.horizon = T;
        if (solve_group(map, p, CostModel{})) {
            return T;
        }
    }
    throw ResourceLimitError("group makespan exceeds horizon limit " + std::to_string(max_horizon));
}

}  // namespace tapf
