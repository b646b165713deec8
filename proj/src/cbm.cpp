#include "tapf/cbm.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <set>
#include <unordered_set>

namespace tapf {

void check_instance(const TapfInstance& instance) {
    std::unordered_set<Cell, CellHash> starts;
    std::unordered_set<Cell, CellHash> goals;
    std::unordered_set<int> ids;
    for (const auto& g : instance.groups) {
        if (!ids.insert(g.id).second) {
            throw std::invalid_argument("duplicate group id " + std::to_string(g.id));
        }
        if (g.starts.size() != g.goals.size()) {
            throw std::invalid_argument("group " + std::to_string(g.id) + " has " + std::to_string(g.starts.size()) +
                                        " starts but " + std::to_string(g.goals.size()) + " goals");
        }
        for (const auto& c : g.starts) {
            if (!instance.map.passable(c)) {
                throw std::invalid_argument("start on impassable cell in group " + std::to_string(g.id));
            }
            if (!starts.insert(c).second) {
                throw std::invalid_argument("duplicate start cell");
            }
        }
        for (const auto& c : g.goals) {
            if (!instance.map.passable(c)) {
                throw std::invalid_argument("goal on impassable cell in group " + std::to_string(g.id));
            }
            if (!goals.insert(c).second) {
                throw std::invalid_argument("duplicate goal cell");
            }
        }
    }
}

namespace {

struct Occupant {
    Cell cell;
    int group;
    int position;  // plan position
    std::size_t agent;
};

std::size_t horizon_of(const std::vector<GroupPaths>& plans) {
    for (const auto& p : plans) {
        if (!p.paths.empty()) {
            return p.paths.front().size();
        }
    }
    return 0;
}

std::vector<Occupant> occupants_at(const std::vector<GroupPaths>& plans, const std::vector<int>& group_ids,
                                   std::size_t t) {
    std::vector<Occupant> out;
    for (std::size_t g = 0; g < plans.size(); ++g) {
        for (std::size_t a = 0; a < plans[g].paths.size(); ++a) {
            out.push_back({plans[g].paths[a][t], group_ids[g], static_cast<int>(g), a});
        }
    }
    std::sort(out.begin(), out.end(), [](const Occupant& a, const Occupant& b) {
        if (!(a.cell == b.cell)) {
            return row_major_less(a.cell, b.cell);
        }
        return a.group < b.group;
    });
    return out;
}

struct Swap {
    Cell from;
    Cell to;
    int g1;
    int g2;
};

// Inter-group swaps between t and t+1, each reported once from the
// row-major smaller from-cell.
std::vector<Swap> swaps_at(const std::vector<GroupPaths>& plans, const std::vector<int>& group_ids, std::size_t t) {
    struct Move {
        Cell from;
        Cell to;
        int group;
    };
    std::vector<Move> moves;
    for (std::size_t g = 0; g < plans.size(); ++g) {
        for (const auto& path : plans[g].paths) {
            if (!(path[t] == path[t + 1])) {
                moves.push_back({path[t], path[t + 1], group_ids[g]});
            }
        }
    }
    std::vector<Swap> out;
    for (std::size_t i = 0; i < moves.size(); ++i) {
        for (std::size_t j = i + 1; j < moves.size(); ++j) {
            const auto& a = moves[i];
            const auto& b = moves[j];
            if (a.group == b.group || !(a.from == b.to) || !(a.to == b.from)) {
                continue;
            }
            if (row_major_less(a.from, b.from)) {
                out.push_back({a.from, a.to, a.group, b.group});
            } else {
                out.push_back({b.from, b.to, b.group, a.group});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Swap& a, const Swap& b) {
        if (!(a.from == b.from)) {
            return row_major_less(a.from, b.from);
        }
        return a.g1 != b.g1 ? a.g1 < b.g1 : a.g2 < b.g2;
    });
    return out;
}

}  // namespace

std::optional<Conflict> detect_first_conflict(const std::vector<GroupPaths>& plans,
                                              const std::vector<int>& group_ids) {
    const std::size_t steps = horizon_of(plans);
    for (std::size_t t = 0; t < steps; ++t) {
        const auto occ = occupants_at(plans, group_ids, t);
        for (std::size_t i = 0; i + 1 < occ.size(); ++i) {
            for (std::size_t j = i + 1; j < occ.size() && occ[j].cell == occ[i].cell; ++j) {
                if (occ[j].group != occ[i].group) {
                    return Conflict{occ[i].group, occ[j].group, ConstraintKind::kVertex, occ[i].cell, occ[i].cell,
                                    static_cast<int>(t)};
                }
            }
        }
        if (t + 1 < steps) {
            const auto swaps = swaps_at(plans, group_ids, t);
            if (!swaps.empty()) {
                const auto& s = swaps.front();
                return Conflict{s.g1, s.g2, ConstraintKind::kEdge, s.from, s.to, static_cast<int>(t)};
            }
        }
    }
    return std::nullopt;
}

int count_conflicts(const std::vector<GroupPaths>& plans, const std::vector<int>& group_ids) {
    const std::size_t steps = horizon_of(plans);
    int count = 0;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto occ = occupants_at(plans, group_ids, t);
        for (std::size_t i = 0; i < occ.size(); ++i) {
            for (std::size_t j = i + 1; j < occ.size() && occ[j].cell == occ[i].cell; ++j) {
                if (occ[j].group != occ[i].group) {
                    ++count;
                }
            }
        }
        if (t + 1 < steps) {
            count += static_cast<int>(swaps_at(plans, group_ids, t).size());
        }
    }
    return count;
}

std::pair<Constraint, Constraint> branch(const Conflict& c) {
    if (c.kind == ConstraintKind::kVertex) {
        return {Constraint::vertex(c.g1, c.cell, c.t), Constraint::vertex(c.g2, c.cell, c.t)};
    }
    return {Constraint::edge(c.g1, c.cell, c.to, c.t), Constraint::edge(c.g2, c.to, c.cell, c.t)};
}

namespace {

struct OpenEntry {
    int conflicts;
    std::int64_t seq;
    std::size_t node;

    bool operator>(const OpenEntry& o) const {
        return conflicts != o.conflicts ? conflicts > o.conflicts : seq > o.seq;
    }
};

class HorizonSearch {
public:
    HorizonSearch(const TapfInstance& instance, int horizon, int total_agents, SearchStats& stats,
                  const SearchConfig& cfg)
        : instance_(instance),
          horizon_(horizon),
          cm_(CostModel::for_horizon(horizon, total_agents)),
          stats_(stats),
          cfg_(cfg) {
        for (const auto& g : instance.groups) {
            group_ids_.push_back(g.id);
        }
    }

    std::optional<std::vector<GroupPaths>> run() {
        CTNode root;
        root.plans.resize(instance_.groups.size());
        for (std::size_t g = 0; g < instance_.groups.size(); ++g) {
            PenaltyTable penalties;
            for (std::size_t h = 0; h < g; ++h) {
                penalties.add_paths(root.plans[h].paths);
            }
            auto plan = plan_group(g, {}, std::move(penalties));
            if (!plan) {
                return std::nullopt;
            }
            root.plans[g] = std::move(*plan);
        }
        push(std::move(root));

        while (!open_.empty()) {
            const OpenEntry top = open_.top();
            open_.pop();
            CTNode node = std::move(*nodes_[top.node]);
            nodes_[top.node].reset();
            if (++stats_.expansions > cfg_.max_expansions) {
                throw ResourceLimitError("collision-tree expansion limit exceeded");
            }
            if (cfg_.on_expand) {
                cfg_.on_expand(node);
            }
            const auto conflict = detect_first_conflict(node.plans, group_ids_);
            if (!conflict) {
                return std::move(node.plans);
            }
            const auto [first, second] = branch(*conflict);
            for (const Constraint& c : {first, second}) {
                if (std::find(node.constraints.begin(), node.constraints.end(), c) != node.constraints.end()) {
                    continue;
                }
                const std::size_t g = position_of(c.group);
                CTNode child;
                child.constraints = node.constraints;
                child.constraints.push_back(c);
                // Different branching orders reach the same constraint set.
                if (!seen_.insert(key_of(child.constraints)).second) {
                    continue;
                }
                std::vector<Constraint> own;
                for (const auto& k : child.constraints) {
                    if (k.group == c.group) {
                        own.push_back(k);
                    }
                }
                PenaltyTable penalties;
                for (std::size_t h = 0; h < node.plans.size(); ++h) {
                    if (h != g) {
                        penalties.add_paths(node.plans[h].paths);
                    }
                }
                auto plan = plan_group(g, std::move(own), std::move(penalties));
                if (!plan) {
                    continue;
                }
                child.plans = node.plans;
                child.plans[g] = std::move(*plan);
                push(std::move(child));
            }
        }
        return std::nullopt;
    }

private:
    std::optional<GroupPaths> plan_group(std::size_t g, std::vector<Constraint> constraints, PenaltyTable penalties) {
        GroupProblem p;
        p.starts = instance_.groups[g].starts;
        p.goals = instance_.groups[g].goals;
        p.horizon = horizon_;
        p.constraints = std::move(constraints);
        p.penalties = std::move(penalties);
        ++stats_.group_solves;
        auto plan = solve_group(instance_.map, p, cm_);
        if (!plan) {
            return std::nullopt;
        }
        return std::move(plan->paths);
    }

    using Key = std::vector<std::array<int, 7>>;

    static Key key_of(const std::vector<Constraint>& cs) {
        Key k;
        k.reserve(cs.size());
        for (const auto& c : cs) {
            k.push_back({c.t, c.group, static_cast<int>(c.kind), c.cell.x, c.cell.y, c.to.x, c.to.y});
        }
        std::sort(k.begin(), k.end());
        return k;
    }

    std::size_t position_of(int group) const {
        return static_cast<std::size_t>(std::find(group_ids_.begin(), group_ids_.end(), group) - group_ids_.begin());
    }

    void push(CTNode node) {
        node.conflict_count = count_conflicts(node.plans, group_ids_);
        const std::size_t slot = nodes_.size();
        open_.push({node.conflict_count, seq_++, slot});
        nodes_.emplace_back(std::move(node));
    }

    const TapfInstance& instance_;
    int horizon_;
    CostModel cm_;
    SearchStats& stats_;
    const SearchConfig& cfg_;
    std::vector<int> group_ids_;
    std::vector<std::optional<CTNode>> nodes_;
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open_;
    std::int64_t seq_ = 0;
    std::set<Key> seen_;
};

}  // namespace

Solution cbm_solve(const TapfInstance& instance, const SearchConfig& cfg, SearchStats* stats_out) {
    check_instance(instance);
    SearchStats stats;
    int total_agents = 0;
    int lower = 0;
    for (const auto& g : instance.groups) {
        total_agents += static_cast<int>(g.starts.size());
        const auto t = min_group_makespan(instance.map, g.starts, g.goals, cfg.max_horizon);
        if (!t) {
            throw UnsolvableError("group " + std::to_string(g.id) + " cannot reach its goals");
        }
        lower = std::max(lower, *t);
    }
    // Every plan also solves the problem with the groups of a subset merged,
    // so merged makespans are lower bounds too. The whole team goes first;
    // it is usually the tightest.
    const std::size_t n = instance.groups.size();
    std::vector<std::vector<std::size_t>> subsets(1);
    for (std::size_t g = 0; g < n; ++g) {
        subsets.front().push_back(g);
    }
    if (n <= 4) {
        for (unsigned m = 1; m + 1 < (1u << n); ++m) {
            if ((m & (m - 1)) == 0) {
                continue;
            }
            subsets.emplace_back();
            for (std::size_t g = 0; g < n; ++g) {
                if ((m >> g) & 1u) {
                    subsets.back().push_back(g);
                }
            }
        }
    } else {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                subsets.push_back({a, b});
            }
        }
    }
    if (n > 1) {
        for (const auto& subset : subsets) {
            std::vector<Cell> starts;
            std::vector<Cell> goals;
            for (std::size_t g : subset) {
                const auto& grp = instance.groups[g];
                starts.insert(starts.end(), grp.starts.begin(), grp.starts.end());
                goals.insert(goals.end(), grp.goals.begin(), grp.goals.end());
            }
            const auto t = min_group_makespan(instance.map, starts, goals, cfg.max_horizon, lower);
            if (!t) {
                throw UnsolvableError("groups cannot reach their goals together");
            }
            lower = std::max(lower, *t);
        }
    }
    stats.lower_bound = lower;

    for (int T = lower; T <= cfg.max_horizon; ++T) {
        ++stats.horizons_tried;
        HorizonSearch search(instance, T, total_agents, stats, cfg);
        std::optional<std::vector<GroupPaths>> plans;
        try {
            plans = search.run();
        } catch (...) {
            if (stats_out) {
                *stats_out = stats;
            }
            throw;
        }
        if (!plans) {
            continue;
        }
        Solution s;
        s.makespan = T;
        int agent = 0;
        for (std::size_t g = 0; g < instance.groups.size(); ++g) {
            for (auto& cells : (*plans)[g].paths) {
                s.paths.push_back({agent++, instance.groups[g].id, std::move(cells)});
            }
        }
        if (stats_out) {
            *stats_out = stats;
        }
        return s;
    }
    if (stats_out) {
        *stats_out = stats;
    }
    throw ResourceLimitError("makespan exceeds horizon limit " + std::to_string(cfg.max_horizon));
}

std::vector<Violation> validate_solution(const TapfInstance& instance, const Solution& s) {
    std::vector<Violation> out;
    struct Expected {
        int group;
        Cell start;
    };
    std::vector<Expected> agents;
    for (const auto& g : instance.groups) {
        for (const auto& c : g.starts) {
            agents.push_back({g.id, c});
        }
    }
    if (s.paths.size() != agents.size()) {
        out.push_back({Violation::Kind::kHorizon, -1, -1, -1,
                       "expected " + std::to_string(agents.size()) + " paths, got " + std::to_string(s.paths.size())});
        return out;
    }
    const auto len = static_cast<std::size_t>(s.makespan) + 1;
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
        const auto& p = s.paths[i];
        const int id = static_cast<int>(i);
        if (p.agent != id || p.group != agents[i].group) {
            out.push_back({Violation::Kind::kHorizon, -1, id, -1, "agent/group tag mismatch"});
        }
        if (s.makespan < 0 || p.cells.size() != len) {
            out.push_back({Violation::Kind::kHorizon, -1, id, -1,
                           "path length " + std::to_string(p.cells.size()) + " for makespan " +
                               std::to_string(s.makespan)});
        }
        if (p.cells.empty() || !(p.cells.front() == agents[i].start)) {
            out.push_back({Violation::Kind::kStart, 0, id, -1, "path does not begin at the agent's start"});
        }
    }
    if (!out.empty()) {
        return out;
    }
    std::vector<Cell> before(agents.size());
    std::vector<Cell> after(agents.size());
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t a = 0; a < agents.size(); ++a) {
            after[a] = s.paths[a].cells[t];
        }
        auto v = check_positions(instance.map, after, static_cast<int>(t));
        out.insert(out.end(), v.begin(), v.end());
        if (t > 0) {
            auto m = check_transition(instance.map, before, after, static_cast<int>(t - 1));
            out.insert(out.end(), m.begin(), m.end());
        }
        std::swap(before, after);
    }
    std::size_t first = 0;
    for (const auto& g : instance.groups) {
        std::vector<Cell> ends;
        for (std::size_t a = first; a < first + g.starts.size(); ++a) {
            ends.push_back(s.paths[a].cells.back());
        }
        first += g.starts.size();
        auto goals = g.goals;
        std::sort(ends.begin(), ends.end(), row_major_less);
        std::sort(goals.begin(), goals.end(), row_major_less);
        if (ends != goals) {
            out.push_back({Violation::Kind::kGoalCoverage, s.makespan, -1, -1,
                           "group " + std::to_string(g.id) + " does not end on its goal set"});
        }
    }
    return out;
}

}  // namespace tapf
