#include "tapf/controller.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

namespace tapf {

namespace {

std::string cell_text(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

std::string window_text(const Window& w) {
    return "[" + std::to_string(w.min_x) + "," + std::to_string(w.min_y) + " .. " + std::to_string(w.max_x) + "," +
           std::to_string(w.max_y) + "]";
}

std::string dump_instance(const std::vector<AgentState>& agents, const std::vector<std::vector<Cell>>& goals) {
    std::ostringstream out;
    for (std::size_t g = 0; g < goals.size(); ++g) {
        out << "\n  group " << g << " starts";
        for (const auto& a : agents) {
            if (a.group == static_cast<int>(g)) {
                out << " " << cell_text(a.cell);
            }
        }
        out << " goals";
        for (const auto& c : goals[g]) {
            out << " " << cell_text(c);
        }
    }
    return out.str();
}

std::vector<Cell> sorted_cells(std::vector<Cell> v) {
    std::sort(v.begin(), v.end(), row_major_less);
    return v;
}

}  // namespace

Controller::Controller(GridMap map, const std::vector<ScenarioGroup>& groups, ControllerConfig cfg)
    : map_(std::move(map)), cfg_(std::move(cfg)) {
    if (cfg_.k < 1) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (groups.empty()) {
        throw std::invalid_argument("no groups");
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].id != static_cast<int>(g)) {
            throw std::invalid_argument("group ids must be 0, 1, ... in order");
        }
        if (groups[g].starts.empty()) {
            throw std::invalid_argument("group " + std::to_string(g) + " has no agents");
        }
        group_sizes_.push_back(static_cast<int>(groups[g].starts.size()));
        state_.active_goals.push_back(groups[g].starts);
        for (const auto& c : groups[g].starts) {
            if (!map_.passable(c)) {
                throw std::invalid_argument("start " + cell_text(c) + " is not passable");
            }
            if (!seen.insert({c.x, c.y}).second) {
                throw std::invalid_argument("start " + cell_text(c) + " used twice");
            }
            const int id = static_cast<int>(state_.agents.size());
            state_.agents.push_back({id, static_cast<int>(g), c});
        }
    }
    state_.plans.resize(state_.agents.size());
}

void Controller::check_spec(const GoalSpec& spec) const {
    if (spec.goals.size() != group_sizes_.size()) {
        throw GoalSpecError("spec has goals for " + std::to_string(spec.goals.size()) + " groups, expected " +
                            std::to_string(group_sizes_.size()));
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t g = 0; g < spec.goals.size(); ++g) {
        if (static_cast<int>(spec.goals[g].size()) != group_sizes_[g]) {
            throw GoalSpecError("group " + std::to_string(g) + " has " + std::to_string(group_sizes_[g]) +
                                " agents but " + std::to_string(spec.goals[g].size()) + " goals");
        }
        for (const auto& c : spec.goals[g]) {
            if (!map_.passable(c)) {
                throw GoalSpecError("goal " + cell_text(c) + " is not passable");
            }
            if (!seen.insert({c.x, c.y}).second) {
                throw GoalSpecError("goal " + cell_text(c) + " used twice");
            }
        }
    }
}

void Controller::apply_goal_spec(const GoalSpec& spec) {
    check_spec(spec);
    state_.active_goals = spec.goals;
    state_.replan_requested = true;
    state_.widened = false;
}

void Controller::enqueue_spec(GoalSpec spec) {
    check_spec(spec);
    auto it = std::upper_bound(state_.pending_specs.begin(), state_.pending_specs.end(), spec.issue_tick,
                               [](int t, const GoalSpec& s) { return t < s.issue_tick; });
    state_.pending_specs.insert(it, std::move(spec));
}

bool Controller::all_on_goals() const {
    for (std::size_t g = 0; g < group_sizes_.size(); ++g) {
        std::vector<Cell> cells;
        for (const auto& a : state_.agents) {
            if (a.group == static_cast<int>(g)) {
                cells.push_back(a.cell);
            }
        }
        if (sorted_cells(std::move(cells)) != sorted_cells(state_.active_goals[g])) {
            return false;
        }
    }
    return true;
}

bool Controller::replan_due() const {
    return state_.replan_requested || (state_.tick % cfg_.k == 0 && !all_on_goals());
}

bool Controller::plan_phase() {
    while (!state_.pending_specs.empty() && state_.pending_specs.front().issue_tick <= state_.tick) {
        apply_goal_spec(state_.pending_specs.front());
        state_.pending_specs.pop_front();
    }
    if (!replan_due()) {
        return false;
    }
    replan();
    state_.replan_requested = false;
    return true;
}

void Controller::replan() {
    std::vector<Cell> cells;
    cells.reserve(state_.agents.size());
    for (const auto& a : state_.agents) {
        cells.push_back(a.cell);
    }

    double seconds = 0.0;
    std::string failure;
    std::optional<Window> tried;
    std::optional<std::pair<Solution, Window>> idle;  // zero-move plan kept in case widening fails
    auto install = [&](const Solution& sol, const Window& w, bool widened) {
        for (const auto& p : sol.paths) {
            auto& plan = state_.plans[static_cast<std::size_t>(p.agent)];
            plan.clear();
            for (const auto& c : p.cells) {
                plan.push_back(w.to_global(c));
            }
        }
        state_.window = w;
        state_.last_call = CallRecord{state_.tick, w, sol.makespan, seconds, widened};
        state_.metrics.cbm_calls += 1;
        state_.metrics.call_seconds.push_back(seconds);
    };

    WindowConfig wc = cfg_.window;
    for (int attempt = state_.widened ? 1 : 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            // Doubled cap, and the window grown to it so that detours around
            // the bounding box become visible.
            wc.cap_w *= 2;
            wc.cap_h *= 2;
            wc.margin = std::max(wc.cap_w, wc.cap_h);
        }
        WindowResult wr;
        try {
            wr = compute_window(map_, cells, state_.active_goals, wc);
        } catch (const WindowError& e) {
            failure = e.what();
            continue;
        }
        if (tried && *tried == wr.window) {
            break;  // the wider cap changed nothing
        }
        tried = wr.window;

        TapfInstance inst{crop(map_, wr.window), {}};
        for (std::size_t g = 0; g < wr.goals.size(); ++g) {
            TapfGroup tg{static_cast<int>(g), {}, {}};
            for (const auto& a : state_.agents) {
                if (a.group == static_cast<int>(g)) {
                    tg.starts.push_back(wr.window.to_local(a.cell));
                }
            }
            for (const auto& c : wr.goals[g]) {
                tg.goals.push_back(wr.window.to_local(c));
            }
            inst.groups.push_back(std::move(tg));
        }

        Solution sol;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            sol = cbm_solve(inst, cfg_.search);
        } catch (const SolverError& e) {
            seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            failure = std::string(e.what()) + " in window " + window_text(wr.window);
            continue;
        }
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (sol.makespan == 0 && attempt == 0 && !all_on_goals()) {
            // Every projected goal is already occupied; only a wider window can make progress.
            idle.emplace(std::move(sol), wr.window);
            continue;
        }
        state_.widened = attempt > 0;
        install(sol, wr.window, attempt > 0);
        return;
    }
    if (idle) {
        install(idle->first, idle->second, false);
        return;
    }
    throw ReplanError("replan at tick " + std::to_string(state_.tick) + " failed: " + failure +
                      dump_instance(state_.agents, state_.active_goals));
}

void Controller::advance_phase() {
    std::vector<Cell> before;
    std::vector<Cell> after;
    for (auto& a : state_.agents) {
        before.push_back(a.cell);
        auto& plan = state_.plans[static_cast<std::size_t>(a.id)];
        if (plan.size() > 1) {
            plan.pop_front();
            a.cell = plan.front();
        }
        after.push_back(a.cell);
    }
    auto v = check_transition(map_, before, after, state_.tick);
    const auto occ = check_positions(map_, after, state_.tick + 1);
    v.insert(v.end(), occ.begin(), occ.end());
    if (!v.empty()) {
        throw std::logic_error("executed plan is invalid: " + describe(v.front()));
    }
    ++state_.tick;
}

std::vector<GoalSpec> schedule_specs(const Scenario& scn, const GridMap& map) {
    std::vector<GoalSpec> out;
    for (std::size_t i = 0; i < scn.schedule.size(); ++i) {
        const auto& e = scn.schedule[i];
        const auto* p = scn.find_pattern(e.pattern);
        if (p == nullptr) {
            throw std::invalid_argument("unknown pattern '" + e.pattern + "'");
        }
        out.push_back({static_cast<int>(i) * scn.k, resolve_pattern(*p, e.anchor, e.rotation, map)});
    }
    return out;
}

Metrics run_scenario(const Scenario& scn, const GridMap& map, const TickObserver& observer,
                     const SearchConfig& search) {
    Controller c(map, scn.groups, ControllerConfig{scn.k, scn.window, search});
    for (auto& spec : schedule_specs(scn, map)) {
        c.enqueue_spec(std::move(spec));
    }
    while (true) {
        const bool replanned = c.plan_phase();
        if (observer) {
            observer(c.state(), replanned);
        }
        if (c.state().pending_specs.empty() && c.all_on_goals()) {
            Metrics m = c.state().metrics;
            m.makespan = c.state().tick;
            return m;
        }
        if (c.state().tick >= scn.max_ticks) {
            throw TimeoutError("scenario did not finish within " + std::to_string(scn.max_ticks) + " ticks");
        }
        c.advance_phase();
    }
}

}  // namespace tapf
