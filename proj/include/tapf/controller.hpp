#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/cbm.hpp"
#include "tapf/grid_map.hpp"
#include "tapf/metrics.hpp"
#include "tapf/scenario_io.hpp"

namespace tapf {

struct AgentState {
    int id = 0;
    int group = 0;
    Cell cell;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct GoalSpec {
    int issue_tick = 0;
    std::vector<std::vector<Cell>> goals;  // indexed by group id
};

struct CallRecord {
    int tick = 0;
    Window window;
    int makespan = 0;  // of the windowed plan
    double seconds = 0.0;
    bool widened = false;  // needed the doubled cap
};

struct SimState {
    int tick = 0;
    std::vector<AgentState> agents;
    std::vector<std::vector<Cell>> active_goals;  // indexed by group id
    std::vector<std::deque<Cell>> plans;          // per agent; front is the current cell
    std::deque<GoalSpec> pending_specs;           // ordered by issue_tick
    Metrics metrics;
    std::optional<Window> window;  // of the last replan
    std::optional<CallRecord> last_call;
    bool replan_requested = false;
    bool widened = false;  // the current spec needed the doubled cap; kept until the next spec
};

struct ControllerConfig {
    int k = 12;
    WindowConfig window;
    SearchConfig search;
};

class GoalSpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A replan that failed even with the widened window; the message carries the
// window and the instance.
class ReplanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tick engine. Agents are numbered in group order, starts in listed order.
// Active goals begin at the starts, so a fresh controller has nothing to do.
class Controller {
public:
    // Throws std::invalid_argument on bad group ids or starts.
    Controller(GridMap map, const std::vector<ScenarioGroup>& groups, ControllerConfig cfg);

    const GridMap& map() const { return map_; }
    const SimState& state() const { return state_; }
    const ControllerConfig& config() const { return cfg_; }

    // Replaces the active goals and schedules a replan for the current tick.
    // Throws GoalSpecError, leaving the state unchanged.
    void apply_goal_spec(const GoalSpec& spec);
    // Queues a spec for plan_phase to apply once tick >= issue_tick.
    void enqueue_spec(GoalSpec spec);

    bool replan_due() const;
    bool all_on_goals() const;

    // Applies due specs, then replans if due. Returns whether CBM ran.
    bool plan_phase();
    // Moves every agent one step along its plan and increments the tick.
    void advance_phase();
    void tick() {
        plan_phase();
        advance_phase();
    }

private:
    void check_spec(const GoalSpec& spec) const;
    void replan();

    GridMap map_;
    ControllerConfig cfg_;
    std::vector<int> group_sizes_;
    SimState state_;
};

// Observer for run_scenario, called once per tick after plan_phase.
using TickObserver = std::function<void(const SimState&, bool replanned)>;

// Goal specs of the schedule, issued at ticks 0, k, 2k, ...
// Throws PlacementError for a pattern that does not fit the map.
std::vector<GoalSpec> schedule_specs(const Scenario& scn, const GridMap& map);

// Runs until the last spec is issued and every agent rests on its goals.
// Throws TimeoutError past scn.max_ticks.
Metrics run_scenario(const Scenario& scn, const GridMap& map, const TickObserver& observer = {},
                     const SearchConfig& search = {});

}  // namespace tapf
