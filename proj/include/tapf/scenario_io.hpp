#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tapf/grid_map.hpp"
#include "tapf/metrics.hpp"

namespace tapf {

struct Offset {
    int dx = 0;
    int dy = 0;

    friend bool operator==(const Offset&, const Offset&) = default;
};

// Goal layout relative to an anchor; one offset list per group, indexed by
// group id.
struct GoalPattern {
    std::string name;
    std::vector<std::vector<Offset>> offsets;

    friend bool operator==(const GoalPattern&, const GoalPattern&) = default;
};

struct ScheduleEntry {
    std::string pattern;
    Cell anchor;
    int rotation = 0;  // degrees, a multiple of 90

    friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct ScenarioGroup {
    int id = 0;
    std::string name;
    std::vector<Cell> starts;

    friend bool operator==(const ScenarioGroup&, const ScenarioGroup&) = default;
};

struct Scenario {
    std::string map_path;
    std::vector<ScenarioGroup> groups;
    std::vector<GoalPattern> patterns;
    std::vector<ScheduleEntry> schedule;
    int k = 12;
    WindowConfig window;
    int max_ticks = 10000;

    const GoalPattern* find_pattern(std::string_view name) const;

    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.map_path == b.map_path && a.groups == b.groups && a.patterns == b.patterns &&
               a.schedule == b.schedule && a.k == b.k && a.window.cap_w == b.window.cap_w &&
               a.window.cap_h == b.window.cap_h && a.window.margin == b.window.margin && a.max_ticks == b.max_ticks;
    }
};

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Parses and validates the `tapf-scenario 1` text format (docs/scenario_format.md).
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);

// Checks group ids, start distinctness, pattern shapes and schedule
// references. Throws ScenarioError.
void validate_scenario(const Scenario& s);

class PlacementError : public std::runtime_error {
public:
    PlacementError(const std::string& what, std::vector<Cell> cells)
        : std::runtime_error(what), cells_(std::move(cells)) {}
    const std::vector<Cell>& cells() const { return cells_; }

private:
    std::vector<Cell> cells_;
};

// Quarter-turn rotation in screen coordinates (y grows downward):
// 90 maps (dx, dy) to (-dy, dx).
Offset rotate(Offset o, int rotation);

// Per-group goal cells. Throws PlacementError listing every cell that is
// blocked or out of bounds, std::invalid_argument for a bad rotation.
std::vector<std::vector<Cell>> resolve_pattern(const GoalPattern& p, Cell anchor, int rotation, const GridMap& map);

struct MetricsRow {
    std::string label;
    Metrics metrics;
};

// Seconds with three decimals, halves rounded up.
std::string format_seconds(double seconds);

// `label,makespan,cbm_calls,avg_time_s,max_time_s`, timing columns last.
std::string write_metrics_csv(const std::vector<MetricsRow>& rows);
std::string write_metrics_table(const std::vector<MetricsRow>& rows);

}  // namespace tapf
