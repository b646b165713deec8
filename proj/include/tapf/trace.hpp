#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/controller.hpp"
#include "tapf/grid_map.hpp"
#include "tapf/validator.hpp"

namespace tapf {

// JSON lines: a header object carrying the map and the agent groups, then one
// object per tick. Only `cbm_ms` depends on timing.
struct TraceTick {
    int tick = 0;
    std::vector<Cell> agents;
    std::vector<std::vector<Cell>> goals;
    std::optional<Window> window;
    bool replanned = false;
    int cbm_calls = 0;
    std::optional<double> cbm_ms;  // only on replanning ticks
};

struct Trace {
    GridMap map{1, 1};
    std::vector<int> agent_groups;
    std::string label;
    std::vector<TraceTick> ticks;
};

class TraceParseError : public std::runtime_error {
public:
    TraceParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

std::string trace_header_line(const GridMap& map, const std::vector<int>& agent_groups, const std::string& label);
std::string trace_tick_line(const SimState& state, bool replanned);

// Writes a header, then a line per observed tick.
class TraceWriter {
public:
    TraceWriter(std::ostream& out, const GridMap& map, const std::vector<ScenarioGroup>& groups,
                const std::string& label);
    void operator()(const SimState& state, bool replanned);

private:
    std::ostream* out_;
};

// Throws TraceParseError, also when the trace is empty or a line is cut off.
Trace read_trace(std::istream& in);

// Re-checks positions and moves of every tick against the embedded map.
std::vector<Violation> validate_trace(const Trace& t);

// The trace with timing keys removed, for determinism comparisons.
std::string strip_timing(const std::string& trace_text);

}  // namespace tapf
