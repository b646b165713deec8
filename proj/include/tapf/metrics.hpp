#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

namespace tapf {

// Per-run counters: final makespan, number of planner calls and the wall
// time of each call in seconds.
struct Metrics {
    int makespan = -1;  // -1 until the run completes
    int cbm_calls = 0;
    std::vector<double> call_seconds;

    bool complete() const { return makespan >= 0; }
    double average_seconds() const {
        return call_seconds.empty() ? 0.0
                                    : std::accumulate(call_seconds.begin(), call_seconds.end(), 0.0) /
                                          static_cast<double>(call_seconds.size());
    }
    double max_seconds() const {
        return call_seconds.empty() ? 0.0 : *std::max_element(call_seconds.begin(), call_seconds.end());
    }
};

}  // namespace tapf
