#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tapf {

struct Arc {
    int from = 0;
    int to = 0;
    std::int64_t capacity = 0;
    std::int64_t cost = 0;
};

// Directed network with non-negative integral capacities and costs.
class FlowNetwork {
public:
    FlowNetwork() = default;
    explicit FlowNetwork(int node_count) : node_count_(node_count) {}

    int add_node() { return node_count_++; }
    int add_nodes(int n) {
        const int first = node_count_;
        node_count_ += n;
        return first;
    }
    // Returns the arc id. Throws std::invalid_argument on negative capacity
    // or cost, or an out-of-range endpoint.
    int add_arc(int from, int to, std::int64_t capacity, std::int64_t cost);

    void set_terminals(int source, int sink);

    int node_count() const { return node_count_; }
    int source() const { return source_; }
    int sink() const { return sink_; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const Arc& arc(int id) const { return arcs_[static_cast<std::size_t>(id)]; }

private:
    int node_count_ = 0;
    int source_ = -1;
    int sink_ = -1;
    std::vector<Arc> arcs_;
};

struct FlowResult {
    std::int64_t value = 0;
    std::int64_t total_cost = 0;
    std::vector<std::int64_t> flow;  // per arc id

    friend bool operator==(const FlowResult&, const FlowResult&) = default;
};

// Successive shortest augmenting paths with Dijkstra on reduced costs.
// Ties among equal labels are settled by the smaller node id.
FlowResult min_cost_max_flow(const FlowNetwork& net);

// Splits a unit-capacity flow into source-to-sink node paths. At every node
// the lowest-id out-arc still carrying flow is taken. Throws std::logic_error
// if the support does not decompose into `value` paths.
std::vector<std::vector<int>> decompose_unit_paths(const FlowNetwork& net, const FlowResult& result);

}  // namespace tapf
