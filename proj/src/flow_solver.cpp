#include "tapf/flow_solver.hpp"

#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

namespace tapf {

int FlowNetwork::add_arc(int from, int to, std::int64_t capacity, std::int64_t cost) {
    if (from < 0 || from >= node_count_ || to < 0 || to >= node_count_) {
        throw std::invalid_argument("arc endpoint out of range");
    }
    if (capacity < 0 || cost < 0) {
        throw std::invalid_argument("arc capacity and cost must be non-negative");
    }
    arcs_.push_back({from, to, capacity, cost});
    return static_cast<int>(arcs_.size()) - 1;
}

void FlowNetwork::set_terminals(int source, int sink) {
    if (source < 0 || source >= node_count_ || sink < 0 || sink >= node_count_) {
        throw std::invalid_argument("terminal out of range");
    }
    if (source == sink) {
        throw std::invalid_argument("source and sink must differ");
    }
    source_ = source;
    sink_ = sink;
}

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Residual edge 2i is arc i forward, 2i+1 its reverse.
struct Residual {
    std::vector<int> head;
    std::vector<int> offsets;  // CSR over residual edges per node
    std::vector<int> edges;
    std::vector<std::int64_t> cap;
    std::vector<std::int64_t> cost;
};

Residual build_residual(const FlowNetwork& net) {
    Residual r;
    const auto& arcs = net.arcs();
    const std::size_t m = arcs.size();
    r.head.resize(2 * m);
    r.cap.resize(2 * m);
    r.cost.resize(2 * m);
    r.offsets.assign(static_cast<std::size_t>(net.node_count()) + 1, 0);
    for (std::size_t i = 0; i < m; ++i) {
        r.head[2 * i] = arcs[i].to;
        r.head[2 * i + 1] = arcs[i].from;
        r.cap[2 * i] = arcs[i].capacity;
        r.cap[2 * i + 1] = 0;
        r.cost[2 * i] = arcs[i].cost;
        r.cost[2 * i + 1] = -arcs[i].cost;
        ++r.offsets[static_cast<std::size_t>(arcs[i].from) + 1];
        ++r.offsets[static_cast<std::size_t>(arcs[i].to) + 1];
    }
    for (std::size_t v = 1; v < r.offsets.size(); ++v) {
        r.offsets[v] += r.offsets[v - 1];
    }
    std::vector<int> fill(r.offsets.begin(), r.offsets.end() - 1);
    r.edges.resize(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        r.edges[static_cast<std::size_t>(fill[static_cast<std::size_t>(arcs[i].from)]++)] = static_cast<int>(2 * i);
        r.edges[static_cast<std::size_t>(fill[static_cast<std::size_t>(arcs[i].to)]++)] = static_cast<int>(2 * i + 1);
    }
    return r;
}

}  // namespace

FlowResult min_cost_max_flow(const FlowNetwork& net) {
    FlowResult result;
    result.flow.assign(net.arcs().size(), 0);
    if (net.node_count() == 0 || net.source() < 0 || net.arcs().empty()) {
        return result;
    }
    Residual r = build_residual(net);
    const auto n = static_cast<std::size_t>(net.node_count());
    const int source = net.source();
    const int sink = net.sink();

    // All costs are non-negative, so zero potentials start out feasible.
    std::vector<std::int64_t> potential(n, 0);
    std::vector<std::int64_t> dist(n);
    std::vector<int> pred_edge(n);
    std::vector<std::uint8_t> settled(n);
    using Entry = std::pair<std::int64_t, int>;

    while (true) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(pred_edge.begin(), pred_edge.end(), -1);
        std::fill(settled.begin(), settled.end(), 0);
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
        dist[static_cast<std::size_t>(source)] = 0;
        heap.push({0, source});
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            const auto uu = static_cast<std::size_t>(u);
            if (settled[uu]) {
                continue;
            }
            settled[uu] = 1;
            if (u == sink) {
                break;
            }
            for (int k = r.offsets[uu]; k < r.offsets[uu + 1]; ++k) {
                const int e = r.edges[static_cast<std::size_t>(k)];
                const auto ee = static_cast<std::size_t>(e);
                if (r.cap[ee] <= 0) {
                    continue;
                }
                const auto v = static_cast<std::size_t>(r.head[ee]);
                if (settled[v]) {
                    continue;
                }
                const std::int64_t nd = d + r.cost[ee] + potential[uu] - potential[v];
                if (nd < dist[v]) {
                    dist[v] = nd;
                    pred_edge[v] = e;
                    heap.push({nd, static_cast<int>(v)});
                }
            }
        }
        const std::int64_t dt = dist[static_cast<std::size_t>(sink)];
        if (dt >= kInf) {
            break;
        }
        for (std::size_t v = 0; v < n; ++v) {
            potential[v] += std::min(dist[v], dt);
        }
        std::int64_t push = kInf;
        for (int v = sink; v != source;) {
            const auto e = static_cast<std::size_t>(pred_edge[static_cast<std::size_t>(v)]);
            push = std::min(push, r.cap[e]);
            v = r.head[e ^ 1U];
        }
        for (int v = sink; v != source;) {
            const auto e = static_cast<std::size_t>(pred_edge[static_cast<std::size_t>(v)]);
            r.cap[e] -= push;
            r.cap[e ^ 1U] += push;
            result.total_cost += push * r.cost[e];
            v = r.head[e ^ 1U];
        }
        result.value += push;
    }
    for (std::size_t i = 0; i < result.flow.size(); ++i) {
        result.flow[i] = r.cap[2 * i + 1];
    }
    return result;
}

std::vector<std::vector<int>> decompose_unit_paths(const FlowNetwork& net, const FlowResult& result) {
    std::vector<std::vector<int>> paths;
    if (result.value == 0) {
        return paths;
    }
    const auto& arcs = net.arcs();
    if (result.flow.size() != arcs.size()) {
        throw std::logic_error("flow vector does not match network");
    }
    const auto n = static_cast<std::size_t>(net.node_count());
    std::vector<std::vector<int>> out(n);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (result.flow[i] > 0) {
            out[static_cast<std::size_t>(arcs[i].from)].push_back(static_cast<int>(i));
        }
    }
    std::vector<std::int64_t> remaining = result.flow;
    std::vector<std::size_t> cursor(n, 0);
    for (std::int64_t k = 0; k < result.value; ++k) {
        std::vector<int> path{net.source()};
        int u = net.source();
        std::size_t steps = 0;
        while (u != net.sink()) {
            const auto uu = static_cast<std::size_t>(u);
            auto& c = cursor[uu];
            while (c < out[uu].size() && remaining[static_cast<std::size_t>(out[uu][c])] == 0) {
                ++c;
            }
            if (c == out[uu].size() || ++steps > arcs.size()) {
                throw std::logic_error("flow support does not decompose into unit paths (stuck at node " +
                                       std::to_string(u) + ")");
            }
            const auto a = static_cast<std::size_t>(out[uu][c]);
            --remaining[a];
            u = arcs[a].to;
            path.push_back(u);
        }
        paths.push_back(std::move(path));
    }
    for (const auto r : remaining) {
        if (r != 0) {
            throw std::logic_error("flow support contains flow outside the decomposed paths");
        }
    }
    return paths;
}

}  // namespace tapf
