#include "doctest.h"
#include "flow_oracle.hpp"
#include "random_instances.hpp"
#include "tapf/flow_solver.hpp"

using namespace tapf;

namespace {

void check_feasible(const FlowNetwork& net, const FlowResult& r) {
    std::vector<std::int64_t> excess(static_cast<std::size_t>(net.node_count()), 0);
    std::int64_t cost = 0;
    REQUIRE(r.flow.size() == net.arcs().size());
    for (std::size_t i = 0; i < net.arcs().size(); ++i) {
        const auto& a = net.arcs()[i];
        CHECK(r.flow[i] >= 0);
        CHECK(r.flow[i] <= a.capacity);
        excess[static_cast<std::size_t>(a.from)] -= r.flow[i];
        excess[static_cast<std::size_t>(a.to)] += r.flow[i];
        cost += r.flow[i] * a.cost;
    }
    for (int v = 0; v < net.node_count(); ++v) {
        if (v != net.source() && v != net.sink()) {
            CHECK(excess[static_cast<std::size_t>(v)] == 0);
        }
    }
    CHECK(-excess[static_cast<std::size_t>(net.source())] == r.value);
    CHECK(cost == r.total_cost);
}

}  // namespace

TEST_CASE("single arc") {
    FlowNetwork net(2);
    net.add_arc(0, 1, 1, 5);
    net.set_terminals(0, 1);
    const auto r = min_cost_max_flow(net);
    CHECK(r.value == 1);
    CHECK(r.total_cost == 5);
}

TEST_CASE("parallel arcs both saturate") {
    FlowNetwork net(2);
    net.add_arc(0, 1, 1, 1);
    net.add_arc(0, 1, 1, 3);
    net.set_terminals(0, 1);
    const auto r = min_cost_max_flow(net);
    CHECK(r.value == 2);
    CHECK(r.total_cost == 4);
}

TEST_CASE("second augmentation cancels flow on a shared arc") {
    // The first path 0-2-3-1 is free; the optimum for two units routes
    // 0-2-1 and 0-3-1 instead, leaving 2->3 empty.
    FlowNetwork net(4);
    net.add_arc(0, 2, 1, 0);
    net.add_arc(2, 3, 1, 0);
    net.add_arc(3, 1, 1, 0);
    net.add_arc(0, 3, 1, 1);
    net.add_arc(2, 1, 1, 1);
    net.set_terminals(0, 1);
    const auto r = min_cost_max_flow(net);
    CHECK(r.value == 2);
    CHECK(r.total_cost == 2);
    CHECK(r.flow[1] == 0);
    check_feasible(net, r);
}

TEST_CASE("empty and disconnected networks") {
    FlowNetwork empty(2);
    empty.set_terminals(0, 1);
    const auto r = min_cost_max_flow(empty);
    CHECK(r.value == 0);
    CHECK(r.total_cost == 0);

    FlowNetwork apart(3);
    apart.add_arc(0, 1, 2, 1);
    apart.set_terminals(0, 2);
    CHECK(min_cost_max_flow(apart).value == 0);
}

TEST_CASE("invalid arcs are rejected") {
    FlowNetwork net(2);
    CHECK_THROWS_AS(net.add_arc(0, 1, -1, 0), std::invalid_argument);
    CHECK_THROWS_AS(net.add_arc(0, 1, 1, -2), std::invalid_argument);
    CHECK_THROWS_AS(net.add_arc(0, 2, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(net.set_terminals(1, 1), std::invalid_argument);
}

TEST_CASE("matches exhaustive enumeration on random networks") {
    testgen::Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        const auto net = testgen::random_network(rng);
        const auto r = min_cost_max_flow(net);
        const auto best = oracle::enumerate_min_cost_max_flow(net);
        CAPTURE(i);
        CHECK(r.value == best.value);
        CHECK(r.total_cost == best.cost);
        check_feasible(net, r);
    }
}

TEST_CASE("identical networks give identical results") {
    testgen::Rng a(77);
    testgen::Rng b(77);
    for (int i = 0; i < 50; ++i) {
        const auto na = testgen::random_network(a, 14);
        const auto nb = testgen::random_network(b, 14);
        CHECK(min_cost_max_flow(na) == min_cost_max_flow(nb));
    }
}

TEST_CASE("decompose_unit_paths") {
    FlowNetwork net(6);
    net.add_arc(0, 2, 1, 0);  // arc 0
    net.add_arc(0, 3, 1, 0);  // arc 1
    net.add_arc(2, 4, 1, 1);
    net.add_arc(3, 5, 1, 1);
    net.add_arc(4, 1, 1, 0);
    net.add_arc(5, 1, 1, 0);
    net.set_terminals(0, 1);

    FlowResult none;
    none.flow.assign(net.arcs().size(), 0);
    CHECK(decompose_unit_paths(net, none).empty());

    const auto r = min_cost_max_flow(net);
    const auto paths = decompose_unit_paths(net, r);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == std::vector<int>{0, 2, 4, 1});
    CHECK(paths[1] == std::vector<int>{0, 3, 5, 1});

    FlowNetwork line(3);
    line.add_arc(0, 2, 1, 0);
    line.add_arc(2, 1, 1, 0);
    line.set_terminals(0, 1);
    CHECK(decompose_unit_paths(line, min_cost_max_flow(line)) == std::vector<std::vector<int>>{{0, 2, 1}});
}

TEST_CASE("decompose_unit_paths rejects a broken support") {
    FlowNetwork net(3);
    net.add_arc(0, 2, 1, 0);
    net.add_arc(2, 1, 1, 0);
    net.set_terminals(0, 1);
    FlowResult bad;
    bad.value = 1;
    bad.flow = {1, 0};
    CHECK_THROWS_AS(decompose_unit_paths(net, bad), std::logic_error);
}

TEST_CASE("decomposed paths reproduce the flow support") {
    testgen::Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        // Unit-capacity layered DAG: source, two layers of three, sink.
        FlowNetwork net(8);
        for (int a = 2; a < 5; ++a) {
            if (rng() % 4 != 0) {
                net.add_arc(0, a, 1, testgen::draw(rng, 0, 5));
            }
            for (int b = 5; b < 8; ++b) {
                if (rng() % 2 == 0) {
                    net.add_arc(a, b, 1, testgen::draw(rng, 0, 5));
                }
            }
        }
        for (int b = 5; b < 8; ++b) {
            net.add_arc(b, 1, 1, 0);
        }
        net.set_terminals(0, 1);
        const auto r = min_cost_max_flow(net);
        const auto paths = decompose_unit_paths(net, r);
        CHECK(static_cast<std::int64_t>(paths.size()) == r.value);
        std::vector<std::int64_t> used(net.arcs().size(), 0);
        for (const auto& p : paths) {
            for (std::size_t k = 0; k + 1 < p.size(); ++k) {
                for (std::size_t a = 0; a < net.arcs().size(); ++a) {
                    if (net.arc(static_cast<int>(a)).from == p[k] && net.arc(static_cast<int>(a)).to == p[k + 1] &&
                        r.flow[a] > used[a]) {
                        ++used[a];
                        break;
                    }
                }
            }
        }
        CHECK(used == r.flow);
    }
}
