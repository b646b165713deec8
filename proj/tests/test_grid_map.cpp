#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "random_instances.hpp"
#include "tapf/grid_map.hpp"

using namespace tapf;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GridMap open_map(int w, int h) { return GridMap(w, h, true); }

}  // namespace

TEST_CASE("parse_map reads movingai text") {
    const auto m = parse_map("type octile\nheight 2\nwidth 3\nmap\n.@.\n...");
    CHECK(m.width() == 3);
    CHECK(m.height() == 2);
    CHECK(m.passable_count() == 5);
    CHECK_FALSE(m.passable({1, 0}));
    CHECK(m.passable({1, 1}));

    const auto open = parse_map("type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n");
    CHECK(open.passable_count() == 9);
}

TEST_CASE("parse_map passability characters") {
    const auto m = parse_map("type octile\r\nheight 1\r\nwidth 6\r\nmap\r\n.G@OTW\r\n");
    CHECK(m.passable({0, 0}));
    CHECK(m.passable({1, 0}));
    for (int x = 2; x < 6; ++x) {
        CHECK_FALSE(m.passable({x, 0}));
    }
}

TEST_CASE("parse_map rejects malformed input with line numbers") {
    auto line_of = [](const std::string& text) {
        try {
            parse_map(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("height 2\nwidth 3\nmap\n...\n...\n") == 1);
    CHECK(line_of("type octile\nheight x\nwidth 3\nmap\n...\n") == 2);
    CHECK(line_of("type octile\nheight 2\nwidth 3\nmop\n...\n...\n") == 4);
    CHECK(line_of("type octile\nheight 2\nwidth 3\nmap\n...\n") == 6);
    CHECK(line_of("type octile\nheight 2\nwidth 3\nmap\n...\n..\n") == 6);
    CHECK(line_of("type octile\nheight 1\nwidth 3\nmap\n...\n...\n") == 6);
}

TEST_CASE("out-of-bounds passability is false") {
    const auto m = open_map(2, 2);
    CHECK_FALSE(m.passable({-1, 0}));
    CHECK_FALSE(m.passable({0, 2}));
}

TEST_CASE("fixture maps match an independent character count") {
    const std::filesystem::path dir = std::filesystem::path(TAPF_TEST_FIXTURES) / "maps";
    int checked = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".map") {
            continue;
        }
        const std::string text = read_file(entry.path());
        std::istringstream in(text);
        std::string line;
        int height = 0;
        int width = 0;
        std::string word;
        std::getline(in, line);
        in >> word >> height >> word >> width;
        std::getline(in, line);
        std::getline(in, line);
        int passable = 0;
        while (std::getline(in, line)) {
            passable += static_cast<int>(std::count(line.begin(), line.end(), '.') +
                                         std::count(line.begin(), line.end(), 'G'));
        }
        const auto m = parse_map(text);
        CAPTURE(entry.path().string());
        CHECK(m.width() == width);
        CHECK(m.height() == height);
        CHECK(m.passable_count() == passable);
        ++checked;
    }
    CHECK(checked >= 2);
}

TEST_CASE("parse and serialize round-trip") {
    testgen::Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto m = testgen::random_map(rng, testgen::draw(rng, 1, 12), testgen::draw(rng, 1, 12), 30);
        CHECK(parse_map(serialize_map(m)) == m);
    }
}

TEST_CASE("neighbors in E S W N order") {
    const auto m = open_map(3, 3);
    const auto center = neighbors(m, {1, 1});
    REQUIRE(center.size() == 4);
    CHECK(center[0] == Cell{2, 1});
    CHECK(center[1] == Cell{1, 2});
    CHECK(center[2] == Cell{0, 1});
    CHECK(center[3] == Cell{1, 0});
    CHECK(neighbors(m, {0, 0}).size() == 2);

    auto walled = open_map(3, 3);
    walled.set_passable({2, 1}, false);
    CHECK(neighbors(walled, {1, 1}).size() == 3);
    CHECK(neighbors(walled, {2, 1}).empty());
}

TEST_CASE("neighbors are symmetric") {
    testgen::Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto m = testgen::random_map(rng, 7, 6, 25);
        for (int a = 0; a < m.cell_count(); ++a) {
            for (const auto& b : neighbors(m, m.cell(a))) {
                const auto back = neighbors(m, b);
                CHECK(std::find(back.begin(), back.end(), m.cell(a)) != back.end());
            }
        }
    }
}

TEST_CASE("bfs_distances") {
    const auto corridor = open_map(5, 1);
    const Cell src[1] = {{0, 0}};
    const auto d = bfs_distances(corridor, src);
    for (int x = 0; x < 5; ++x) {
        CHECK(d.at({x, 0}) == x);
    }

    auto sealed = open_map(3, 3);
    sealed.set_passable({1, 2}, false);
    sealed.set_passable({2, 1}, false);
    const auto ds = bfs_distances(sealed, src);
    CHECK(ds.at({0, 0}) == 0);
    CHECK_FALSE(ds.reachable({2, 2}));

    CHECK_THROWS_AS(bfs_distances(corridor, std::span<const Cell>{}), std::invalid_argument);
}

TEST_CASE("bfs distances change by at most one across an edge") {
    testgen::Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto m = testgen::random_map(rng, 8, 8, 20);
        const auto comp = testgen::largest_component(m);
        const Cell src[1] = {comp.front()};
        const auto d = bfs_distances(m, src);
        for (const auto& c : comp) {
            for (const auto& n : neighbors(m, c)) {
                CHECK(std::abs(d.at(c) - d.at(n)) <= 1);
            }
        }
    }
}

TEST_CASE("compute_window pads a small box by the margin") {
    const auto m = open_map(40, 40);
    const std::vector<Cell> agents = {{10, 10}, {12, 14}};
    const std::vector<std::vector<Cell>> goals = {{{19, 19}}, {{15, 11}}};
    const auto r = compute_window(m, agents, goals, {});
    CHECK(r.window == Window{8, 8, 21, 21});
    CHECK(r.goals == goals);

    const std::vector<Cell> corner = {{0, 0}};
    const auto rc = compute_window(m, corner, {{{3, 3}}}, {});
    CHECK(rc.window == Window{0, 0, 5, 5});
}

TEST_CASE("compute_window holds starts and goals twenty cells apart in one window") {
    const auto m = open_map(80, 40);
    std::vector<Cell> agents;
    std::vector<std::vector<Cell>> goals(1);
    for (int i = 0; i < 5; ++i) {
        agents.push_back({10 + i, 20});
        goals[0].push_back({30 + i, 20});
    }
    const auto r = compute_window(m, agents, goals, {});
    CHECK(r.window.width() <= 30);
    CHECK(r.goals == goals);
}

TEST_CASE("compute_window projects a far goal onto the BFS-nearest in-window cell") {
    // Wall at x = 40 with a single gap at y = 2 forces the projected goal off
    // the straight line.
    GridMap m(70, 12);
    for (int y = 0; y < 12; ++y) {
        if (y != 2) {
            m.set_passable({40, y}, false);
        }
    }
    m.set_passable({33, 6}, false);
    const std::vector<Cell> agents = {{5, 6}, {6, 6}};
    const std::vector<std::vector<Cell>> goals = {{{46, 6}, {45, 7}}};
    const auto r = compute_window(m, agents, goals, {});
    // Goal centroid far east: the window starts at the westmost agent.
    CHECK(r.window.min_x == 5);
    CHECK(r.window.max_x == 34);
    CHECK(r.window.min_y == 4);
    CHECK(r.window.max_y == 9);

    // Brute-force oracle: distance from each in-window cell to the goal.
    auto nearest = [&](Cell goal, const std::vector<Cell>& taken) {
        Cell best{-1, -1};
        int best_d = 1 << 30;
        for (int y = r.window.min_y; y <= r.window.max_y; ++y) {
            for (int x = r.window.min_x; x <= r.window.max_x; ++x) {
                if (!m.passable({x, y}) || std::find(taken.begin(), taken.end(), Cell{x, y}) != taken.end()) {
                    continue;
                }
                const Cell src[1] = {{x, y}};
                const int d = bfs_distances(m, src).at(goal);
                if (d >= 0 && d < best_d) {
                    best_d = d;
                    best = {x, y};
                }
            }
        }
        return best;
    };
    // Goals are assigned in row-major order of the original cells.
    const Cell first = nearest({46, 6}, {});
    const Cell second = nearest({45, 7}, {first});
    CHECK(r.goals[0][0] == first);
    CHECK(r.goals[0][1] == second);
    CHECK(first == Cell{34, 4});
}

TEST_CASE("compute_window shifts toward goals on the west and north") {
    const auto m = open_map(100, 100);
    const std::vector<Cell> agents = {{80, 80}};
    const auto r = compute_window(m, agents, {{{10, 10}}}, {});
    CHECK(r.window == Window{51, 51, 80, 80});
}

TEST_CASE("compute_window centers on the goal centroid when the agents allow it") {
    const auto m = open_map(100, 100);
    const std::vector<Cell> one = {{50, 50}};
    // Box x 28..77 exceeds the cap; centroid x 52.5 puts the window at 38..67.
    const auto r = compute_window(m, one, {{{30, 50}, {75, 50}}}, {});
    CHECK(r.window.min_x == 38);
    CHECK(r.window.max_x == 67);
    // Two agents pin the west edge: 40..69 is the only start keeping (40,50) inside.
    const std::vector<Cell> two = {{40, 50}, {60, 50}};
    const auto r2 = compute_window(m, two, {{{45, 50}, {75, 50}}}, {});
    CHECK(r2.window.min_x == 40);
    CHECK(r2.window.max_x == 69);
}

TEST_CASE("compute_window rejects a dispersed team") {
    const auto m = open_map(100, 10);
    const std::vector<Cell> agents = {{0, 0}, {50, 0}};
    CHECK_THROWS_AS(compute_window(m, agents, {{{1, 0}, {2, 0}}}, {}), WindowError);
}

TEST_CASE("compute_window invariants on random input") {
    testgen::Rng rng(21);
    for (int i = 0; i < 100; ++i) {
        const auto m = testgen::random_map(rng, testgen::draw(rng, 10, 60), testgen::draw(rng, 10, 60), 15);
        const auto comp = testgen::largest_component(m);
        if (comp.size() < 20) {
            continue;
        }
        // Agents clustered near one random cell.
        const auto seed = comp[static_cast<std::size_t>(testgen::draw(rng, 0, static_cast<int>(comp.size()) - 1))];
        std::vector<Cell> near;
        for (const auto& c : comp) {
            if (manhattan(c, seed) <= 5) {
                near.push_back(c);
            }
        }
        const auto agents = testgen::pick_distinct(rng, near, std::min<std::size_t>(4, near.size()));
        const auto goal_cells = testgen::pick_distinct(rng, comp, 6);
        const std::vector<std::vector<Cell>> goals = {{goal_cells[0], goal_cells[1]},
                                                      {goal_cells[2]},
                                                      {goal_cells[3], goal_cells[4], goal_cells[5]}};
        const WindowConfig cfg{testgen::draw(rng, 12, 30), testgen::draw(rng, 12, 30), testgen::draw(rng, 0, 3)};
        WindowResult r;
        try {
            r = compute_window(m, agents, goals, cfg);
        } catch (const WindowError&) {
            continue;  // a cut-off pocket; nothing to check
        }
        CHECK(r.window.width() <= cfg.cap_w);
        CHECK(r.window.height() <= cfg.cap_h);
        CHECK(r.window.min_x >= 0);
        CHECK(r.window.max_x < m.width());
        CHECK(r.window.min_y >= 0);
        CHECK(r.window.max_y < m.height());
        for (const auto& a : agents) {
            CHECK(r.window.contains(a));
        }
        std::vector<Cell> all;
        REQUIRE(r.goals.size() == goals.size());
        for (std::size_t g = 0; g < goals.size(); ++g) {
            CHECK(r.goals[g].size() == goals[g].size());
            for (const auto& c : r.goals[g]) {
                CHECK(m.passable(c));
                CHECK(r.window.contains(c));
                all.push_back(c);
            }
        }
        std::sort(all.begin(), all.end(), row_major_less);
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    }
}

TEST_CASE("crop translates to window-local coordinates") {
    auto m = open_map(10, 10);
    m.set_passable({4, 5}, false);
    const Window w{3, 4, 6, 8};
    const auto c = crop(m, w);
    CHECK(c.width() == 4);
    CHECK(c.height() == 5);
    CHECK_FALSE(c.passable(w.to_local({4, 5})));
    CHECK(c.passable({0, 0}));
}
