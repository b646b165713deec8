#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tapf {

struct Cell {
    int x = 0;  // column
    int y = 0;  // row

    friend bool operator==(const Cell&, const Cell&) = default;
};

// Row-major order: by row, then by column.
inline bool row_major_less(const Cell& a, const Cell& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.y)) << 32) |
                                          static_cast<std::uint32_t>(c.x));
    }
};

inline int manhattan(const Cell& a, const Cell& b) {
    return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// 4-connected grid. Passability queries outside the bounds return false.
class GridMap {
public:
    GridMap(int width, int height, bool passable = true);
    GridMap(int width, int height, std::vector<std::uint8_t> passable);

    int width() const { return width_; }
    int height() const { return height_; }
    int cell_count() const { return width_ * height_; }

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    bool passable(Cell c) const { return in_bounds(c) && passable_[index(c)] != 0; }
    void set_passable(Cell c, bool value);

    int index(Cell c) const { return c.y * width_ + c.x; }
    Cell cell(int index) const { return {index % width_, index / width_}; }

    int passable_count() const;

    friend bool operator==(const GridMap&, const GridMap&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> passable_;
};

// Movingai `.map` text. Only `.` and `G` are passable.
GridMap parse_map(std::string_view text);
std::string serialize_map(const GridMap& map);
GridMap load_map_file(const std::string& path);

// Passable 4-neighbours in E, S, W, N order. Empty for an impassable cell.
std::vector<Cell> neighbors(const GridMap& map, Cell c);

// Shortest 4-connected step counts; kUnreachable where no source reaches.
class DistanceField {
public:
    static constexpr int kUnreachable = -1;

    DistanceField(const GridMap& map, std::vector<int> dist) : width_(map.width()), dist_(std::move(dist)) {}

    int at(Cell c) const { return dist_[static_cast<std::size_t>(c.y * width_ + c.x)]; }
    bool reachable(Cell c) const { return at(c) != kUnreachable; }
    const std::vector<int>& raw() const { return dist_; }

private:
    int width_;
    std::vector<int> dist_;
};

// Throws std::invalid_argument on empty sources or an impassable source.
DistanceField bfs_distances(const GridMap& map, std::span<const Cell> sources);

struct Window {
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;

    int width() const { return max_x - min_x + 1; }
    int height() const { return max_y - min_y + 1; }
    bool contains(Cell c) const { return c.x >= min_x && c.x <= max_x && c.y >= min_y && c.y <= max_y; }
    Cell to_local(Cell c) const { return {c.x - min_x, c.y - min_y}; }
    Cell to_global(Cell c) const { return {c.x + min_x, c.y + min_y}; }

    friend bool operator==(const Window&, const Window&) = default;
};

struct WindowConfig {
    int cap_w = 30;
    int cap_h = 30;
    int margin = 2;
};

class WindowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WindowResult {
    Window window;
    // Same shape as the input goal groups; goals outside the window are
    // replaced by in-window intermediate goals.
    std::vector<std::vector<Cell>> goals;
};

// Planning window around the agents, biased toward the goals when the
// bounding box of agents and goals exceeds the cap. Throws WindowError if
// the agents alone do not fit.
WindowResult compute_window(const GridMap& map, std::span<const Cell> agents,
                            const std::vector<std::vector<Cell>>& goal_groups, const WindowConfig& cfg);

// Sub-map covering the window, in window-local coordinates.
GridMap crop(const GridMap& map, const Window& w);

}  // namespace tapf
