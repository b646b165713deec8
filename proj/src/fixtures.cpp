#include "tapf/fixtures.hpp"

#include <cstdlib>
#include <filesystem>

namespace fs = std::filesystem;

namespace tapf {

std::string fixture_dir() {
    if (const char* env = std::getenv("TAPF_FIXTURES"); env != nullptr && *env != '\0') {
        return env;
    }
    return TAPF_DEFAULT_FIXTURES;
}

std::optional<std::string> find_fixture(const std::string& path) {
    std::error_code ec;
    if (fs::is_regular_file(path, ec)) {
        return path;
    }
    const auto p = fs::path(fixture_dir()) / path;
    if (fs::is_regular_file(p, ec)) {
        return p.string();
    }
    return std::nullopt;
}

std::optional<std::string> find_scenario_map(const std::string& map_path, const std::string& scenario_path) {
    const fs::path m = map_path;
    const fs::path dir = fs::path(scenario_path).parent_path();
    std::error_code ec;
    for (const auto& c : {dir / m, dir.parent_path() / "maps" / m, dir.parent_path().parent_path() / "maps" / m,
                          fs::path(fixture_dir()) / "maps" / m}) {
        if (fs::is_regular_file(c, ec)) {
            return c.string();
        }
    }
    return std::nullopt;
}

}  // namespace tapf
