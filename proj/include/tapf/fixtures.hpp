#pragma once

#include <optional>
#include <string>

namespace tapf {

// $TAPF_FIXTURES when set, else the fixtures/ directory of the source tree.
std::string fixture_dir();

// `path` itself if it exists, else `path` under fixture_dir().
std::optional<std::string> find_fixture(const std::string& path);

// A scenario's map file: next to the scenario, in a sibling maps/ directory,
// then in fixture_dir()/maps.
std::optional<std::string> find_scenario_map(const std::string& map_path, const std::string& scenario_path);

}  // namespace tapf
