#pragma once

#include <string>
#include <vector>

#include "xdiff/harness/config.hpp"

namespace xdiff::harness {

/// Names of the shipped scenarios: logistic, bump-taxis, degenerate-dip, mms, twin.
const std::vector<std::string>& scenario_names();
/// Config text of a shipped scenario; throws ConfigError for an unknown name.
const std::string& scenario_text(const std::string& name);
ScenarioConfig builtin_scenario(const std::string& name);

}  // namespace xdiff::harness
