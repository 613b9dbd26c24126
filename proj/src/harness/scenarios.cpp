#include "xdiff/harness/scenarios.hpp"

#include <map>

namespace xdiff::harness {

namespace {

// Keep in sync with scenarios/*.cfg; a unit test compares them.
const std::map<std::string, std::string>& library() {
  static const std::map<std::string, std::string> scenarios{
      {"logistic",
       "# spatially uniform data: u + v = 1, u solves the logistic ODE u' = u (1 - u)\n"
       "n_cells = 64\n"
       "t_end = 2\n"
       "output_count = 20\n"
       "dt_init = 1e-3\n"
       "dt_max = 1e-3\n"
       "u0 = constant 0.2\n"
       "v0 = constant 0.8\n"
       "kind = simulate\n"},
      {"bump-taxis",
       "# concentrated population in a nutrient gradient\n"
       "n_cells = 256\n"
       "t_end = 1\n"
       "output_count = 100\n"
       "dt_init = 1e-3\n"
       "dt_max = 1e-2\n"
       "u0 = bump 0.5 0.1 0.2 0.8\n"
       "v0 = cosine 1.0 0.5 1\n"
       "kind = simulate\n"},
      {"degenerate-dip",
       "# population nearly extinct at the center; 1/u0 stays summable\n"
       "n_cells = 256\n"
       "t_end = 1\n"
       "output_count = 100\n"
       "dt_init = 1e-4\n"
       "dt_max = 1e-2\n"
       "u0 = bump 0.5 0.2 0.5 -0.4999\n"
       "v0 = cosine 1.0 0.3 1\n"
       "kind = simulate\n"},
      {"mms",
       "# manufactured solution u = 0.5 + 0.25 cos(pi x) e^-t, v = 1 + 0.25 cos(pi x) e^-t\n"
       "n_cells = 32\n"
       "t_end = 0.5\n"
       "output_count = 10\n"
       "dt_init = 5e-4\n"
       "dt_max = 5e-4\n"
       "u0 = cosine 0.5 0.25 1\n"
       "v0 = cosine 1.0 0.25 1\n"
       "source = mms\n"
       "kind = converge\n"},
      {"twin",
       "# twin runs of bump-taxis, the second with u0 + delta * bump\n"
       "n_cells = 256\n"
       "t_end = 1\n"
       "output_count = 100\n"
       "dt_init = 7.8125e-3\n"
       "dt_max = 7.8125e-3\n"
       "u0 = bump 0.5 0.1 0.2 0.8\n"
       "v0 = cosine 1.0 0.5 1\n"
       "kind = pair\n"
       "delta = 1e-3\n"
       "pert_shape = bump\n"},
  };
  return scenarios;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"logistic", "bump-taxis", "degenerate-dip", "mms", "twin"};
  return names;
}

const std::string& scenario_text(const std::string& name) {
  const auto& lib = library();
  const auto it = lib.find(name);
  if (it == lib.end()) throw ConfigError("unknown scenario '" + name + "'");
  return it->second;
}

ScenarioConfig builtin_scenario(const std::string& name) { return parse_config(scenario_text(name)); }

}  // namespace xdiff::harness
