// SPDX-License-Identifier: Apache-2.0
// Scenario runner: threshold / invert / evolve / ftscan / full / fixtures.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nsa/scenario.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Low-energy resolvent and dispersive-decay scenario runner"};
  app.require_subcommand(1);
  std::string config, out = "out";
  std::uint64_t seed = 1;
  int grid_scale = 1;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "scenario JSON");
    if (needs_config) c->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed for randomized data");
    sub->add_option("--grid-scale", grid_scale, "grid refinement factor")->check(CLI::IsMember({1, 2}));
  };
  for (const char* name : {"threshold", "invert", "evolve", "ftscan", "full"})
    add_common(app.add_subcommand(name, std::string("run the ") + name + " pipeline"), true);
  add_common(app.add_subcommand("fixtures", "write the builtin scenario files"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  if (name == "fixtures") {
    std::error_code ec;
    fs::create_directories(out, ec);
    for (const auto& [file, sc] : nsa::builtin_scenarios()) {
      const fs::path p = fs::path(out) / (file + ".json");
      std::ofstream os(p);
      if (!os) {
        std::cerr << "error: cannot write " << p << "\n";
        return 3;
      }
      os << nsa::scenario_to_json(sc).dump(2) << "\n";
      std::cout << p.string() << "\n";
    }
    return 0;
  }

  nsa::Scenario sc;
  try {
    sc = nsa::load_scenario(config);
  } catch (const nsa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  nsa::RunOptions opt;
  opt.seed = seed;
  opt.grid_scale = grid_scale;
  const nsa::RunResult res = nsa::run_scenario(sc, nsa::parse_pipeline(name), out, opt);
  for (const auto& a : res.artifacts) std::cout << (fs::path(out) / a).string() << "\n";
  for (const auto& f : res.failures) std::cerr << "failure: " << f << "\n";
  return res.exit_code;
}
