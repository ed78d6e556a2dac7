#include "mongelab/lab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace mongelab;

namespace {

std::vector<std::string> split_formats(const std::string& s)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void list_presets()
{
  for (const auto& name : preset_names()) {
    const Json j = preset_config(name);
    std::printf("%-22s %s\n", name.c_str(), j.value("description", "").c_str());
  }
}

void print_report(const Report& r)
{
  std::printf("scenario %s: %s\n", r.name.c_str(), r.status.c_str());
  for (const auto& c : r.checks) {
    std::printf("  [%-7s] %-40s value %-13.6g %s", c.status.c_str(), c.name.c_str(), c.value, c.relation.c_str());
    if (c.relation == "in")
      std::printf(" [%.6g, %.6g]", c.bound, c.bound_hi);
    else if (c.relation != "-")
      std::printf(" %.6g", c.bound);
    if (!c.note.empty()) std::printf("  (%s)", c.note.c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Boundary Monge-Ampere numerical laboratory"};
  app.require_subcommand(0, 1);
  bool top_list = false;
  app.add_flag("--list-presets", top_list, "List the shipped presets and exit");

  CLI::App* run = app.add_subcommand("run", "Run a scenario config or preset");
  std::string config, out = ".", formats = "json,csv,plotdata", preset;
  double delta = 0.0;
  long long seed = -1;
  bool list = false, verify_only = false;
  run->add_option("config", config, "Scenario config file (JSON)");
  run->add_option("--out", out, "Output directory");
  run->add_option("--format", formats, "Comma-separated formats: json,csv,plotdata,checkpoint");
  run->add_option("--delta", delta, "Override the grid spacing")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the random seed")->check(CLI::NonNegativeNumber);
  run->add_option("--preset", preset, "Run a shipped preset instead of a config file");
  run->add_flag("--list-presets", list, "List the shipped presets and exit");
  run->add_flag("--verify-only", verify_only, "Validate the config and hypotheses without solving");

  CLI::App* dump = app.add_subcommand("dump-preset", "Print a preset config as JSON");
  std::string dump_name;
  dump->add_option("name", dump_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (top_list || (run->parsed() && list)) {
      list_presets();
      return 0;
    }
    if (dump->parsed()) {
      std::printf("%s\n", preset_config(dump_name).dump(2).c_str());
      return 0;
    }
    if (!run->parsed()) {
      std::fprintf(stderr, "%s", app.help().c_str());
      return 2;
    }
    if (config.empty() == preset.empty()) {
      std::fprintf(stderr, "error: give exactly one of a config file or --preset NAME\n");
      return 2;
    }

    Json j;
    std::string origin;
    if (!preset.empty()) {
      j = preset_config(preset);
      origin = "preset " + preset;
    } else {
      j = load_scenario(config).config;
      origin = config;
    }
    if (delta > 0) j["delta"] = delta;
    if (seed >= 0) j["seed"] = seed;
    Scenario s;
    try {
      s = scenario_from_json(j);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }

    if (verify_only) {
      auto spec = build_problem(s);
      auto grid = discretize(spec, s.delta, s.stencil_width);
      std::printf("config %s: ok (%zu boundary samples, %zu unknowns, rho %.6g)\n", s.name.c_str(),
                  spec->domain.size(), grid->unknowns(), spec->domain.rho);
      if (j.contains("hypothesis_case")) {
        const HypothesisVerdict v = check_hypothesis_case(*spec, int(j.at("hypothesis_case").get<double>()));
        std::printf("hypothesis case %d: %s (%s)\n", v.hypothesis_case, v.satisfied ? "satisfied" : "not satisfied",
                    v.diagnostics.c_str());
        if (!v.satisfied) return 2;
      }
      return 0;
    }

    const Report r = run_scenario(s);
    print_report(r);
    std::fflush(stdout);
    for (const auto& [stage, t] : r.timings) std::fprintf(stderr, "time %-14s %.2f s\n", stage.c_str(), t);
    for (const auto& path : emit(r, out, split_formats(formats))) std::printf("wrote %s\n", path.c_str());
    return r.exit_code();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
