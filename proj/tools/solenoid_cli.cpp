#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "solenoid/solenoid.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> budgets;
  std::string out;
};

void apply_budget(solenoid::Budgets& b, const std::string& kv) {
  const auto eq = kv.find('=');
  solenoid::require(eq != std::string::npos, "--budget expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  std::int64_t value = 0;
  try {
    std::size_t used = 0;
    value = std::stoll(kv.substr(eq + 1), &used);
    solenoid::require(used == kv.size() - eq - 1, "");
  } catch (const std::exception&) {
    throw solenoid::rejected_input("--budget " + key + ": not an integer");
  }
  if (key == "samples") b.samples = value;
  else if (key == "orbit_points") b.orbit_points = value;
  else if (key == "scan") b.scan = value;
  else if (key == "words") b.words = value;
  else if (key == "exact") b.exact = value;
  else throw solenoid::rejected_input("--budget: unknown budget '" + key + "'");
}

solenoid::RunConfig load(const Overrides& o) {
  solenoid::RunConfig c;
  if (!o.config.empty()) {
    solenoid::json j;
    try {
      j = solenoid::json::parse(solenoid::read_file(o.config));
    } catch (const solenoid::json::parse_error& e) {
      throw solenoid::rejected_input(std::string("config: ") + e.what());
    }
    c = solenoid::config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  for (const auto& kv : o.budgets) apply_budget(c.budgets, kv);
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("-s,--seed", o.seed, "Seed override");
  cmd->add_option("-B,--budget", o.budgets, "Budget override key=value (samples, orbit_points, scan, words, exact)");
  cmd->add_option("-o,--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skew-product solenoid lab: T(x,y) = (bx mod 1, gamma y + phi(x))"};
  app.require_subcommand(1);
  Overrides o;
  std::string chosen;

  auto* run = app.add_subcommand("run", "Run the experiments listed in the config");
  add_common(run, o);
  run->callback([&] { chosen = "run"; });
  for (const auto& name : solenoid::experiment_names()) {
    auto* cmd = app.add_subcommand(name, "Run the " + name + " experiment");
    add_common(cmd, o);
    cmd->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load(o);
    if (chosen != "run") cfg.experiments = {chosen};
    const auto rep = solenoid::run_experiment(cfg);
    solenoid::write_report(rep, cfg.output_dir);
    std::cout << rep.summary["experiments"].dump(2) << "\n";
  } catch (const solenoid::rejected_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
