// looplab <subcommand> --config <path> --out <dir> --seed <u64> --workers <n>
// Exit codes: 0 pass, 1 failed check or runtime error, 2 configuration error.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "looplab/experiments.hpp"
#include "looplab/suite.hpp"

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw looplab::ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw looplab::ConfigError(std::string("config ") + path + ": " + e.what());
  }
}

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "JSON configuration file");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "base seed");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

std::string base_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? "." : parent.string();
}

int run_experiment_command(const std::string& name, const Common& c, bool seed_given, bool workers_given) {
  json j = read_json(c.config);
  if (!j.is_object()) throw looplab::ConfigError("config: top level must be an object");
  if (!j.contains("experiment")) j["experiment"] = name;
  if (j["experiment"] != name)
    throw looplab::ConfigError("config: experiment '" + j["experiment"].dump() + "' does not match subcommand " + name);
  const auto cfg = looplab::ExperimentConfig::from_json(j, base_dir(c.config));
  looplab::RunOptions opt{c.seed, c.workers};
  if (!seed_given && j.contains("seed")) opt.seed = j["seed"].get<std::uint64_t>();
  if (!workers_given && j.contains("workers")) opt.workers = std::max(1u, j["workers"].get<unsigned>());
  const auto r = looplab::run_experiment(cfg, opt);
  looplab::write_result(r, c.out);
  std::cout << name << ": " << (r.pass ? "PASS" : "FAIL") << "  (" << (std::filesystem::path(c.out) / (name + ".csv")).string()
            << ")\n"
            << r.summary.dump(2) << std::endl;
  return r.pass ? 0 : 1;
}

// Optional config: {"seed": u64, "workers": n, "experiments": [config paths]}; runs in quick mode.
int run_selftest_command(const Common& c, bool seed_given, bool workers_given) {
  looplab::SuiteOptions opt{c.seed, c.workers, true};
  std::vector<looplab::ExperimentConfig> extra;
  if (!c.config.empty()) {
    const json j = read_json(c.config);
    if (!j.is_object()) throw looplab::ConfigError("selftest config: top level must be an object");
    for (const auto& [key, _] : j.items())
      if (key != "seed" && key != "workers" && key != "experiments" && key != "description")
        throw looplab::ConfigError("selftest config: unknown key '" + key + "'");
    if (!seed_given && j.contains("seed")) opt.seed = j["seed"].get<std::uint64_t>();
    if (!workers_given && j.contains("workers")) opt.workers = std::max(1u, j["workers"].get<unsigned>());
    if (j.contains("experiments")) {
      if (!j["experiments"].is_array()) throw looplab::ConfigError("selftest config: experiments must be an array");
      for (const auto& p : j["experiments"]) {
        if (!p.is_string()) throw looplab::ConfigError("selftest config: experiments entries must be paths");
        std::filesystem::path path(p.get<std::string>());
        if (path.is_relative()) path = std::filesystem::path(base_dir(c.config)) / path;
        extra.push_back(looplab::ExperimentConfig::from_json(read_json(path.string()), base_dir(path.string())));
      }
    }
  }
  int failed = looplab::run_selftest(opt, std::cout);
  for (const auto& cfg : extra) {
    const auto r = looplab::run_experiment(cfg, looplab::RunOptions{opt.seed, opt.workers});
    looplab::write_result(r, c.out);
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "experiment: " << cfg.experiment << std::endl;
    if (!r.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"looplab: random-loop representations of lattice Bose gases and classical fields"};
  app.require_subcommand(1);
  const std::vector<std::string> names{"meanfield", "largemass", "volume", "heatkernel",
                                       "cluster-logz", "ginibre-z", "symanzik-z"};
  std::map<std::string, Common> commons;
  std::map<std::string, CLI::App*> subs;
  auto* selftest = app.add_subcommand("selftest", "run the invariant suite of every module");
  add_common(selftest, commons["selftest"], false);
  subs["selftest"] = selftest;
  for (const auto& n : names) {
    subs[n] = app.add_subcommand(n, n + " experiment");
    add_common(subs[n], commons[n], true);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      const bool seed_given = sub->count("--seed") > 0;
      const bool workers_given = sub->count("--workers") > 0;
      if (name == "selftest") return run_selftest_command(commons[name], seed_given, workers_given);
      return run_experiment_command(name, commons[name], seed_given, workers_given);
    }
  } catch (const looplab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const looplab::ValidationError& e) {
    std::cerr << "invalid parameters: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
