// gwfair: run builtin or file-defined experiments, print oracle allocations.
//
//   gwfair list
//   gwfair run three_sources --case 2 --out results
//   gwfair run source_bottleneck:3 --use-measured-ccr false
//   gwfair run configs/three_sources_case1.cfg
//   gwfair oracle configs/three_sources_case3.cfg
//   gwfair config three_sources_transient --case 1 > my.cfg
//
// Exit status: 0 all verdicts pass, 1 a verdict failed, 2 configuration error.

#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gwfair/gwfair.hpp"

namespace {

namespace ex = gwfair::experiment;

struct Overrides {
  std::optional<double> duration_ms;
  std::optional<bool> use_measured;
  std::optional<double> window;
};

// A target is a builtin name (optionally name:case) or a config file path.
ex::ExperimentSpec resolve(const std::string& target, int default_case, const Overrides& ov) {
  if (std::filesystem::exists(target)) {
    auto spec = ex::load_config(target);
    if (ov.use_measured) spec.switch_params.use_measured_source_rate = *ov.use_measured;
    if (ov.duration_ms) spec.duration_ms = *ov.duration_ms;
    if (ov.window) spec.verdict.window = *ov.window;
    return spec;
  }
  std::string name = target;
  int case_no = default_case;
  if (auto colon = target.find(':'); colon != std::string::npos) {
    name = target.substr(0, colon);
    try {
      case_no = std::stoi(target.substr(colon + 1));
    } catch (const std::exception&) {
      throw gwfair::Error(gwfair::ErrorKind::BadCase, "bad case in " + target);
    }
  }
  ex::BuiltinOptions opts;
  if (ov.use_measured) opts.use_measured_source_rate = *ov.use_measured;
  auto spec = ex::builtin(name, case_no, opts);
  if (ov.duration_ms) {
    spec.duration_ms = *ov.duration_ms;
    spec.expected = ex::oracle_expectations(spec);
  }
  if (ov.window) spec.verdict.window = *ov.window;
  return spec;
}

bool parse_bool_flag(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw gwfair::Error(gwfair::ErrorKind::ConfigError, "expected a boolean, got " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GW-fair ABR rate allocation: oracle, switch simulator, experiments"};
  app.require_subcommand(1);

  std::vector<std::string> targets;
  std::string out_dir;
  int case_no = 1;
  std::optional<double> duration;
  std::optional<std::string> measured;
  std::optional<double> window;

  auto* run = app.add_subcommand("run", "run experiments and compare with the oracle");
  run->add_option("target", targets, "builtin name, name:case, or config file")->required();
  run->add_option("--case", case_no, "case number for builtin names")->check(CLI::Range(1, 3));
  run->add_option("--out", out_dir, "directory for CSV output (one subdirectory per experiment)");
  run->add_option("--duration", duration, "override the run length in ms")->check(CLI::PositiveNumber);
  run->add_option("--use-measured-ccr", measured, "true: measured source rates, false: CCR field");
  run->add_option("--window", window, "trailing fraction used for steady-state rates")->check(CLI::Range(0.0, 1.0));

  std::string oracle_path;
  auto* oracle = app.add_subcommand("oracle", "print the GW-fair allocation of a config file");
  oracle->add_option("path", oracle_path, "config file")->required()->check(CLI::ExistingFile);

  std::string config_target;
  auto* config = app.add_subcommand("config", "print a builtin experiment in config-file form");
  config->add_option("name", config_target, "builtin name or name:case")->required();
  config->add_option("--case", case_no, "case number")->check(CLI::Range(1, 3));
  config->add_option("--use-measured-ccr", measured, "source_bottleneck only");

  app.add_subcommand("list", "list builtin experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Overrides ov{duration, std::nullopt, window};
    if (measured) ov.use_measured = parse_bool_flag(*measured);

    if (app.got_subcommand("list")) {
      for (const auto& b : ex::builtin_catalog())
        std::cout << b.name << " (cases 1-" << b.cases << "): " << b.description << "\n";
      return 0;
    }
    if (app.got_subcommand("oracle")) {
      std::cout << ex::oracle_cmd(oracle_path);
      return 0;
    }
    if (app.got_subcommand("config")) {
      std::cout << ex::serialize(resolve(config_target, case_no, ov));
      return 0;
    }

    std::vector<ex::ExperimentSpec> specs;
    for (const auto& t : targets) specs.push_back(resolve(t, case_no, ov));
    for (std::size_t i = 0; i < specs.size(); ++i)
      for (std::size_t j = i + 1; j < specs.size(); ++j)
        if (specs[i].name == specs[j].name)
          throw gwfair::Error(gwfair::ErrorKind::ConfigError, "experiment " + specs[i].name + " given twice");

    // Independent experiments run concurrently; each owns its engine and output directory.
    std::vector<std::future<ex::ComparisonReport>> jobs;
    for (const auto& spec : specs) {
      const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path{} : std::filesystem::path(out_dir) / spec.name;
      jobs.push_back(std::async(std::launch::async, [&spec, dir] { return ex::run_experiment(spec, dir); }));
    }
    bool all_pass = true;
    for (auto& job : jobs) {
      const auto report = job.get();
      std::cout << ex::format_report(report);
      all_pass = all_pass && report.pass;
    }
    return all_pass ? 0 : 1;
  } catch (const gwfair::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
