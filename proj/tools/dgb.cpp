// Command-line front end: one experiment per invocation, or a threaded sweep.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgb/error.hpp"
#include "dgb/io.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config, "config file (key = value lines)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--override", opts.overrides, "key=value, repeatable");
}

dgb::io::RunConfig resolve(const std::string& experiment, const Common& opts, const std::string& path) {
  std::vector<std::string> overrides = opts.overrides;
  if (!experiment.empty()) overrides.push_back("experiment=" + experiment);
  if (!opts.out.empty()) overrides.push_back("output=" + opts.out);
  if (opts.seed >= 0) overrides.push_back("seed=" + std::to_string(opts.seed));
  return dgb::io::load_config(path, overrides);
}

void report(const dgb::io::RunManifest& m, const std::string& dir) {
  std::cout << m.experiment << " run " << m.run_id << " -> " << dir << "\n";
  for (const auto& [key, value] : m.summary) std::cout << "  " << key << " = " << dgb::io::format_double(value) << "\n";
  for (const auto& [key, value] : m.notes) std::cout << "  " << key << ": " << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped dispersive equation lab"};
  app.require_subcommand(1);

  Common opts;
  std::string chosen;
  for (const char* name :
       {"simulate", "stabilize", "control-linear", "control-nonlinear", "observability", "lemmas"}) {
    auto* cmd = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    add_common(cmd, opts, true);
    cmd->callback([&chosen, name] { chosen = name; });
  }

  std::vector<std::string> sweep_configs;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run several configs on worker threads");
  sweep->add_option("configs", sweep_configs, "config files")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", opts.out, "parent output directory; each run gets <out>/<index>");
  sweep->add_option("--seed", opts.seed, "random seed for every run");
  sweep->add_option("--override", opts.overrides, "key=value applied to every run");
  sweep->add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->callback([&chosen] { chosen = "sweep"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (chosen == "sweep") {
      std::vector<dgb::io::RunConfig> configs;
      for (std::size_t i = 0; i < sweep_configs.size(); ++i) {
        Common per_run = opts;
        per_run.out.clear();
        auto cfg = resolve("", per_run, sweep_configs[i]);
        if (!opts.out.empty()) cfg.output_dir = std::filesystem::path(opts.out) / std::to_string(i);
        configs.push_back(std::move(cfg));
      }
      const auto manifests = dgb::io::run_sweep(configs, jobs);
      for (std::size_t i = 0; i < manifests.size(); ++i) report(manifests[i], configs[i].output_dir.string());
    } else {
      const auto cfg = resolve(chosen, opts, opts.config);
      report(dgb::io::run(cfg), cfg.output_dir.string());
    }
  } catch (const dgb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dgb::is_validation_error(e.kind()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
