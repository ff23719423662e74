// Command-line front end: one subcommand per experiment kind.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pfb/config.hpp"
#include "pfb/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::string out_dir;
  std::size_t jobs = 0;
  bool force = false;
};

// Subcommands other than `run` may omit --config when the experiment has usable defaults.
std::string default_config(const std::string& kind) {
  if (kind == "correlate") return R"({"format_version": 1, "experiment": "correlate"})";
  if (kind == "fig1") return R"({"format_version": 1, "experiment": "fig1"})";
  if (kind == "prop3") return R"({"format_version": 1, "experiment": "prop3", "horizons": [10000, 100000]})";
  return {};
}

int execute(const std::string& subcommand, const Options& opt) {
  pfb::ExperimentConfig config;
  if (!opt.config_path.empty()) {
    config = pfb::load_config(opt.config_path);
  } else {
    const std::string text = default_config(subcommand);
    if (text.empty()) throw pfb::ConfigError("--config: required for '" + subcommand + "'");
    config = pfb::parse_config(text);
  }
  if (subcommand != "run" && pfb::to_string(config.kind) != subcommand)
    throw pfb::ConfigError("config.experiment: '" + pfb::to_string(config.kind) + "' does not match subcommand '" +
                           subcommand + "'");
  if (opt.seed) config.seed = *opt.seed;
  if (opt.replicates) {
    if (*opt.replicates == 0) throw pfb::ConfigError("--replicates: must be >= 1");
    config.replicates = *opt.replicates;
  }
  pfb::validate_config(config);

  std::string out = opt.out_dir;
  if (out.empty()) {
    const char* env = std::getenv("PFB_OUT_DIR");
    out = env && *env ? env : "results";
  }
  const std::string kind = pfb::to_string(config.kind);
  for (const char* ext : {".csv", ".json"}) {
    const fs::path target = fs::path(out) / (kind + ext);
    if (fs::exists(target) && !opt.force) {
      std::cerr << "error: " << target.string() << " exists; pass --force to overwrite\n";
      return kExitRuntime;
    }
  }

  const pfb::ExperimentOutput result = pfb::run_experiment(config, opt.jobs, &std::cerr);
  fs::create_directories(out);
  for (const pfb::Artifact& a : result.artifacts) {
    const fs::path target = fs::path(out) / a.filename;
    std::ofstream file(target, std::ios::binary | std::ios::trunc);
    file << a.content;
    if (!file) throw std::runtime_error("cannot write " + target.string());
    std::cerr << "wrote " << target.string() << "\n";
  }
  std::cout << result.summary;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit simulations with probabilistic feedback"};
  app.set_version_flag("--version", std::string(pfb::kToolVersion));
  app.require_subcommand(1);

  Options opt;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "Run the experiment declared in --config"},
      {"monotonicity", "Sweep one arm's feedback probability (paired tapes by default)"},
      {"correlate", "Correlation study over randomly generated instances"},
      {"regret", "Mean pseudo-regret at several horizons"},
      {"fig1", "APC of arm 1 against its feedback probability, two constant-loss instances"},
      {"prop3", "Standard EXP3 on the linear-regret instance and its full-feedback twin"},
      {"oracle-check", "Compare BBPull against its simulated geometric-block driver"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config_path, "JSON experiment config");
    sub->add_option("-s,--seed", opt.seed, "Override the master seed");
    sub->add_option("-r,--replicates", opt.replicates, "Override the replicate count");
    sub->add_option("-o,--out", opt.out_dir, "Output directory (default $PFB_OUT_DIR or ./results)");
    sub->add_option("-j,--jobs", opt.jobs, "Concurrent replicates (default: all cores)");
    sub->add_flag("-f,--force", opt.force, "Overwrite existing result files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    return execute(subcommand, opt);
  } catch (const pfb::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
