// kol: runs one experiment from a JSON config and writes its artifacts.
//
// Exit codes: 0 success, 1 I/O or other failure, 2 invalid config or
// arguments, 3 numerical failure, 4 a verification run completed but a check
// failed. Errors are reported on stderr as a single JSON object.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kol/experiment.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
  return code;
}

bool checks_failed(const kol::ExperimentConfig& cfg, const kol::ExperimentResult& r) {
  const auto flag = [&](const std::string& name) {
    const auto it = r.metrics.find(name);
    return it != r.metrics.end() && it->second == 0.0;
  };
  if (cfg.kind == kol::ExperimentKind::verify_bounds) {
    return r.metrics.at("reports_passed") != r.metrics.at("reports_total") || flag("substitutions_strict") ||
           flag("known_zero") || flag("lipschitz_product_holds") || flag("scaling_monotone");
  }
  if (cfg.kind == kol::ExperimentKind::gradcheck) {
    for (const auto& [name, value] : r.metrics) {
      if (name.rfind("pass_", 0) == 0 && value == 0.0) return true;
    }
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Known-operator learning experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("--config,config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory; overrides the config's \"output\"");
  run->add_option("--seed-override", seed_override, "Replace the config's seed");
  run->add_flag("--quiet", quiet, "Suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  kol::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw kol::ConfigError("cannot read config '" + config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw kol::ConfigError("config '" + config_path + "' is not valid JSON: " + e.what());
    }
    if (seed_override) {
      if (!j.is_object()) throw kol::ConfigError("config must be an object");
      j["seed"] = *seed_override;
    }
    cfg = kol::ExperimentConfig::from_json(j);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (cfg.output.empty()) throw kol::ConfigError("no output directory: pass --out or set \"output\"");
  } catch (const kol::ConfigError& e) {
    return fail(2, "config", e.what());
  }

  try {
    kol::RunOptions opts;
    opts.quiet = quiet;
    opts.log = &std::cout;
    const kol::ExperimentResult r = kol::run_experiment(cfg, cfg.output, opts);
    if (checks_failed(cfg, r)) return fail(4, "check", "one or more checks failed; see " + cfg.output.string());
  } catch (const kol::ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const kol::NumericalError& e) {
    return fail(3, "numerical", e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what());
  }
  return 0;
}
