#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "kol/bounds.hpp"
#include "kol/errors.hpp"
#include "kol/frangi.hpp"
#include "kol/graph.hpp"
#include "kol/phantom.hpp"
#include "kol/train.hpp"

namespace kol {

/// Invalid experiment configuration; the message names the offending key.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

enum class ExperimentKind { fbp_reconstruct, train_ct, train_frangi, train_rebin, verify_bounds, gradcheck };

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

struct FanSetup {
  std::size_t size = 64;
  double spacing = 1.0;
  double dsi = 100.0;
  double dsd = 200.0;
  std::size_t views = 120;
  double detector_spacing = 2.0;
};

struct Split {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + val + test; }
};

struct FbpReconstructConfig {
  PhantomKind phantom = PhantomKind::shepp_logan;
  FanSetup geometry{256, 1.0, 400.0, 800.0, 360, 2.0};
  bool parker = true;
  double roi_fraction = 0.6;
  bool compare_without_parker = true;
};

struct TrainCtConfig {
  FanSetup geometry;
  double wedge_start_deg = 60.0;
  double wedge_width_deg = 30.0;
  Split phantoms{50, 12, 10};
  std::size_t ellipses = 6;
  TrainConfig training;
  TrainCtConfig();
};

struct TrainFrangiConfig {
  std::size_t size = 48;
  TubeOptions tubes;
  Split images{128, 32, 40};
  std::size_t scales = 8;
  double sigma_min = 1.0;
  double sigma_max = 4.0;
  double half_width = 3.0;
  double beta = 0.5;
  Polarity polarity = Polarity::dark;
  bool head_trainable = false;
  TrainConfig training;
  TrainFrangiConfig();
};

struct TrainRebinConfig {
  std::size_t size = 64;
  std::size_t parallel_views = 15;
  std::size_t fan_views = 90;
  double dsi = 128.0;
  double dsd = 256.0;
  double detector_spacing = 2.0;
  Split phantoms{32, 8, 10};
  bool include_shepp_logan = true;
  bool train_c = true;
  bool train_w = true;
  TrainConfig training;
  TrainRebinConfig();
};

struct GradcheckSuiteConfig {
  std::vector<std::string> targets{"fbp", "frangi", "rebin", "mlp"};
  double tolerance = 1e-3;
  std::size_t max_entries = 48;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::fbp_reconstruct;
  std::uint64_t seed = 0;
  std::variant<FbpReconstructConfig, TrainCtConfig, TrainFrangiConfig, TrainRebinConfig, BoundsSuiteConfig,
               GradcheckSuiteConfig>
      body;
  std::filesystem::path output;  ///< optional "output" key; empty when absent
  nlohmann::json source;         ///< the config as given, for hashing

  /// Parses and validates; throws ConfigError on unknown keys, wrong types or
  /// out-of-range values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// 64-bit FNV-1a over the compact dump of the config.
std::uint64_t config_hash(const nlohmann::json& config);

struct RunOptions {
  bool quiet = false;
  std::ostream* log = nullptr;  ///< progress lines; std::cerr when null
};

struct ExperimentResult {
  std::map<std::string, double> metrics;
  std::vector<std::string> artifacts;  ///< file names relative to the output directory
  nlohmann::json report;
};

/// Runs the experiment and writes its artifacts to `out_dir` (created if
/// needed): metrics.csv, manifest.json, timing.json and kind-specific files.
/// Everything except timing.json is a deterministic function of the config.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                const RunOptions& options = {});

struct GradcheckTarget {
  std::string name;
  GradcheckReport report;
};

/// Finite-difference checks of every trainable operator family on small
/// instances.
std::vector<GradcheckTarget> gradcheck_suite(const GradcheckSuiteConfig& cfg, std::uint64_t seed);

/// "name,value" rows sorted by name, values printed with 17 significant digits.
std::string metrics_csv(const std::map<std::string, double>& metrics);

}  // namespace kol
