#pragma once

// Library side of the `ortho` command-line tool. Every command returns an
// exit code and writes human-readable output to the given streams.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ortho/ssl/config.hpp"

namespace ortho::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitPropertyFailure = 1,
  kExitInputError = 2,
  kExitDivergence = 3,
};

/// Bad config text, unknown key, or unparseable value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Setting = std::pair<std::string, std::string>;

/// Parse `key = value` lines; `#` starts a comment. Keys are normalized
/// ('-' becomes '_'). An empty value is an error.
std::vector<Setting> parse_config_text(const std::string& text, const std::string& origin);

/// Apply one setting. Throws ConfigError on unknown keys or bad values.
void apply_setting(ssl::TrainConfig& cfg, const std::string& key, const std::string& value);

/// Built-in defaults, then ORTHO_SEED (if `env_seed` is non-null), then the
/// file, then `overrides`. Validates the result.
ssl::TrainConfig resolve_config(const std::optional<std::filesystem::path>& file,
                                const std::vector<Setting>& overrides,
                                const char* env_seed);

/// Every key with its resolved value, one per line, parseable by
/// parse_config_text.
std::string render_config(const ssl::TrainConfig& cfg);

/// All recognized keys in render order.
std::vector<std::string> config_keys();

inline constexpr const char* kResolvedConfigName = "config.resolved";
inline constexpr const char* kTrainLogName = "train_log.json";
inline constexpr const char* kCheckpointDirName = "checkpoint";
inline constexpr const char* kReportStem = "report";

struct TrainArgs {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  std::vector<Setting> overrides;
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

enum class Format { csv, json };

struct AnalyzeArgs {
  std::filesystem::path bundle;
  std::vector<std::filesystem::path> features;
  std::filesystem::path out;
  Format format = Format::csv;
  bool weight_axis_cols = false;
};
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

enum class Suite { prop1, gradients, all };

struct CheckArgs {
  Suite suite = Suite::all;
  std::uint64_t seed = 0;
  bool inject_fault = false;  // testing aid: corrupts analytic gradients
};
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);

struct CompareArgs {
  std::vector<std::filesystem::path> runs;
  std::filesystem::path out;  // JSON here, CSV next to it
};
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

// Property suites behind cmd_check.

struct CheckCase {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0.0;   // error or deviation
  double tolerance = 0.0;
  std::string inputs;      // echoed on failure for reproduction
};

struct Prop1Options {
  std::size_t instances = 100;
  double tolerance = 1e-8;
};

struct GradientOptions {
  std::size_t shapes = 20;
  std::size_t entries = 10;        // sampled coordinates per shape
  double tolerance = 1e-4;
  double so_tolerance = 1e-5;
  bool inject_fault = false;
};

std::vector<CheckCase> run_prop1_suite(std::uint64_t seed, const Prop1Options& opts = {});
std::vector<CheckCase> run_gradient_suite(std::uint64_t seed, const GradientOptions& opts = {});

/// Relative error used by the gradient suite.
double relative_error(double analytic, double numeric) noexcept;

}  // namespace ortho::cli
