#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicescout/cohort.hpp"
#include "slicescout/transform.hpp"
#include "slicescout/window.hpp"

namespace slicescout {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSubjectFailure = 1;
inline constexpr int kExitUsage = 2;

/// Everything a run needs. Values come from, in increasing precedence:
/// built-in defaults, a `--config` file, then command-line flags.
///
/// The config file holds `key=value` lines named after the long flags
/// without dashes (`window=140`, `low-frac=0.1`, `top-k-mode=true`); '#'
/// starts a comment line. `input` may repeat.
struct RunConfig {
  std::vector<std::string> inputs;
  std::filesystem::path output = "slicescout-out";
  int slice_axis = 2;
  int window = kDefaultWindow;
  /// When set, window = round(window_mm / slice spacing) per volume.
  std::optional<double> window_mm;
  ProfileKind method = ProfileKind::edge_sum;
  CannyParams canny;
  bool top_k = false;
  bool union_roi = false;
  ResizeSpec resize;
  int jobs = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 0;
  bool plot = false;

  // committee / ablate
  std::filesystem::path predictions;
  std::filesystem::path truth;
  std::vector<std::string> models;
  std::vector<std::vector<std::string>> subsets;

  // cohort
  CohortRules cohort;
  double test_fraction = 0.10;

  void validate() const;
  SelectParams select_params() const;
  int effective_jobs() const;
};

/// Parses one setting by its long-flag name. Unknown keys are usage errors.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies every `key=value` line of a config file on top of `cfg`.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Expands files, directories (volume files inside, sorted) and `*`/`?`
/// patterns in the final path component. Nonexistent literals are errors.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& inputs);

int cmd_select(const RunConfig& cfg);
int cmd_profile(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);
int cmd_committee(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_cohort(const RunConfig& cfg);

/// Entry point behind the `slicescout` executable.
int run_cli(int argc, const char* const* argv);

}  // namespace slicescout
