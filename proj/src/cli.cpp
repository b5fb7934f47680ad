#include "slicescout/cli.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "slicescout/stack_io.hpp"

namespace slicescout {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

namespace {

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on" || value.empty()) return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorKind::usage, fmt::format("{}: expected true/false, got '{}'", key, value));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    const auto piece = detail::trim(text.substr(start, pos - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  try {
    if constexpr (std::is_floating_point_v<T>) return static_cast<T>(detail::parse_double(value, key));
    else return static_cast<T>(detail::parse_int(value, key));
  } catch (const Error& e) {
    throw Error(ErrorKind::usage, e.what());
  }
}

}  // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  value = detail::trim(value);
  try {
    if (key == "input") cfg.inputs.emplace_back(value);
    else if (key == "output") cfg.output = std::string(value);
    else if (key == "axis") cfg.slice_axis = parse_number<int>(key, value);
    else if (key == "window") cfg.window = parse_number<int>(key, value);
    else if (key == "window-mm") cfg.window_mm = parse_number<double>(key, value);
    else if (key == "method") cfg.method = parse_profile_kind(value);
    else if (key == "sigma") cfg.canny.sigma = parse_number<double>(key, value);
    else if (key == "radius") cfg.canny.radius = parse_number<int>(key, value);
    else if (key == "low-frac") cfg.canny.low_frac = parse_number<double>(key, value);
    else if (key == "high-frac") cfg.canny.high_frac = parse_number<double>(key, value);
    else if (key == "absolute-intensity-thresholds")
      cfg.canny.base = parse_bool(key, value) ? ThresholdBase::image_intensity : ThresholdBase::gradient_magnitude;
    else if (key == "top-k-mode") cfg.top_k = parse_bool(key, value);
    else if (key == "roi-union") cfg.union_roi = parse_bool(key, value);
    else if (key == "resize") cfg.resize.factor = parse_number<int>(key, value);
    else if (key == "resize-mode") cfg.resize.mode = parse_resize_mode(value);
    else if (key == "jobs") cfg.jobs = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "plot") cfg.plot = parse_bool(key, value);
    else if (key == "predictions") cfg.predictions = std::string(value);
    else if (key == "truth") cfg.truth = std::string(value);
    else if (key == "models") {
      for (auto& m : split(value, ',')) cfg.models.push_back(std::move(m));
    } else if (key == "subsets") {
      for (const auto& group : split(value, ';')) cfg.subsets.push_back(split(group, '+'));
    } else if (key == "min-age") cfg.cohort.min_age = parse_number<double>(key, value);
    else if (key == "session") cfg.cohort.required_session = std::string(value);
    else if (key == "all-visits") cfg.cohort.first_visit_only = !parse_bool(key, value);
    else if (key == "test-fraction") cfg.test_fraction = parse_number<double>(key, value);
    else throw Error(ErrorKind::usage, fmt::format("unknown setting '{}'", key));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::usage) throw;
    throw Error(ErrorKind::usage, fmt::format("{}: {}", key, e.what()));
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, fmt::format("cannot open config file {}", path.string()));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::usage, fmt::format("{}:{}: expected key=value", path.string(), line_no));
    try {
      apply_setting(cfg, detail::trim(text.substr(0, eq)), text.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::usage, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
}

void RunConfig::validate() const {
  auto usage = [](std::string msg) { return Error(ErrorKind::usage, std::move(msg)); };
  if (slice_axis < 0 || slice_axis > 2) throw usage("axis must be 0, 1 or 2");
  if (window < 1) throw usage("window must be >= 1");
  if (window_mm && !(*window_mm > 0.0)) throw usage("window-mm must be > 0");
  if (!(canny.low_frac > 0.0 && canny.low_frac <= 1.0 && canny.high_frac > 0.0 && canny.high_frac <= 1.0))
    throw usage("low-frac and high-frac must lie in (0, 1]");
  if (!(canny.low_frac < canny.high_frac)) throw usage("low-frac must be below high-frac");
  if (!(canny.sigma > 0.0)) throw usage("sigma must be > 0");
  if (canny.radius < 1) throw usage("radius must be >= 1");
  if (resize.factor < 1) throw usage("resize must be >= 1");
  if (jobs < 0) throw usage("jobs must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw usage("test-fraction must lie in [0, 1)");
}

SelectParams RunConfig::select_params() const {
  SelectParams p;
  p.window = window;
  p.method = method;
  p.canny = canny;
  p.top_k = top_k;
  p.union_roi = union_roi;
  return p;
}

int RunConfig::effective_jobs() const {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Inputs

namespace {

bool is_volume_file(const fs::path& p) {
  const std::string name = p.filename().string();
  for (std::string_view ext : {".nii", ".nii.gz", ".hdr", ".hdr.gz", ".ssvol"}) {
    if (name.ends_with(ext)) return true;
  }
  return false;
}

}  // namespace

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    const fs::path p(input);
    const std::string leaf = p.filename().string();
    if (leaf.find_first_of("*?[") != std::string::npos) {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      std::vector<fs::path> matched;
      if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
          if (entry.is_regular_file() && fnmatch(leaf.c_str(), entry.path().filename().c_str(), 0) == 0)
            matched.push_back(entry.path());
        }
      }
      std::sort(matched.begin(), matched.end());
      files.insert(files.end(), matched.begin(), matched.end());
    } else if (fs::is_directory(p)) {
      std::vector<fs::path> matched;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && is_volume_file(entry.path())) matched.push_back(entry.path());
      }
      std::sort(matched.begin(), matched.end());
      files.insert(files.end(), matched.begin(), matched.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::usage, fmt::format("input {} does not exist", input));
    }
  }
  return files;
}

// ---------------------------------------------------------------------------
// Batch execution

namespace {

template <typename R>
struct Outcome {
  fs::path path;
  std::string subject_id;
  std::optional<R> result;
  std::string error;
  long long duration_ms = 0;
};

/// Runs `fn(volume)` for every input on a pool of workers. Each worker owns
/// its subject; results come back sorted by subject id, then path.
template <typename R, typename Fn>
std::vector<Outcome<R>> run_batch(const std::vector<fs::path>& files, const RunConfig& cfg, Fn fn) {
  std::vector<Outcome<R>> outcomes(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      auto& o = outcomes[i];
      o.path = files[i];
      o.subject_id = subject_id_from_path(files[i]);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        o.result = fn(read_volume(files[i], cfg.slice_axis));
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      o.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const auto n_workers = std::min<std::size_t>(cfg.effective_jobs(), std::max<std::size_t>(files.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject_id, a.path) < std::tie(b.subject_id, b.path);
  });
  // Two files mapping to one subject id would overwrite each other's output.
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].subject_id == outcomes[i - 1].subject_id) {
      outcomes[i].result.reset();
      outcomes[i].error = fmt::format("duplicate subject id '{}' (also {})", outcomes[i].subject_id,
                                      outcomes[i - 1].path.filename().string());
    }
  }
  for (const auto& o : outcomes) {
    if (!o.error.empty()) spdlog::error("{}: {}", o.path.string(), o.error);
  }
  return outcomes;
}

std::vector<fs::path> require_inputs(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw Error(ErrorKind::usage, "no --input given");
  auto files = expand_inputs(cfg.inputs);
  if (files.empty()) throw Error(ErrorKind::usage, "no input volumes matched");
  return files;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot create {}", path.string()));
  return out;
}

/// Double-quoted when the field holds a comma or quote.
std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

template <typename R>
int write_errors(const fs::path& path, const std::vector<Outcome<R>>& outcomes) {
  auto out = open_output(path);
  out << "subject_id,source,error\n";
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.error.empty()) continue;
    ++failures;
    fmt::print(out, "{},{},{}\n", csv_field(o.subject_id), csv_field(o.path.string()), csv_field(o.error));
  }
  return failures;
}

std::string format_roi(const BoundingBox& b) {
  return fmt::format("{}:{}:{}:{}", b.min_x, b.min_y, b.max_x, b.max_y);
}

std::vector<std::pair<std::string, std::string>> manifest_parameters(const RunConfig& cfg, const Volume3D& vol,
                                                                     int window) {
  std::vector<std::pair<std::string, std::string>> p;
  const auto& d = vol.dims();
  const auto& s = vol.spacing();
  p.emplace_back("source_dims", fmt::format("{},{},{}", d[0], d[1], d[2]));
  p.emplace_back("source_spacing", fmt::format("{},{},{}", s[0], s[1], s[2]));
  p.emplace_back("axis", fmt::format("{}", vol.slice_axis()));
  p.emplace_back("window", fmt::format("{}", window));
  if (cfg.window_mm) p.emplace_back("window_mm", fmt::format("{}", *cfg.window_mm));
  p.emplace_back("roi_mode", cfg.union_roi ? "union" : "largest");
  p.emplace_back("sigma", fmt::format("{}", cfg.canny.sigma));
  p.emplace_back("radius", fmt::format("{}", cfg.canny.radius));
  p.emplace_back("low_frac", fmt::format("{}", cfg.canny.low_frac));
  p.emplace_back("high_frac", fmt::format("{}", cfg.canny.high_frac));
  p.emplace_back("threshold_base",
                 cfg.canny.base == ThresholdBase::gradient_magnitude ? "gradient_magnitude" : "image_intensity");
  p.emplace_back("resize_factor", fmt::format("{}", cfg.resize.factor));
  p.emplace_back("resize_mode", std::string(to_string(cfg.resize.mode)));
  return p;
}

SelectParams params_for(const RunConfig& cfg, const Volume3D& vol) {
  auto p = cfg.select_params();
  if (cfg.window_mm) p.window = window_from_spacing(vol, *cfg.window_mm);
  return p;
}

/// Grey-level line plot of score against slice index (binary PGM).
void write_profile_plot(const fs::path& path, const SliceProfile& profile) {
  constexpr int kWidth = 640, kHeight = 240, kMargin = 10;
  Plane<std::uint8_t> img = Plane<std::uint8_t>::Constant(kHeight, kWidth, 255);
  const int n = profile.size();
  const double top = n > 0 ? profile.scores.maxCoeff() : 0.0;
  auto to_px = [&](int k) {
    const double fx = n > 1 ? static_cast<double>(k) / (n - 1) : 0.5;
    const double fy = top > 0.0 ? profile.scores[k] / top : 0.0;
    return std::pair<int, int>{kMargin + static_cast<int>(std::lround(fx * (kWidth - 2 * kMargin - 1))),
                               kHeight - 1 - kMargin - static_cast<int>(std::lround(fy * (kHeight - 2 * kMargin - 1)))};
  };
  img.row(kHeight - 1 - kMargin + 1).segment(kMargin, kWidth - 2 * kMargin).setConstant(160);
  for (int k = 0; k + 1 < n; ++k) {
    const auto [x0, y0] = to_px(k);
    const auto [x1, y1] = to_px(k + 1);
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const int x = x0 + (x1 - x0) * s / steps;
      const int y = y0 + (y1 - y0) * s / steps;
      img(y, x) = 0;
    }
  }
  auto out = open_output(path);
  out << "P5\n" << kWidth << ' ' << kHeight << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), img.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Subcommands

int cmd_select(const RunConfig& cfg) {
  cfg.validate();
  const auto files = require_inputs(cfg);
  struct Row {
    WindowSelection window;
    BoundingBox roi;
    std::string hash;
  };
  const auto outcomes = run_batch<Row>(files, cfg, [&](const Volume3D& vol) {
    const auto params = params_for(cfg, vol);
    auto stack = select_slices(vol, params);
    if (cfg.resize.factor > 1) stack = downsample(stack, cfg.resize);
    const auto m = write_stack(cfg.output / vol.subject_id(), stack, manifest_parameters(cfg, vol, params.window));
    return Row{stack.window, stack.roi, m.content_hash};
  });

  auto out = open_output(cfg.output / "summary.csv");
  out << "subject_id,source,status,start,window,total_score,roi,content_hash,duration_ms,error\n";
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.result) {
      const auto& r = *o.result;
      fmt::print(out, "{},{},ok,{},{},{},{},{},{},\n", csv_field(o.subject_id), csv_field(o.path.string()),
                 r.window.start, r.window.length, r.window.total_score, format_roi(r.roi), r.hash, o.duration_ms);
    } else {
      ++failures;
      fmt::print(out, "{},{},error,,,,,,{},{}\n", csv_field(o.subject_id), csv_field(o.path.string()),
                 o.duration_ms, csv_field(o.error));
    }
  }
  spdlog::info("select: {} subjects, {} failed", outcomes.size(), failures);
  return failures == 0 ? kExitOk : kExitSubjectFailure;
}

int cmd_profile(const RunConfig& cfg) {
  cfg.validate();
  const auto files = require_inputs(cfg);
  const auto outcomes = run_batch<SliceProfile>(files, cfg, [&](const Volume3D& vol) {
    SliceProfile profile;
    if (cfg.method == ProfileKind::edge_sum)
      profile = edge_sum_profile(vol, volume_roi(vol, cfg.union_roi), cfg.canny);
    else
      profile = entropy_profile(vol);
    auto out = open_output(cfg.output / fmt::format("{}_{}.csv", vol.subject_id(), to_string(profile.kind)));
    write_profile_csv(out, profile);
    if (cfg.plot) write_profile_plot(cfg.output / fmt::format("{}_{}.pgm", vol.subject_id(), to_string(profile.kind)), profile);
    return profile;
  });
  const int failures = write_errors(cfg.output / "errors.csv", outcomes);
  return failures == 0 ? kExitOk : kExitSubjectFailure;
}

int cmd_compare(const RunConfig& cfg) {
  cfg.validate();
  const auto files = require_inputs(cfg);
  const auto outcomes = run_batch<ComparisonReport>(
      files, cfg, [&](const Volume3D& vol) { return compare_methods(vol, params_for(cfg, vol)); });
  auto out = open_output(cfg.output / "comparison.csv");
  write_comparison_header(out);
  for (const auto& o : outcomes) {
    if (o.result) write_comparison_row(out, *o.result);
  }
  const int failures = write_errors(cfg.output / "errors.csv", outcomes);
  return failures == 0 ? kExitOk : kExitSubjectFailure;
}

namespace {

struct CommitteeInputs {
  std::vector<PredictionRecord> records;
  TruthLabels truth;
  std::vector<std::string> registry;
};

CommitteeInputs load_committee_inputs(const RunConfig& cfg) {
  if (cfg.predictions.empty()) throw Error(ErrorKind::usage, "--predictions is required");
  if (cfg.truth.empty()) throw Error(ErrorKind::usage, "--truth is required");
  std::ifstream pred(cfg.predictions);
  if (!pred) throw Error(ErrorKind::usage, fmt::format("cannot open {}", cfg.predictions.string()));
  std::ifstream truth(cfg.truth);
  if (!truth) throw Error(ErrorKind::usage, fmt::format("cannot open {}", cfg.truth.string()));

  CommitteeInputs in;
  in.records = read_predictions(pred);
  if (in.records.empty()) throw Error(ErrorKind::usage, "prediction file holds no records");
  in.truth = read_truth_csv(truth);
  in.registry = cfg.models.empty() ? registry_from_records(in.records) : cfg.models;
  return in;
}

}  // namespace

int cmd_committee(const RunConfig& cfg) {
  cfg.validate();
  const auto in = load_committee_inputs(cfg);
  const auto run = run_committee(in.records, in.registry);
  for (const auto& m : run.missing) spdlog::warn("subject {} has no prediction from {}", m.subject_id, m.model_id);
  const auto cm = confusion(in.truth, run.decisions);
  const auto m = metrics(cm);

  auto decisions = open_output(cfg.output / "decisions.csv");
  write_decisions_csv(decisions, run.decisions);
  auto metrics_out = open_output(cfg.output / "metrics.csv");
  write_metrics_csv(metrics_out, cm, m);
  auto contribution = open_output(cfg.output / "contribution.csv");
  write_contribution_csv(contribution, contribution_counts(run.decisions, in.registry));
  auto missing = open_output(cfg.output / "missing.csv");
  write_missing_csv(missing, run.missing);
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg) {
  cfg.validate();
  const auto in = load_committee_inputs(cfg);
  const auto subsets = cfg.subsets.empty() ? all_subsets(in.registry) : cfg.subsets;
  const auto rows = ablation(in.records, in.truth, subsets, in.registry);
  auto out = open_output(cfg.output / "ablation.csv");
  write_ablation_csv(out, rows);
  return kExitOk;
}

int cmd_cohort(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.inputs.size() != 1) throw Error(ErrorKind::usage, "cohort takes exactly one --input metadata CSV");
  std::ifstream in(cfg.inputs.front());
  if (!in) throw Error(ErrorKind::usage, fmt::format("cannot open {}", cfg.inputs.front()));
  const auto records = read_subject_csv(in);
  const auto cohort = build_cohort(records, cfg.cohort);
  const auto split = stratified_split(cohort, cfg.test_fraction, cfg.seed);
  for (const auto& w : split.warnings) spdlog::warn("stratified split: {}", w);

  auto c = open_output(cfg.output / "cohort.csv");
  write_cohort_csv(c, cohort);
  auto x = open_output(cfg.output / "exclusions.csv");
  write_exclusions_csv(x, cohort);
  auto s = open_output(cfg.output / "split.csv");
  write_split_csv(s, split);
  spdlog::info("cohort: {} records -> {} subjects ({} demented, {} non-demented); split {}/{}", records.size(),
               cohort.entries.size(), cohort.count(Diagnosis::demented), cohort.count(Diagnosis::non_demented),
               split.train.size(), split.test.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = std::make_shared<spdlog::logger>("slicescout", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_pattern("slicescout: %l: %v");
    spdlog::set_default_logger(logger);
  });
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("SLICESCOUT_LOG"); env != nullptr && *env != '\0')
    level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

void add_volume_options(CLI::App* sub) {
  sub->add_option("--input,-i", "Volume files, directories or glob patterns")->expected(1, -1);
  sub->add_option("--output,-o", "Output directory");
  sub->add_option("--axis", "Slice axis (0, 1 or 2)");
  sub->add_option("--window", "Window length W in slices");
  sub->add_option("--window-mm", "Derive W from this extent in mm and the slice spacing");
  sub->add_option("--method", "Slice score: edge_sum or entropy");
  sub->add_option("--sigma", "Gaussian sigma for Canny");
  sub->add_option("--radius", "Gaussian kernel radius");
  sub->add_option("--low-frac", "Low hysteresis threshold fraction");
  sub->add_option("--high-frac", "High hysteresis threshold fraction");
  sub->add_flag("--absolute-intensity-thresholds", "Threshold against max intensity instead of max gradient");
  sub->add_flag("--top-k-mode", "Pick the top-W slices without contiguity (ablation)");
  sub->add_flag("--roi-union", "Use the union of slice boxes as ROI");
  sub->add_option("--resize", "Integer downsampling factor (1 disables)");
  sub->add_option("--resize-mode", "area_average or nearest");
  sub->add_option("--jobs,-j", "Worker threads (0 = all cores)");
  sub->add_option("--seed", "Random seed");
  sub->add_option("--config", "key=value configuration file");
}

void add_committee_options(CLI::App* sub) {
  sub->add_option("--predictions", "JSON Lines prediction records");
  sub->add_option("--truth", "CSV subject_id,label");
  sub->add_option("--models", "Model registry order, comma separated");
  sub->add_option("--output,-o", "Output directory");
  sub->add_option("--config", "key=value configuration file");
}

RunConfig resolve_config(const CLI::App* sub) {
  RunConfig cfg;
  if (const auto* opt = sub->get_option_no_throw("--config"); opt != nullptr && opt->count() > 0)
    apply_config_file(cfg, opt->as<std::string>());

  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string key = opt->get_single_name();
    if (key == "help" || key == "config") continue;
    if (opt->get_expected_max() == 0) {  // flag
      apply_setting(cfg, key, "true");
      continue;
    }
    if (key == "input") cfg.inputs.clear();
    if (key == "models") cfg.models.clear();
    if (key == "subsets") cfg.subsets.clear();
    for (const auto& value : opt->results()) apply_setting(cfg, key, value);
  }
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  configure_logging();
  CLI::App app{"slicescout: MRI slice-window selection and committee evaluation"};
  app.require_subcommand(1);

  auto* select = app.add_subcommand("select", "Select the most informative slice window per volume");
  add_volume_options(select);
  auto* profile = app.add_subcommand("profile", "Write per-slice score profiles");
  add_volume_options(profile);
  profile->add_flag("--plot", "Also render each profile as a PGM image");
  auto* compare = app.add_subcommand("compare", "Compare edge-sum and entropy windows");
  add_volume_options(compare);
  auto* committee = app.add_subcommand("committee", "Max-confidence committee over prediction records");
  add_committee_options(committee);
  auto* ablate = app.add_subcommand("ablate", "Committee metrics for model subsets");
  add_committee_options(ablate);
  ablate->add_option("--subsets", "Subsets such as 'a;b;a+b' (default: all)");
  auto* cohort = app.add_subcommand("cohort", "Build the cohort and train/test split from metadata");
  cohort->add_option("--input,-i", "Metadata CSV");
  cohort->add_option("--output,-o", "Output directory");
  cohort->add_option("--min-age", "Minimum age in years");
  cohort->add_option("--session", "Required session id");
  cohort->add_flag("--all-visits", "Keep every visit instead of the first");
  cohort->add_option("--test-fraction", "Test share of the stratified split");
  cohort->add_option("--seed", "Split seed");
  cohort->add_option("--config", "key=value configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::vector<std::pair<CLI::App*, int (*)(const RunConfig&)>> commands{
      {select, cmd_select}, {profile, cmd_profile}, {compare, cmd_compare},
      {committee, cmd_committee}, {ablate, cmd_ablate}, {cohort, cmd_cohort}};
  for (const auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    try {
      return fn(resolve_config(sub));
    } catch (const Error& e) {
      spdlog::error("{}", e.what());
      return e.kind() == ErrorKind::usage || e.kind() == ErrorKind::format ? kExitUsage : kExitSubjectFailure;
    } catch (const std::exception& e) {
      spdlog::error("{}", e.what());
      return kExitSubjectFailure;
    }
  }
  return kExitUsage;
}

}  // namespace slicescout
