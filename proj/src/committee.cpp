#include "slicescout/committee.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"
#include "json.hpp"

namespace slicescout {

std::string_view to_string(Diagnosis d) noexcept {
  return d == Diagnosis::demented ? "demented" : "non_demented";
}

Diagnosis parse_diagnosis(std::string_view text) {
  text = detail::trim(text);
  if (text == "demented" || text == "1") return Diagnosis::demented;
  if (text == "non_demented" || text == "0") return Diagnosis::non_demented;
  throw Error(ErrorKind::format, fmt::format("unknown label '{}'", text));
}

ClassScores softmax(const ClassScores& scores) {
  const Eigen::Array2d p = softmax(Eigen::Array2d(scores[0], scores[1]));
  return {p[0], p[1]};
}

ClassScores PredictionRecord::probabilities() const {
  if (logits.has_value() == confidences.has_value())
    throw Error(ErrorKind::input, fmt::format("record ({}, {}) needs exactly one of logits or confidences",
                                              subject_id, model_id));
  if (logits) return softmax(*logits);
  const auto& c = *confidences;
  for (double v : c) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw Error(ErrorKind::value, fmt::format("record ({}, {}): confidences must lie in [0, 1]",
                                                subject_id, model_id));
  }
  const double sum = c[0] + c[1];
  if (std::abs(sum - 1.0) > 1e-6)
    throw Error(ErrorKind::value, fmt::format("record ({}, {}): confidences sum to {}, not 1",
                                              subject_id, model_id, sum));
  return {c[0] / sum, c[1] / sum};
}

double PredictionRecord::confidence() const {
  const auto p = probabilities();
  return std::max(p[0], p[1]);
}

Diagnosis PredictionRecord::predicted_class() const {
  const auto p = probabilities();
  return p[1] > p[0] ? Diagnosis::demented : Diagnosis::non_demented;
}

namespace {

std::ptrdiff_t registry_position(std::span<const std::string> registry, std::string_view model) {
  const auto it = std::find(registry.begin(), registry.end(), model);
  return it == registry.end() ? -1 : it - registry.begin();
}

}  // namespace

CommitteeDecision committee_decide(std::span<const PredictionRecord> records,
                                   std::span<const std::string> registry) {
  if (records.empty()) throw Error(ErrorKind::input, "committee needs at least one prediction");
  const std::string& subject = records.front().subject_id;

  std::set<std::string_view> seen;
  const PredictionRecord* best = nullptr;
  double best_conf = -1.0;
  std::ptrdiff_t best_pos = 0;
  for (const auto& r : records) {
    if (r.subject_id != subject)
      throw Error(ErrorKind::input, fmt::format("committee given records for both {} and {}", subject, r.subject_id));
    if (!seen.insert(r.model_id).second)
      throw Error(ErrorKind::input, fmt::format("duplicate prediction for ({}, {})", subject, r.model_id));
    const auto pos = registry_position(registry, r.model_id);
    if (pos < 0) throw Error(ErrorKind::input, fmt::format("model '{}' is not in the registry", r.model_id));
    const double conf = r.confidence();
    if (best == nullptr || conf > best_conf || (conf == best_conf && pos < best_pos)) {
      best = &r;
      best_conf = conf;
      best_pos = pos;
    }
  }
  return {subject, best->model_id, best->predicted_class(), best_conf, static_cast<int>(records.size())};
}

std::vector<std::string> registry_from_records(std::span<const PredictionRecord> records) {
  std::vector<std::string> registry;
  for (const auto& r : records) {
    if (registry_position(registry, r.model_id) < 0) registry.push_back(r.model_id);
  }
  return registry;
}

CommitteeRun run_committee(std::span<const PredictionRecord> records, std::span<const std::string> registry) {
  std::map<std::string, std::vector<PredictionRecord>, std::less<>> by_subject;
  for (const auto& r : records) by_subject[r.subject_id].push_back(r);

  CommitteeRun run;
  for (const auto& [subject, group] : by_subject) {
    run.decisions.push_back(committee_decide(group, registry));
    for (const auto& model : registry) {
      const bool present = std::any_of(group.begin(), group.end(), [&](const auto& r) { return r.model_id == model; });
      if (!present) run.missing.push_back({subject, model});
    }
  }
  return run;
}

std::vector<std::pair<std::string, long long>> contribution_counts(std::span<const CommitteeDecision> decisions,
                                                                   std::span<const std::string> registry) {
  std::vector<std::pair<std::string, long long>> counts;
  for (const auto& m : registry) counts.emplace_back(m, 0);
  for (const auto& d : decisions) {
    const auto pos = registry_position(registry, d.chosen_model);
    if (pos < 0) {
      counts.emplace_back(d.chosen_model, 1);
      continue;
    }
    ++counts[pos].second;
  }
  return counts;
}

ConfusionMatrix confusion(const TruthLabels& truth, std::span<const CommitteeDecision> decisions) {
  ConfusionMatrix cm;
  for (const auto& d : decisions) {
    const auto it = truth.find(d.subject_id);
    if (it == truth.end()) throw Error(ErrorKind::input, fmt::format("no truth label for subject {}", d.subject_id));
    const bool actual = it->second == Diagnosis::demented;
    const bool predicted = d.predicted_class == Diagnosis::demented;
    if (actual && predicted) ++cm.tp;
    else if (!actual && !predicted) ++cm.tn;
    else if (predicted) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.tn < 0 || cm.fp < 0 || cm.fn < 0)
    throw Error(ErrorKind::parameter, "confusion counts must be nonnegative");
  if (cm.total() == 0) throw Error(ErrorKind::parameter, "cannot score an empty confusion matrix");
  auto ratio = [](long long num, long long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  return m;
}

std::vector<std::vector<std::string>> all_subsets(std::span<const std::string> registry) {
  const int n = static_cast<int>(registry.size());
  std::vector<std::vector<std::string>> out;
  for (int size = 1; size <= n; ++size) {
    // Lexicographic combinations of registry positions.
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    for (;;) {
      std::vector<std::string> subset;
      for (int i : idx) subset.push_back(registry[i]);
      out.push_back(std::move(subset));
      int i = size - 1;
      while (i >= 0 && idx[i] == n - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

std::vector<AblationRow> ablation(std::span<const PredictionRecord> records, const TruthLabels& truth,
                                  std::span<const std::vector<std::string>> subsets,
                                  std::span<const std::string> registry) {
  std::vector<AblationRow> rows;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw Error(ErrorKind::input, "ablation subsets must be nonempty");
    for (const auto& m : subset) {
      if (registry_position(registry, m) < 0)
        throw Error(ErrorKind::input, fmt::format("unknown model '{}' in ablation subset", m));
    }
    // Registry order is preserved inside the subset for tie-breaking.
    std::vector<std::string> sub_registry;
    for (const auto& m : registry) {
      if (std::find(subset.begin(), subset.end(), m) != subset.end()) sub_registry.push_back(m);
    }
    std::vector<PredictionRecord> kept;
    for (const auto& r : records) {
      if (registry_position(sub_registry, r.model_id) >= 0) kept.push_back(r);
    }
    const auto run = run_committee(kept, sub_registry);
    AblationRow row{subset, confusion(truth, run.decisions), {}};
    row.metrics = metrics(row.matrix);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fail = [&](std::string_view why) {
      return Error(ErrorKind::format, fmt::format("predictions line {}: {}", line_no, why));
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("expected a JSON object");
    PredictionRecord r;
    auto text_field = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string()) throw fail(fmt::format("missing string field '{}'", key));
      return j[key].get<std::string>();
    };
    auto pair_field = [&](const char* key) -> std::optional<ClassScores> {
      if (!j.contains(key)) return std::nullopt;
      const auto& v = j[key];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw fail(fmt::format("'{}' must be an array of two numbers", key));
      return ClassScores{v[0].get<double>(), v[1].get<double>()};
    };
    r.subject_id = text_field("subject_id");
    r.model_id = text_field("model_id");
    r.logits = pair_field("logits");
    r.confidences = pair_field("confidences");
    for (const auto& [key, value] : j.items()) {
      if (key != "subject_id" && key != "model_id" && key != "logits" && key != "confidences")
        throw fail(fmt::format("unknown field '{}'", key));
    }
    try {
      r.probabilities();
    } catch (const Error& e) {
      throw fail(e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

TruthLabels read_truth_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, "truth CSV: empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "subject_id" || header[1] != "label")
    throw Error(ErrorKind::format, "truth CSV: header must be subject_id,label");
  TruthLabels truth;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 2) throw Error(ErrorKind::format, fmt::format("truth CSV line {}: expected 2 fields", line_no));
    Diagnosis d;
    try {
      d = parse_diagnosis(f[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::format, fmt::format("truth CSV line {}: {}", line_no, e.what()));
    }
    if (!truth.emplace(f[0], d).second)
      throw Error(ErrorKind::input, fmt::format("truth CSV line {}: duplicate subject {}", line_no, f[0]));
  }
  return truth;
}

std::string format_metric(const std::optional<double>& value) {
  return value ? fmt::format("{}", *value) : std::string("undefined");
}

void write_decisions_csv(std::ostream& out, std::span<const CommitteeDecision> decisions) {
  out << "subject_id,chosen_model,predicted_class,confidence,models_consulted\n";
  for (const auto& d : decisions)
    fmt::print(out, "{},{},{},{},{}\n", d.subject_id, d.chosen_model, to_string(d.predicted_class), d.confidence,
               d.models_consulted);
}

void write_metrics_csv(std::ostream& out, const ConfusionMatrix& cm, const Metrics& m) {
  out << "tp,tn,fp,fn,total,accuracy,sensitivity,specificity\n";
  fmt::print(out, "{},{},{},{},{},{},{},{}\n", cm.tp, cm.tn, cm.fp, cm.fn, cm.total(), m.accuracy,
             format_metric(m.sensitivity), format_metric(m.specificity));
}

void write_contribution_csv(std::ostream& out, std::span<const std::pair<std::string, long long>> counts) {
  out << "model_id,decisions\n";
  for (const auto& [model, n] : counts) fmt::print(out, "{},{}\n", model, n);
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "models,subjects,accuracy,sensitivity,specificity\n";
  for (const auto& r : rows) {
    std::string label;
    for (const auto& m : r.models) label += (label.empty() ? "" : "+") + m;
    fmt::print(out, "{},{},{},{},{}\n", label, r.matrix.total(), r.metrics.accuracy,
               format_metric(r.metrics.sensitivity), format_metric(r.metrics.specificity));
  }
}

void write_missing_csv(std::ostream& out, std::span<const MissingOutput> missing) {
  out << "subject_id,missing_model\n";
  for (const auto& m : missing) fmt::print(out, "{},{}\n", m.subject_id, m.model_id);
}

}  // namespace slicescout
