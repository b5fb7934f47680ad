#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "slicescout/error.hpp"

namespace slicescout {

/// Class order everywhere is [non_demented, demented]; demented is positive.
enum class Diagnosis { non_demented = 0, demented = 1 };

std::string_view to_string(Diagnosis d) noexcept;
Diagnosis parse_diagnosis(std::string_view text);

using ClassScores = std::array<double, 2>;

/// Numerically stable softmax: exp(s - max s) / sum exp(s - max s).
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::ArrayBase<Derived>& scores) {
  if (!scores.isFinite().all()) throw Error(ErrorKind::value, "softmax input must be finite");
  const auto shifted = (scores - scores.maxCoeff()).exp().eval();
  return shifted / shifted.sum();
}

ClassScores softmax(const ClassScores& scores);

/// One model's output for one subject. Exactly one of `logits` or
/// `confidences` is set on input.
struct PredictionRecord {
  std::string subject_id;
  std::string model_id;
  std::optional<ClassScores> logits;
  std::optional<ClassScores> confidences;

  /// Class probabilities: softmax of the logits, or the given confidences
  /// rescaled to sum to 1. Throws on invalid input.
  ClassScores probabilities() const;
  /// Largest class probability.
  double confidence() const;
  /// Arg-max class; an exact tie resolves to non_demented.
  Diagnosis predicted_class() const;
};

struct CommitteeDecision {
  std::string subject_id;
  std::string chosen_model;
  Diagnosis predicted_class = Diagnosis::non_demented;
  double confidence = 0.0;
  int models_consulted = 0;
};

/// Max-confidence arbitration over one subject's records. Equal confidences
/// resolve to the model listed first in `registry`, so the decision does not
/// depend on record order. Records from models outside the registry, mixed
/// subjects and duplicate models are input errors.
CommitteeDecision committee_decide(std::span<const PredictionRecord> records,
                                   std::span<const std::string> registry);

/// Model ids in order of first appearance.
std::vector<std::string> registry_from_records(std::span<const PredictionRecord> records);

struct MissingOutput {
  std::string subject_id;
  std::string model_id;
};

struct CommitteeRun {
  std::vector<CommitteeDecision> decisions;  // sorted by subject_id
  std::vector<MissingOutput> missing;        // registry models absent for a subject
};

/// Groups records by subject and decides each. Subjects lacking some models
/// are decided over what is present and reported in `missing`.
CommitteeRun run_committee(std::span<const PredictionRecord> records, std::span<const std::string> registry);

/// (model, count) in registry order; counts sum to decisions.size().
std::vector<std::pair<std::string, long long>> contribution_counts(std::span<const CommitteeDecision> decisions,
                                                                   std::span<const std::string> registry);

struct ConfusionMatrix {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;

  long long total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

using TruthLabels = std::map<std::string, Diagnosis, std::less<>>;

ConfusionMatrix confusion(const TruthLabels& truth, std::span<const CommitteeDecision> decisions);

/// Accuracy, sensitivity and specificity. A ratio whose denominator is zero
/// is left empty and reported as "undefined".
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

Metrics metrics(const ConfusionMatrix& cm);

struct AblationRow {
  std::vector<std::string> models;
  ConfusionMatrix matrix;
  Metrics metrics;
};

/// Every nonempty subset of the registry: singletons first, then pairs, and
/// so on, each group in registry order.
std::vector<std::vector<std::string>> all_subsets(std::span<const std::string> registry);

/// Runs the committee restricted to each subset, rows in the given order.
std::vector<AblationRow> ablation(std::span<const PredictionRecord> records, const TruthLabels& truth,
                                  std::span<const std::vector<std::string>> subsets,
                                  std::span<const std::string> registry);

// ---------------------------------------------------------------------------
// File formats

/// JSON Lines, one object per line:
///   {"subject_id": "...", "model_id": "...", "logits": [a, b]}
///   {"subject_id": "...", "model_id": "...", "confidences": [a, b]}
/// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<PredictionRecord> read_predictions(std::istream& in);

/// CSV `subject_id,label` with a header row. Labels: demented/non_demented
/// (also 1/0).
TruthLabels read_truth_csv(std::istream& in);

void write_decisions_csv(std::ostream& out, std::span<const CommitteeDecision> decisions);
void write_metrics_csv(std::ostream& out, const ConfusionMatrix& cm, const Metrics& m);
void write_contribution_csv(std::ostream& out, std::span<const std::pair<std::string, long long>> counts);
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
void write_missing_csv(std::ostream& out, std::span<const MissingOutput> missing);

/// "undefined" for an empty metric, otherwise the shortest round-trip form.
std::string format_metric(const std::optional<double>& value);

}  // namespace slicescout
