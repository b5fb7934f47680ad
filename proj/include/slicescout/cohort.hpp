#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slicescout/committee.hpp"

namespace slicescout {

enum class CohortSource { oasis1, oasis2, other };

std::string_view to_string(CohortSource s) noexcept;
CohortSource parse_cohort_source(std::string_view text);

/// One metadata row: a single imaging session of one visit of one subject.
struct SubjectRecord {
  std::string subject_id;
  std::string visit_id;
  std::string session_id;
  double age = 0.0;
  std::optional<double> cdr;  // one of 0, 0.5, 1, 2; empty when not rated
  CohortSource source = CohortSource::other;
};

/// CDR 0 -> non_demented; 0.5, 1, 2 -> demented; unrated -> empty (drop).
std::optional<Diagnosis> label_from_cdr(std::optional<double> cdr);

struct CohortRules {
  double min_age = 60.0;
  std::string required_session = "mpr-1";
  /// When false every visit keeps its own row (longitudinal use).
  bool first_visit_only = true;
};

struct CohortEntry {
  SubjectRecord record;
  Diagnosis label = Diagnosis::non_demented;
};

struct Exclusion {
  SubjectRecord record;
  std::string reason;
};

struct Cohort {
  std::vector<CohortEntry> entries;    // sorted by subject_id
  std::vector<Exclusion> exclusions;   // sorted by subject_id, visit, session

  long long count(Diagnosis d) const;
};

/// Applies, in order: first-visit selection (lowest visit id, compared with
/// embedded numbers by value), the required-session filter, the age filter
/// and CDR labelling. Every input row ends up either in the cohort or in the
/// exclusion log with the rule that removed it:
///   not_first_visit, missing_required_session, other_session,
///   under_min_age, missing_cdr
/// Duplicate (subject, visit, session) rows are an input error.
Cohort build_cohort(std::span<const SubjectRecord> records, const CohortRules& rules = {});

struct Split {
  std::vector<CohortEntry> train;  // sorted by subject_id
  std::vector<CohortEntry> test;   // sorted by subject_id
  std::vector<std::string> warnings;
};

/// Test size round(N * fraction); per-class test counts round(n_c * fraction)
/// nudged by one where needed to reach that total. Members are drawn by a
/// seeded Fisher-Yates shuffle on mt19937_64, identical on every platform.
Split stratified_split(const Cohort& cohort, double test_fraction = 0.10, std::uint64_t seed = 0);

/// CSV with header `subject_id,visit_id,session_id,age,cdr,source`; an empty
/// cdr field means unrated.
std::vector<SubjectRecord> read_subject_csv(std::istream& in);

void write_cohort_csv(std::ostream& out, const Cohort& cohort);
void write_exclusions_csv(std::ostream& out, const Cohort& cohort);
void write_split_csv(std::ostream& out, const Split& split);

}  // namespace slicescout
