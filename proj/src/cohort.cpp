#include "slicescout/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"

namespace slicescout {

std::string_view to_string(CohortSource s) noexcept {
  switch (s) {
    case CohortSource::oasis1: return "oasis1";
    case CohortSource::oasis2: return "oasis2";
    case CohortSource::other: return "other";
  }
  return "other";
}

CohortSource parse_cohort_source(std::string_view text) {
  if (text == "oasis1") return CohortSource::oasis1;
  if (text == "oasis2") return CohortSource::oasis2;
  return CohortSource::other;
}

std::optional<Diagnosis> label_from_cdr(std::optional<double> cdr) {
  if (!cdr) return std::nullopt;
  if (*cdr == 0.0) return Diagnosis::non_demented;
  if (*cdr == 0.5 || *cdr == 1.0 || *cdr == 2.0) return Diagnosis::demented;
  throw Error(ErrorKind::value, fmt::format("CDR {} is not one of 0, 0.5, 1, 2", *cdr));
}

long long Cohort::count(Diagnosis d) const {
  return std::count_if(entries.begin(), entries.end(), [d](const CohortEntry& e) { return e.label == d; });
}

namespace {

// "MR10" sorts after "MR2": a trailing run of digits compares by value.
std::tuple<std::string_view, long long, std::string_view> visit_key(std::string_view v) {
  std::size_t digits = v.size();
  while (digits > 0 && v[digits - 1] >= '0' && v[digits - 1] <= '9') --digits;
  const auto suffix = v.substr(digits);
  long long n = -1;
  if (!suffix.empty() && suffix.size() < 18) n = std::stoll(std::string(suffix));
  return {v.substr(0, digits), n, v};
}

bool record_less(const SubjectRecord& a, const SubjectRecord& b) {
  if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
  if (a.visit_id != b.visit_id) return visit_key(a.visit_id) < visit_key(b.visit_id);
  return a.session_id < b.session_id;
}

}  // namespace

Cohort build_cohort(std::span<const SubjectRecord> records, const CohortRules& rules) {
  std::vector<SubjectRecord> rows(records.begin(), records.end());
  std::sort(rows.begin(), rows.end(), record_less);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.subject_id == b.subject_id && a.visit_id == b.visit_id && a.session_id == b.session_id)
      throw Error(ErrorKind::input, fmt::format("duplicate metadata row ({}, {}, {})", a.subject_id, a.visit_id,
                                                a.session_id));
  }
  for (const auto& r : rows) {
    if (!(r.age >= 0.0)) throw Error(ErrorKind::value, fmt::format("subject {}: negative age", r.subject_id));
    label_from_cdr(r.cdr);  // validates the CDR value
  }

  Cohort cohort;
  auto exclude = [&](const SubjectRecord& r, std::string_view reason) {
    cohort.exclusions.push_back({r, std::string(reason)});
  };

  // Rows are sorted, so each subject is a contiguous run with visits ascending.
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].subject_id == rows[begin].subject_id) ++end;

    for (std::size_t v = begin; v < end;) {
      std::size_t v_end = v;
      while (v_end < end && rows[v_end].visit_id == rows[v].visit_id) ++v_end;
      const bool first_visit = v == begin;

      if (rules.first_visit_only && !first_visit) {
        for (std::size_t i = v; i < v_end; ++i) exclude(rows[i], "not_first_visit");
      } else {
        const auto hit = std::find_if(rows.begin() + v, rows.begin() + v_end,
                                      [&](const SubjectRecord& r) { return r.session_id == rules.required_session; });
        if (hit == rows.begin() + v_end) {
          for (std::size_t i = v; i < v_end; ++i) exclude(rows[i], "missing_required_session");
        } else {
          for (auto it = rows.begin() + v; it != rows.begin() + v_end; ++it) {
            if (it != hit) exclude(*it, "other_session");
          }
          const auto label = label_from_cdr(hit->cdr);
          if (hit->age < rules.min_age) {
            exclude(*hit, "under_min_age");
          } else if (!label) {
            exclude(*hit, "missing_cdr");
          } else {
            cohort.entries.push_back({*hit, *label});
          }
        }
      }
      v = v_end;
    }
    begin = end;
  }
  std::sort(cohort.exclusions.begin(), cohort.exclusions.end(),
            [](const Exclusion& a, const Exclusion& b) { return record_less(a.record, b.record); });
  return cohort;
}

namespace {

// Uniform integer in [0, n) by rejection on the raw engine output.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[bounded(rng, i)]);
}

}  // namespace

Split stratified_split(const Cohort& cohort, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::parameter, "test fraction must lie in [0, 1)");

  std::array<std::vector<CohortEntry>, 2> classes;
  for (const auto& e : cohort.entries) classes[static_cast<int>(e.label)].push_back(e);
  for (auto& c : classes) {
    std::sort(c.begin(), c.end(),
              [](const CohortEntry& a, const CohortEntry& b) { return a.record.subject_id < b.record.subject_id; });
  }

  Split split;
  const auto total = static_cast<long long>(cohort.entries.size());
  const long long target = std::llround(static_cast<double>(total) * test_fraction);
  std::array<long long, 2> quota{};
  std::array<double, 2> remainder{};
  for (int c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(classes[c].size()) * test_fraction;
    quota[c] = std::llround(exact);
    remainder[c] = exact - static_cast<double>(quota[c]);
    if (test_fraction > 0.0 && !classes[c].empty() && static_cast<double>(classes[c].size()) < 1.0 / test_fraction)
      split.warnings.push_back(fmt::format("class {} has {} members, fewer than 1/test_fraction",
                                           to_string(static_cast<Diagnosis>(c)), classes[c].size()));
  }
  while (quota[0] + quota[1] < target) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] -= 1.0;
  }
  while (quota[0] + quota[1] > target) {
    const int c = remainder[1] < remainder[0] ? 1 : 0;
    --quota[c];
    remainder[c] += 1.0;
  }

  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto members = classes[c];
    fisher_yates(members, rng);
    const auto n_test = static_cast<std::size_t>(std::clamp<long long>(quota[c], 0, members.size()));
    split.test.insert(split.test.end(), members.begin(), members.begin() + n_test);
    split.train.insert(split.train.end(), members.begin() + n_test, members.end());
  }
  auto by_id = [](const CohortEntry& a, const CohortEntry& b) { return a.record.subject_id < b.record.subject_id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

std::vector<SubjectRecord> read_subject_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, "metadata CSV: empty file");
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected{"subject_id", "visit_id", "session_id", "age", "cdr", "source"};
  if (header != expected)
    throw Error(ErrorKind::format, "metadata CSV: header must be subject_id,visit_id,session_id,age,cdr,source");
  std::vector<SubjectRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) throw Error(ErrorKind::format, fmt::format("metadata CSV line {}: expected 6 fields", line_no));
    try {
      SubjectRecord r;
      r.subject_id = f[0];
      r.visit_id = f[1];
      r.session_id = f[2];
      r.age = detail::parse_double(f[3], "age");
      if (!f[4].empty()) r.cdr = detail::parse_double(f[4], "cdr");
      r.source = parse_cohort_source(f[5]);
      if (r.subject_id.empty()) throw Error(ErrorKind::format, "empty subject_id");
      records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(ErrorKind::format, fmt::format("metadata CSV line {}: {}", line_no, e.what()));
    }
  }
  return records;
}

namespace {

std::string cdr_text(const std::optional<double>& cdr) { return cdr ? fmt::format("{}", *cdr) : std::string(); }

}  // namespace

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  out << "subject_id,visit_id,session_id,age,cdr,source,label\n";
  for (const auto& e : cohort.entries) {
    const auto& r = e.record;
    fmt::print(out, "{},{},{},{},{},{},{}\n", r.subject_id, r.visit_id, r.session_id, r.age, cdr_text(r.cdr),
               to_string(r.source), to_string(e.label));
  }
}

void write_exclusions_csv(std::ostream& out, const Cohort& cohort) {
  out << "subject_id,visit_id,session_id,age,cdr,source,reason\n";
  for (const auto& x : cohort.exclusions) {
    const auto& r = x.record;
    fmt::print(out, "{},{},{},{},{},{},{}\n", r.subject_id, r.visit_id, r.session_id, r.age, cdr_text(r.cdr),
               to_string(r.source), x.reason);
  }
}

void write_split_csv(std::ostream& out, const Split& split) {
  out << "subject_id,label,partition\n";
  for (const auto& e : split.train) fmt::print(out, "{},{},train\n", e.record.subject_id, to_string(e.label));
  for (const auto& e : split.test) fmt::print(out, "{},{},test\n", e.record.subject_id, to_string(e.label));
}

}  // namespace slicescout
