#pragma once

// Fixtures and independent reference implementations shared by the unit
// tests and the acceptance runner. The oracles deliberately avoid the code
// paths of the library they check.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slicescout/cohort.hpp"
#include "slicescout/committee.hpp"
#include "slicescout/edges.hpp"
#include "slicescout/roi.hpp"

namespace testkit {

using namespace slicescout;

// --- oracles ---------------------------------------------------------------

/// Exhaustive arg-max of w0 * w1 * (mu0 - mu1)^2 over t in exact rational
/// arithmetic, with p_i = n_i / N taken literally. Empty when no t leaves
/// both classes populated.
std::optional<int> otsu_oracle(const Histogram256& hist);

/// Start of the first maximum-sum window, by summing every window from
/// scratch in long double.
int window_oracle(const Eigen::VectorXd& scores, int width);

/// Direct 2D convolution with gaussian_kernel(sigma, radius), replicating
/// borders by clamped indexing.
PlaneXd convolve_oracle(const PlaneXd& plane, double sigma, int radius);

/// Per-pixel check of the NMS rule on a Canny result: returns the number of
/// edge pixels that are not directional local maxima at or above `low`.
long long nms_violations(const CannyResult& r);

/// Flood fill over candidate pixels from the strong set; returns the number
/// of pixels where the result differs from `r.edges`.
long long hysteresis_violations(const CannyResult& r);

// --- fixtures --------------------------------------------------------------

/// A random slice of a noisy ellipse, seeded.
PlaneXd random_phantom_slice(std::mt19937_64& rng, int width, int height);

/// One row of a committee fixture: which models are right (registry order
/// resnet, cnn, efficientnet), their confidence ranking (highest first),
/// how many subjects share the pattern.
struct PatternRow {
  std::array<bool, 3> correct;
  std::array<int, 3> ranking;
  int count;
};

struct CommitteeFixture {
  std::vector<std::string> registry;
  std::vector<PredictionRecord> records;
  TruthLabels truth;
};

/// 34 subjects: singles 27/29/30 correct, pairs 28/30/31, all three 32;
/// the committee picks resnet 3, cnn 6, efficientnet 25 times; the two
/// committee errors are one false negative and one false positive.
CommitteeFixture committee_fixture_exact();

/// Same singles, triple and contributions, with every pair between the best
/// single model and the triple (30, 30, 32).
CommitteeFixture committee_fixture_ordered();

CommitteeFixture build_committee_fixture(const std::vector<PatternRow>& rows, std::uint64_t seed);

/// Metadata shaped like the two source cohorts: 416 single-visit subjects
/// (20 with a repeat visit, 198 aged 60+) and 150 longitudinal subjects
/// (4 without mpr-1 on the first visit). 164 of the retained 344 are
/// demented.
std::vector<SubjectRecord> cohort_fixture_oasis1();
std::vector<SubjectRecord> cohort_fixture_oasis2();

/// A fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace testkit
