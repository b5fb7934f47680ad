#include "testkit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

namespace testkit {

namespace mp = boost::multiprecision;

std::optional<int> otsu_oracle(const Histogram256& hist) {
  const mp::cpp_rational n_total(static_cast<long long>(std::accumulate(hist.counts.begin(), hist.counts.end(),
                                                                        std::uint64_t{0})));
  if (n_total == 0) return std::nullopt;
  std::array<mp::cpp_rational, kHistogramBins> p;
  for (int i = 0; i < kHistogramBins; ++i) p[i] = mp::cpp_rational(static_cast<long long>(hist.counts[i])) / n_total;

  std::optional<int> best;
  mp::cpp_rational best_var = -1;
  mp::cpp_rational w0 = 0, m0 = 0;
  mp::cpp_rational m_all = 0;
  for (int i = 0; i < kHistogramBins; ++i) m_all += p[i] * i;
  for (int t = 0; t < kHistogramBins - 1; ++t) {
    w0 += p[t];
    m0 += p[t] * t;
    const mp::cpp_rational w1 = 1 - w0;
    if (w0 == 0 || w1 == 0) continue;
    const mp::cpp_rational mu0 = m0 / w0;
    const mp::cpp_rational mu1 = (m_all - m0) / w1;
    const mp::cpp_rational var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

int window_oracle(const Eigen::VectorXd& scores, int width) {
  int best = 0;
  long double best_sum = -1;
  for (int s = 0; s + width <= scores.size(); ++s) {
    long double sum = 0;
    for (int k = s; k < s + width; ++k) sum += scores[k];
    if (sum > best_sum) {
      best_sum = sum;
      best = s;
    }
  }
  return best;
}

PlaneXd convolve_oracle(const PlaneXd& plane, double sigma, int radius) {
  const Eigen::MatrixXd k = gaussian_kernel(sigma, radius);
  const int h = static_cast<int>(plane.rows()), w = static_cast<int>(plane.cols());
  PlaneXd out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int sy = std::clamp(y - dy, 0, h - 1), sx = std::clamp(x - dx, 0, w - 1);
          acc += k(dy + radius, dx + radius) * plane(sy, sx);
        }
      }
      out(y, x) = acc;
    }
  }
  return out;
}

namespace {

// Neighbour offsets across the edge, picked from the gradient components by
// slope comparison against tan(22.5 deg) and tan(67.5 deg).
std::array<int, 4> across(double gx, double gy) {
  const double t1 = std::tan(M_PI / 8), t2 = std::tan(3 * M_PI / 8);
  if (gx < 0 || (gx == 0 && gy < 0)) {
    gx = -gx;
    gy = -gy;
  }
  if (gx == 0) return {0, -1, 0, 1};
  const double slope = gy / gx;
  if (std::abs(slope) < t1) return {-1, 0, 1, 0};
  if (slope >= t2 || slope <= -t2) return {0, -1, 0, 1};
  if (slope > 0) return {-1, -1, 1, 1};
  return {1, -1, -1, 1};
}

}  // namespace

long long nms_violations(const CannyResult& r) {
  long long bad = 0;
  const auto& g = r.gradient;
  for (Eigen::Index y = 0; y < r.edges.rows(); ++y) {
    for (Eigen::Index x = 0; x < r.edges.cols(); ++x) {
      if (!r.edges(y, x)) continue;
      const double m = g.magnitude(y, x);
      const auto [bx, by, ax, ay] = across(g.gx(y, x), g.gy(y, x));
      const bool ok = m >= r.low && m > 0 && m > g.magnitude(y + by, x + bx) && m >= g.magnitude(y + ay, x + ax);
      if (!ok) ++bad;
    }
  }
  return bad;
}

long long hysteresis_violations(const CannyResult& r) {
  Mask reach = Mask::Zero(r.edges.rows(), r.edges.cols());
  std::deque<std::pair<Eigen::Index, Eigen::Index>> queue;
  for (Eigen::Index y = 0; y < r.strong.rows(); ++y) {
    for (Eigen::Index x = 0; x < r.strong.cols(); ++x) {
      if (r.strong(y, x) && r.candidates(y, x)) {
        reach(y, x) = 1;
        queue.emplace_back(y, x);
      }
    }
  }
  while (!queue.empty()) {
    const auto [y, x] = queue.front();
    queue.pop_front();
    for (Eigen::Index ny = std::max<Eigen::Index>(y - 1, 0); ny <= std::min(y + 1, reach.rows() - 1); ++ny) {
      for (Eigen::Index nx = std::max<Eigen::Index>(x - 1, 0); nx <= std::min(x + 1, reach.cols() - 1); ++nx) {
        if (r.candidates(ny, nx) && !reach(ny, nx)) {
          reach(ny, nx) = 1;
          queue.emplace_back(ny, nx);
        }
      }
    }
  }
  return (reach != r.edges).count();
}

PlaneXd random_phantom_slice(std::mt19937_64& rng, int width, int height) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double cx = width * (0.35 + 0.3 * unit(rng)), cy = height * (0.35 + 0.3 * unit(rng));
  const double rx = width * (0.15 + 0.15 * unit(rng)), ry = height * (0.15 + 0.15 * unit(rng));
  const double fg = 50 + 150 * unit(rng), sigma = 1 + 8 * unit(rng);
  PlaneXd p(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d = std::pow((x - cx) / rx, 2) + std::pow((y - cy) / ry, 2);
      const double inner = std::pow((x - cx) / (0.4 * rx), 2) + std::pow((y - cy) / (0.4 * ry), 2);
      p(y, x) = (d <= 1 ? fg : 0.0) + (inner <= 1 ? 0.5 * fg : 0.0) + sigma * noise(rng);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

CommitteeFixture build_committee_fixture(const std::vector<PatternRow>& rows, std::uint64_t seed) {
  static const std::array<const char*, 3> kModels{"resnet", "cnn", "efficientnet"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);

  std::vector<const PatternRow*> subjects;
  for (const auto& row : rows) {
    for (int i = 0; i < row.count; ++i) subjects.push_back(&row);
  }
  std::shuffle(subjects.begin(), subjects.end(), rng);

  // Committee errors alternate demented / non-demented; correct subjects
  // take the remaining demented slots first, 16 of 34 overall.
  const int demented_total = static_cast<int>(subjects.size() * 16 / 34);
  std::vector<Diagnosis> truth_of(subjects.size(), Diagnosis::non_demented);
  int demented = 0, wrong = 0;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const auto& row = *subjects[s];
    if (!row.correct[row.ranking[0]] && wrong++ % 2 == 0) {
      truth_of[s] = Diagnosis::demented;
      ++demented;
    }
  }
  for (std::size_t s = 0; s < subjects.size() && demented < demented_total; ++s) {
    const auto& row = *subjects[s];
    if (row.correct[row.ranking[0]]) {
      truth_of[s] = Diagnosis::demented;
      ++demented;
    }
  }

  CommitteeFixture fx;
  fx.registry.assign(kModels.begin(), kModels.end());
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const auto& row = *subjects[s];
    const std::string id = fmt::format("subj_{:03}", s + 1);
    const Diagnosis truth = truth_of[s];
    fx.truth[id] = truth;

    // confidence bands by rank: 0.90-0.98, 0.78-0.88, 0.55-0.75
    for (int rank = 0; rank < 3; ++rank) {
      const int model = row.ranking[rank];
      const double conf = rank == 0 ? 0.90 + 0.08 * jitter(rng) : rank == 1 ? 0.78 + 0.10 * jitter(rng) : 0.55 + 0.20 * jitter(rng);
      const Diagnosis predicted =
          row.correct[model] ? truth : (truth == Diagnosis::demented ? Diagnosis::non_demented : Diagnosis::demented);
      PredictionRecord r;
      r.subject_id = id;
      r.model_id = kModels[model];
      const double p_dem = predicted == Diagnosis::demented ? conf : 1.0 - conf;
      if (model == 1) r.logits = ClassScores{0.0, std::log(p_dem / (1.0 - p_dem))};
      else r.confidences = ClassScores{1.0 - p_dem, p_dem};
      fx.records.push_back(r);
    }
  }
  return fx;
}

namespace {

// registry indices
constexpr int R = 0, C = 1, E = 2;

}  // namespace

CommitteeFixture committee_fixture_exact() {
  return build_committee_fixture({{{false, true, true}, {C, R, E}, 1},
                                  {{false, true, true}, {E, R, C}, 6},
                                  {{true, false, true}, {E, R, C}, 5},
                                  {{true, true, false}, {R, E, C}, 1},
                                  {{true, true, false}, {C, E, R}, 1},
                                  {{true, true, false}, {E, R, C}, 2},
                                  {{true, true, true}, {R, C, E}, 2},
                                  {{true, true, true}, {C, R, E}, 4},
                                  {{true, true, true}, {E, R, C}, 12}},
                                 34);
}

CommitteeFixture committee_fixture_ordered() {
  return build_committee_fixture({{{false, true, true}, {E, R, C}, 4},
                                  {{false, true, true}, {E, C, R}, 3},
                                  {{true, false, true}, {E, R, C}, 5},
                                  {{true, true, false}, {C, E, R}, 2},
                                  {{true, true, false}, {E, R, C}, 2},
                                  {{true, true, true}, {R, C, E}, 3},
                                  {{true, true, true}, {C, R, E}, 4},
                                  {{true, true, true}, {E, R, C}, 11}},
                                 35);
}

// ---------------------------------------------------------------------------

namespace {

double draw_cdr(std::mt19937_64& rng, bool demented) {
  if (!demented) return 0.0;
  static constexpr std::array<double, 3> kLevels{0.5, 1.0, 2.0};
  std::discrete_distribution<int> pick{70, 25, 5};
  return kLevels[pick(rng)];
}

}  // namespace

std::vector<SubjectRecord> cohort_fixture_oasis1() {
  std::mt19937_64 rng(416);
  std::vector<int> order(416);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  // order[0..197] are the 60+ subjects; the first 100 of them are demented.
  std::vector<SubjectRecord> rows;
  for (int pos = 0; pos < 416; ++pos) {
    const int n = order[pos];
    const bool senior = pos < 198;
    double age = senior ? std::uniform_int_distribution<int>(60, 96)(rng) : std::uniform_int_distribution<int>(18, 59)(rng);
    if (pos == 0) age = 60;    // boundary kept
    if (pos == 198) age = 59;  // boundary dropped
    std::optional<double> cdr;
    if (senior) cdr = draw_cdr(rng, pos < 100);
    else if (pos % 3 == 0) cdr = 0.0;
    const std::string id = fmt::format("OAS1_{:04}", n);
    const int visits = pos % 21 == 5 ? 2 : 1;  // 20 reliability rescans
    for (int v = 1; v <= visits; ++v) {
      for (int s = 1; s <= 4; ++s)
        rows.push_back({id, fmt::format("MR{}", v), fmt::format("mpr-{}", s), age, cdr, CohortSource::oasis1});
    }
  }
  return rows;
}

std::vector<SubjectRecord> cohort_fixture_oasis2() {
  std::mt19937_64 rng(150);
  std::vector<SubjectRecord> rows;
  for (int n = 1; n <= 150; ++n) {
    const std::string id = fmt::format("OAS2_{:04}", n);
    const bool no_mpr1 = n % 37 == 0;  // subjects 37, 74, 111, 148
    const int visits = std::uniform_int_distribution<int>(2, 5)(rng);
    // 64 demented among the 146 kept: the first 64 retained subjects.
    const int kept_index = n - n / 37;
    const bool demented = !no_mpr1 && kept_index <= 64;
    double age = std::uniform_int_distribution<int>(60, 90)(rng);
    for (int v = 1; v <= visits; ++v) {
      // Later visits may convert to dementia; only the first visit counts.
      const double cdr = v == 1 ? draw_cdr(rng, demented) : draw_cdr(rng, demented || v >= 3);
      const int sessions = std::uniform_int_distribution<int>(2, 4)(rng);
      for (int s = 1; s <= sessions; ++s) {
        if (v == 1 && no_mpr1 && s == 1) continue;
        rows.push_back({id, fmt::format("MR{}", v), fmt::format("mpr-{}", s), age, cdr, CohortSource::oasis2});
      }
      age += std::uniform_int_distribution<int>(1, 3)(rng);
    }
  }
  // Visit MR10 sorts after MR2 when compared by number.
  rows.push_back({"OAS2_0001", "MR10", "mpr-1", 99, 1.0, CohortSource::oasis2});
  return rows;
}

// ---------------------------------------------------------------------------

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = std::filesystem::temp_directory_path() / fmt::format("slicescout-{}-{:08x}", tag, rd());
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace testkit
