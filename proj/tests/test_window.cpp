#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "slicescout/window.hpp"
#include "testkit.hpp"

using namespace slicescout;

namespace {

SliceProfile profile_of(std::vector<double> v) {
  SliceProfile p;
  p.subject_id = "p";
  p.scores = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return p;
}

}  // namespace

TEST_CASE("best window matches brute force") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + static_cast<int>(rng() % 300);
    const int w = 1 + static_cast<int>(rng() % n);
    SliceProfile p;
    p.scores.resize(n);
    const bool integral = i % 2 == 0;
    for (auto& s : p.scores) s = integral ? static_cast<double>(rng() % 4) : std::ldexp(static_cast<double>(rng() % 1000), -3);
    const auto got = best_window(p, w);
    CHECK(got.start == testkit::window_oracle(p.scores, w));
    CHECK(got.length == w);
    CHECK(got.contiguous);
    CHECK(got.indices.size() == static_cast<std::size_t>(w));
    CHECK(got.total_score == doctest::Approx(p.scores.segment(got.start, w).sum()));
  }
}

TEST_CASE("best window small cases") {
  CHECK(best_window(profile_of({0, 1, 5, 1, 0}), 3).start == 1);
  CHECK(best_window(profile_of({3, 3, 3, 3}), 2).start == 0);  // ties -> smallest start
  CHECK(best_window(profile_of({1, 0, 0, 1}), 1).start == 0);
  CHECK(best_window(profile_of({0, 0, 0}), 3).start == 0);
  CHECK(best_window(profile_of({2, 2}), 2).total_score == 4);
  CHECK_THROWS_AS(best_window(profile_of({1, 2}), 3), Error);
  CHECK_THROWS_AS(best_window(profile_of({1, 2}), 0), Error);

  // exact accumulation: large counts with a 1-slice difference
  std::vector<double> big(300, 1e15);
  big[299] = 1e15 + 1;
  CHECK(best_window(profile_of(big), 140).start == 160);
}

TEST_CASE("top-k keeps the highest slices in index order") {
  const auto sel = top_k_slices(profile_of({5, 1, 5, 9, 0, 5}), 3);
  CHECK_FALSE(sel.contiguous);
  CHECK(sel.indices == std::vector<int>{0, 2, 3});
  CHECK(sel.start == 0);
  CHECK(sel.total_score == 19);
}

TEST_CASE("window from spacing") {
  const Volume3D vol({4, 4, 256}, {1.0, 1.0, 1.25}, Eigen::ArrayXd::Zero(4096));
  CHECK(window_from_spacing(vol) == 140);
  CHECK(window_from_spacing(vol, 100) == 80);
  CHECK(window_from_spacing(vol.with_slice_axis(0), 5.0) == 5);
  CHECK_THROWS_AS(window_from_spacing(vol, 0), Error);
}

TEST_CASE("window sensitivity across widths") {
  const auto p = profile_of({0, 0, 1, 4, 9, 4, 1, 0, 0});
  const std::vector<int> widths{1, 3, 5, 9};
  const auto sel = window_sensitivity(p, widths);
  REQUIRE(sel.size() == 4);
  CHECK(sel[0].start == 4);
  CHECK(sel[1].start == 3);
  CHECK(sel[2].start == 2);
  CHECK(sel[3].start == 0);
}

TEST_CASE("select_slices on a phantom") {
  PhantomSpec spec;
  spec.dims = {40, 48, 60};
  spec.center = {19.5, 23.5, 30};
  spec.radii = {15, 18, 22};
  const auto vol = make_phantom(spec);
  SelectParams params;
  params.window = 30;
  const auto stack = select_slices(vol, params);
  CHECK(stack.slices.size() == 30);
  CHECK(stack.window.start == 15);
  for (int i = 0; i < 30; ++i) {
    CHECK(stack.slices[i].index == 15 + i);
    CHECK((stack.slices[i].pixels == extract_slice(vol, 15 + i).pixels).all());
  }
  CHECK(stack.roi == BoundingBox{5, 6, 34, 41});

  params.top_k = true;
  const auto topk = select_slices(vol, params);
  CHECK(topk.slices.size() == 30);
  CHECK_FALSE(topk.window.contiguous);

  params.window = 61;
  CHECK_THROWS_AS(select_slices(vol, params), Error);
}

TEST_CASE("compare windows") {
  WindowSelection a, b;
  a.indices = {0, 1, 2, 3};
  b.indices = {2, 3, 4, 5};
  const auto r = compare_windows(a, b);
  CHECK(r.overlap_count == 2);
  CHECK(r.jaccard == doctest::Approx(2.0 / 6.0));
  CHECK(compare_windows(WindowSelection{}, WindowSelection{}).jaccard == 1.0);
}

TEST_CASE("entropy follows an off-centre noise band while edge sums stay on the ellipsoid") {
  PhantomSpec spec;
  spec.dims = {64, 64, 100};
  spec.center = {40, 31.5, 50};
  spec.radii = {18, 20, 30};
  const auto base = make_phantom(spec);
  Eigen::ArrayXd data = base.intensities();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0, 6);
  for (int z = 60; z < 100; ++z)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 10; ++x) data[x + 64 * (y + 64 * z)] += std::abs(noise(rng));  // magnitude noise is nonnegative
  const Volume3D vol(spec.dims, spec.spacing, data, "band");
  SelectParams params;
  params.window = 40;
  const auto report = compare_methods(vol, params);
  CHECK(report.subject_id == "band");
  CHECK(report.edge_window.start >= 29);
  CHECK(report.edge_window.start <= 31);
  CHECK(report.entropy_window.start > report.edge_window.start + 5);
  CHECK(report.overlap_count == report.edge_window.end() - report.entropy_window.start);

  std::stringstream ss;
  write_comparison_header(ss);
  write_comparison_row(ss, report);
  CHECK(ss.str().rfind("subject_id,edge_start,entropy_start,window,overlap_count,jaccard\nband,", 0) == 0);
}
