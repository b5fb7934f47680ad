#include "slicescout/window.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace slicescout {

namespace {

void check_width(const SliceProfile& profile, int width) {
  if (width < 1) throw Error(ErrorKind::parameter, "window length must be >= 1");
  if (width > profile.size())
    throw Error(ErrorKind::size, fmt::format("window of {} slices exceeds the {} available", width,
                                             profile.size()));
}

bool integral_scores(const Eigen::VectorXd& scores) {
  return (scores.array() == scores.array().floor()).all() && (scores.array().abs() < 0x1p53).all();
}

// Sliding sum over any accumulator type; strict '>' keeps the earliest start.
template <typename Acc>
std::pair<int, Acc> slide(const Eigen::VectorXd& scores, int width) {
  auto value = [&](Eigen::Index i) { return static_cast<Acc>(scores[i]); };
  Acc sum{};
  for (int i = 0; i < width; ++i) sum += value(i);
  Acc best = sum;
  int best_start = 0;
  for (Eigen::Index start = 1; start + width <= scores.size(); ++start) {
    sum += value(start + width - 1) - value(start - 1);
    if (sum > best) {
      best = sum;
      best_start = static_cast<int>(start);
    }
  }
  return {best_start, best};
}

}  // namespace

WindowSelection best_window(const SliceProfile& profile, int width) {
  check_width(profile, width);
  WindowSelection w;
  w.length = width;
  w.method = profile.kind;
  if (integral_scores(profile.scores)) {
    const auto [start, total] = slide<long long>(profile.scores, width);
    w.start = start;
    w.total_score = static_cast<double>(total);
  } else {
    // Running sums drift; re-sum the winner directly for the reported total.
    w.start = slide<long double>(profile.scores, width).first;
    w.total_score = profile.scores.segment(w.start, width).sum();
  }
  w.indices.resize(width);
  std::iota(w.indices.begin(), w.indices.end(), w.start);
  return w;
}

WindowSelection top_k_slices(const SliceProfile& profile, int count) {
  check_width(profile, count);
  std::vector<int> order(profile.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return profile.scores[a] > profile.scores[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());

  WindowSelection w;
  w.start = order.front();
  w.length = count;
  w.method = profile.kind;
  w.contiguous = false;
  for (int i : order) w.total_score += profile.scores[i];
  w.indices = std::move(order);
  return w;
}

int window_from_spacing(const Volume3D& vol, double target_mm) {
  if (!(target_mm > 0.0)) throw Error(ErrorKind::parameter, "target extent must be > 0 mm");
  const int w = static_cast<int>(std::lround(target_mm / vol.spacing()[vol.slice_axis()]));
  return std::max(w, 1);
}

BoundingBox volume_roi(const Volume3D& vol, bool use_union) {
  const auto boxes = slice_boxes(vol);
  return use_union ? union_roi(boxes) : patient_roi(boxes);
}

SliceProfile score_profile(const Volume3D& vol, const BoundingBox& roi, ProfileKind method,
                           const CannyParams& canny) {
  return method == ProfileKind::edge_sum ? edge_sum_profile(vol, roi, canny) : entropy_profile(vol);
}

SelectedStack materialize(const Volume3D& vol, const WindowSelection& window, const BoundingBox& roi) {
  SelectedStack stack{vol.subject_id(), window, {}, roi};
  stack.slices.reserve(window.indices.size());
  for (int k : window.indices) stack.slices.push_back(extract_slice(vol, k));
  return stack;
}

SelectedStack select_slices(const Volume3D& vol, const SelectParams& params) {
  if (params.window < 1) throw Error(ErrorKind::parameter, "window length must be >= 1");
  if (params.window > vol.slice_count())
    throw Error(ErrorKind::size, fmt::format("volume has {} slices, fewer than the window of {}",
                                             vol.slice_count(), params.window));
  params.canny.validate();
  const BoundingBox roi = volume_roi(vol, params.union_roi);
  const SliceProfile profile = score_profile(vol, roi, params.method, params.canny);
  const WindowSelection window =
      params.top_k ? top_k_slices(profile, params.window) : best_window(profile, params.window);
  return materialize(vol, window, roi);
}

ComparisonReport compare_windows(const WindowSelection& edge, const WindowSelection& entropy) {
  ComparisonReport r;
  r.edge_window = edge;
  r.entropy_window = entropy;
  std::vector<int> a = edge.indices, b = entropy.indices, common;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  r.overlap_count = static_cast<int>(common.size());
  const auto unioned = a.size() + b.size() - common.size();
  r.jaccard = unioned == 0 ? 1.0 : static_cast<double>(common.size()) / static_cast<double>(unioned);
  return r;
}

ComparisonReport compare_methods(const Volume3D& vol, const SelectParams& params) {
  if (params.window > vol.slice_count())
    throw Error(ErrorKind::size, fmt::format("volume has {} slices, fewer than the window of {}",
                                             vol.slice_count(), params.window));
  params.canny.validate();
  const BoundingBox roi = volume_roi(vol, params.union_roi);
  auto pick = [&](const SliceProfile& p) {
    return params.top_k ? top_k_slices(p, params.window) : best_window(p, params.window);
  };
  auto report = compare_windows(pick(edge_sum_profile(vol, roi, params.canny)), pick(entropy_profile(vol)));
  report.subject_id = vol.subject_id();
  return report;
}

std::vector<WindowSelection> window_sensitivity(const SliceProfile& profile, std::span<const int> widths) {
  std::vector<WindowSelection> out;
  out.reserve(widths.size());
  for (int w : widths) out.push_back(best_window(profile, w));
  return out;
}

std::vector<WindowSelection> window_sensitivity(const Volume3D& vol, std::span<const int> widths,
                                                const SelectParams& params) {
  for (int w : widths) {
    if (w > vol.slice_count())
      throw Error(ErrorKind::size, fmt::format("window of {} slices exceeds the {} available", w,
                                               vol.slice_count()));
  }
  const BoundingBox roi = volume_roi(vol, params.union_roi);
  return window_sensitivity(score_profile(vol, roi, params.method, params.canny), widths);
}

void write_comparison_header(std::ostream& out) {
  out << "subject_id,edge_start,entropy_start,window,overlap_count,jaccard\n";
}

void write_comparison_row(std::ostream& out, const ComparisonReport& r) {
  fmt::print(out, "{},{},{},{},{},{}\n", r.subject_id, r.edge_window.start, r.entropy_window.start,
             r.edge_window.length, r.overlap_count, r.jaccard);
}

}  // namespace slicescout
