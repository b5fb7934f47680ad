#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "slicescout/edges.hpp"
#include "slicescout/roi.hpp"
#include "slicescout/volume.hpp"

namespace slicescout {

inline constexpr int kDefaultWindow = 140;

/// A run of `length` slices starting at `start`. For top-k selections the
/// retained slices are listed in `indices` and need not be contiguous;
/// `start` is then the lowest retained index.
struct WindowSelection {
  int start = 0;
  int length = 0;
  double total_score = 0.0;
  ProfileKind method = ProfileKind::edge_sum;
  bool contiguous = true;
  std::vector<int> indices;

  int end() const noexcept { return start + length; }  // one past the last slice
};

/// Contiguous window of length `width` with the largest score sum; ties go
/// to the smallest start. One sliding pass; edge-sum profiles (integer
/// counts) accumulate in exact 64-bit integers.
WindowSelection best_window(const SliceProfile& profile, int width);

/// The `count` highest-scoring slices regardless of adjacency (ties prefer
/// lower indices), returned in ascending index order.
WindowSelection top_k_slices(const SliceProfile& profile, int count);

/// Window length covering `target_mm` at the volume's slice spacing.
int window_from_spacing(const Volume3D& vol, double target_mm = 175.0);

struct SelectParams {
  int window = kDefaultWindow;
  ProfileKind method = ProfileKind::edge_sum;
  CannyParams canny;
  /// Pick the top-k slices instead of a contiguous window (ablation only).
  bool top_k = false;
  /// ROI = union of per-slice boxes instead of the largest one.
  bool union_roi = false;
};

struct SelectedStack {
  std::string subject_id;
  WindowSelection window;
  std::vector<Slice2D> slices;
  BoundingBox roi;
};

/// Per-slice Otsu boxes -> patient ROI.
BoundingBox volume_roi(const Volume3D& vol, bool use_union = false);

/// Score profile for `method` (edge sums inside `roi`, or entropy).
SliceProfile score_profile(const Volume3D& vol, const BoundingBox& roi, ProfileKind method,
                           const CannyParams& canny);

/// Otsu ROI -> score profile -> best window -> copies of the retained slices.
SelectedStack select_slices(const Volume3D& vol, const SelectParams& params = {});

/// Materialises the slices named by an existing selection.
SelectedStack materialize(const Volume3D& vol, const WindowSelection& window, const BoundingBox& roi);

struct ComparisonReport {
  std::string subject_id;
  WindowSelection edge_window;
  WindowSelection entropy_window;
  int overlap_count = 0;
  double jaccard = 0.0;
};

/// Overlap statistics between two selections' index sets.
ComparisonReport compare_windows(const WindowSelection& edge, const WindowSelection& entropy);

/// Runs both scoring methods on the same ROI and compares the windows.
ComparisonReport compare_methods(const Volume3D& vol, const SelectParams& params = {});

/// One best window per requested width, all from a single profile.
std::vector<WindowSelection> window_sensitivity(const SliceProfile& profile, std::span<const int> widths);
std::vector<WindowSelection> window_sensitivity(const Volume3D& vol, std::span<const int> widths,
                                                const SelectParams& params = {});

/// CSV header `subject_id,edge_start,entropy_start,window,overlap_count,jaccard`.
void write_comparison_header(std::ostream& out);
void write_comparison_row(std::ostream& out, const ComparisonReport& report);

}  // namespace slicescout
