#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slicescout/plane.hpp"
#include "slicescout/volume.hpp"

namespace slicescout {

inline constexpr int kHistogramBins = 256;

/// 256-bin intensity histogram of one slice. Bin b covers the intensity
/// range [min + b*step, min + (b+1)*step) with step = (max - min) / 256;
/// the maximum intensity falls in the last bin.
struct Histogram256 {
  std::array<std::uint64_t, kHistogramBins> counts{};
  std::uint64_t total = 0;
  double min_val = 0.0;
  double max_val = 0.0;
};

/// Per-pixel bin indices under the min-max mapping described above. A
/// constant plane maps entirely to bin 0.
template <typename Derived>
Plane<std::uint8_t> bin_indices(const Eigen::ArrayBase<Derived>& pixels) {
  using Scalar = typename Derived::Scalar;
  const double lo = static_cast<double>(pixels.minCoeff());
  const double hi = static_cast<double>(pixels.maxCoeff());
  Plane<std::uint8_t> bins(pixels.rows(), pixels.cols());
  if (!(hi > lo)) {
    bins.setZero();
    return bins;
  }
  const double scale = kHistogramBins / (hi - lo);
  bins = pixels.unaryExpr([lo, scale](Scalar v) {
    const double b = std::floor((static_cast<double>(v) - lo) * scale);
    return static_cast<std::uint8_t>(b >= kHistogramBins - 1 ? kHistogramBins - 1 : (b < 0 ? 0 : b));
  });
  return bins;
}

Histogram256 histogram(const PlaneXd& pixels);

/// Otsu split: class 0 = bins [0, t], class 1 = bins (t, 255].
/// `threshold` is empty ("no split") when fewer than two bins are occupied.
/// `between_class_variance` is sigma_B^2 at the chosen split, measured in
/// squared bin units (0 for no split).
struct OtsuResult {
  std::optional<int> threshold;
  double between_class_variance = 0.0;

  bool is_split() const noexcept { return threshold.has_value(); }
};

/// Maximises sigma_B^2(t) = w0 * w1 * (mu0 - mu1)^2 over every t that leaves
/// both classes nonempty; ties go to the smallest t. Candidates are compared
/// exactly in integer arithmetic, so histograms up to 2^27 samples are
/// accepted.
OtsuResult otsu_threshold(const Histogram256& hist);

/// sigma_B^2 for a single split (no-split or empty-class splits give 0).
double between_class_variance(const Histogram256& hist, int t);

/// Foreground iff the pixel's bin index exceeds the threshold.
Mask binarize(const PlaneXd& pixels, const OtsuResult& otsu);
Mask binarize(const Slice2D& slice, const OtsuResult& otsu);

/// Inclusive pixel rectangle. x indexes columns, y indexes rows.
struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;

  int width() const noexcept { return max_x - min_x + 1; }
  int height() const noexcept { return max_y - min_y + 1; }
  long long area() const noexcept { return static_cast<long long>(width()) * height(); }
  bool contains(int x, int y) const noexcept {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool fits(int plane_width, int plane_height) const noexcept {
    return min_x >= 0 && min_y >= 0 && min_x <= max_x && min_y <= max_y &&
           max_x < plane_width && max_y < plane_height;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Minimal rectangle around every set pixel; empty when the mask is empty.
std::optional<BoundingBox> slice_bounding_box(const Mask& mask);

/// Largest-area box. Ties prefer smaller min_y, then smaller min_x, then the
/// earlier position in `boxes` (slice order).
BoundingBox patient_roi(std::span<const BoundingBox> boxes);

/// Same rule over per-slice results, skipping slices without foreground.
/// Throws when no slice has any foreground.
BoundingBox patient_roi(std::span<const std::optional<BoundingBox>> per_slice);

/// Smallest box enclosing every present per-slice box.
BoundingBox union_roi(std::span<const std::optional<BoundingBox>> per_slice);

/// Otsu + binarize + bounding box for one slice. Constant slices give none.
std::optional<BoundingBox> segment_slice(const PlaneXd& pixels);

/// segment_slice for every slice of the volume, in slice order.
std::vector<std::optional<BoundingBox>> slice_boxes(const Volume3D& vol);

}  // namespace slicescout
