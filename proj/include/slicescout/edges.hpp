#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "slicescout/error.hpp"
#include "slicescout/plane.hpp"
#include "slicescout/roi.hpp"
#include "slicescout/volume.hpp"

namespace slicescout {

// ---------------------------------------------------------------------------
// Gaussian smoothing

/// Samples G(x, y) = exp(-(x^2 + y^2) / (2 sigma^2)) / (2 pi sigma^2) on the
/// (2r+1)^2 grid centred at the origin and rescales the samples to sum to 1.
Eigen::MatrixXd gaussian_kernel(double sigma, int radius);

/// The 1D factor of gaussian_kernel: the 2D kernel is its outer product.
Eigen::VectorXd gaussian_kernel_1d(double sigma, int radius);

/// `plane` extended by `pad` pixels on each side, replicating edge values.
template <typename Derived>
Plane<typename Derived::Scalar> replicate_pad(const Eigen::ArrayBase<Derived>& plane, int pad) {
  const Eigen::Index rows = plane.rows(), cols = plane.cols();
  std::vector<Eigen::Index> ri(rows + 2 * pad), ci(cols + 2 * pad);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ri.size()); ++i)
    ri[i] = std::clamp<Eigen::Index>(i - pad, 0, rows - 1);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ci.size()); ++i)
    ci[i] = std::clamp<Eigen::Index>(i - pad, 0, cols - 1);
  return plane.derived()(ri, ci);
}

/// Convolution with gaussian_kernel(sigma, radius), borders replicated.
/// Applied as two 1D passes, which is the same linear operator.
template <typename Derived>
Plane<typename Derived::Scalar> gaussian_smooth(const Eigen::ArrayBase<Derived>& plane,
                                                double sigma, int radius) {
  using Scalar = typename Derived::Scalar;
  if (!(sigma > 0.0)) throw Error(ErrorKind::parameter, "gaussian sigma must be > 0");
  if (radius < 1) throw Error(ErrorKind::parameter, "gaussian radius must be >= 1");
  const Eigen::VectorXd k = gaussian_kernel_1d(sigma, radius);
  const Eigen::Index rows = plane.rows(), cols = plane.cols();
  const Plane<Scalar> padded = replicate_pad(plane, radius);

  Plane<Scalar> horizontal = Plane<Scalar>::Zero(rows + 2 * radius, cols);
  for (int i = 0; i <= 2 * radius; ++i)
    horizontal += static_cast<Scalar>(k[i]) * padded.block(0, i, rows + 2 * radius, cols);
  Plane<Scalar> out = Plane<Scalar>::Zero(rows, cols);
  for (int j = 0; j <= 2 * radius; ++j)
    out += static_cast<Scalar>(k[j]) * horizontal.block(j, 0, rows, cols);
  return out;
}

// ---------------------------------------------------------------------------
// Sobel gradients

template <typename Scalar>
struct GradientField {
  Plane<Scalar> gx;
  Plane<Scalar> gy;
  Plane<Scalar> magnitude;
  /// atan2(gy, gx) in radians; y grows downwards (row index).
  Plane<Scalar> direction;
};

/// 3x3 Sobel responses, applied as correlation so that intensity rising
/// towards +x (+y) gives positive gx (gy):
///
///   gx: [-1 0 +1; -2 0 +2; -1 0 +1]    gy: [-1 -2 -1; 0 0 0; +1 +2 +1]
///
/// The one-pixel frame of the plane has no full neighbourhood and is zero.
template <typename Derived>
GradientField<typename Derived::Scalar> sobel_gradients(const Eigen::ArrayBase<Derived>& plane) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index h = plane.rows(), w = plane.cols();
  if (h < 3 || w < 3) throw Error(ErrorKind::size, "sobel needs a plane of at least 3x3");
  const Plane<Scalar>& a = plane.derived();
  const Eigen::Index ih = h - 2, iw = w - 2;

  GradientField<Scalar> g;
  g.gx = Plane<Scalar>::Zero(h, w);
  g.gy = Plane<Scalar>::Zero(h, w);
  g.gx.block(1, 1, ih, iw) = (a.block(0, 2, ih, iw) - a.block(0, 0, ih, iw)) +
                             Scalar(2) * (a.block(1, 2, ih, iw) - a.block(1, 0, ih, iw)) +
                             (a.block(2, 2, ih, iw) - a.block(2, 0, ih, iw));
  g.gy.block(1, 1, ih, iw) = (a.block(2, 0, ih, iw) + Scalar(2) * a.block(2, 1, ih, iw) + a.block(2, 2, ih, iw)) -
                             (a.block(0, 0, ih, iw) + Scalar(2) * a.block(0, 1, ih, iw) + a.block(0, 2, ih, iw));
  g.magnitude = (g.gx.square() + g.gy.square()).sqrt();
  g.direction = g.gy.binaryExpr(g.gx, [](Scalar y, Scalar x) { return std::atan2(y, x); });
  return g;
}

// ---------------------------------------------------------------------------
// Canny

enum class ThresholdBase {
  /// Fractions of the largest gradient magnitude inside the ROI.
  gradient_magnitude,
  /// Fractions of the largest raw intensity inside the ROI.
  image_intensity,
};

struct CannyParams {
  double sigma = 1.4;
  int radius = 2;
  double low_frac = 0.10;
  double high_frac = 0.20;
  ThresholdBase base = ThresholdBase::gradient_magnitude;

  void validate() const;
};

/// Gradient direction sector used by non-maximum suppression.
enum class Sector { deg0, deg45, deg90, deg135 };

Sector quantize_direction(double radians) noexcept;

/// Intermediate products of one Canny run, exposed for inspection.
struct CannyResult {
  Mask edges;       // final output
  Mask candidates;  // survived NMS and magnitude >= low
  Mask strong;      // candidates with magnitude >= high
  GradientField<double> gradient;
  double low = 0.0;
  double high = 0.0;
};

/// Smooth -> Sobel -> non-maximum suppression -> double threshold ->
/// 8-connected hysteresis, evaluated only on the interior of `roi` (its
/// border rows and columns never hold edges). NMS keeps a pixel when its
/// magnitude is strictly above the neighbour behind it along the quantized
/// gradient direction and at least the neighbour ahead, so a two-pixel
/// plateau yields a single edge pixel.
CannyResult canny(const PlaneXd& pixels, const BoundingBox& roi, const CannyParams& params = {});

Mask canny_edges(const PlaneXd& pixels, const BoundingBox& roi, const CannyParams& params = {});
Mask canny_edges(const Slice2D& slice, const BoundingBox& roi, const CannyParams& params = {});

// ---------------------------------------------------------------------------
// Slice profiles

enum class ProfileKind { edge_sum, entropy };

std::string_view to_string(ProfileKind kind) noexcept;
ProfileKind parse_profile_kind(std::string_view text);

struct SliceProfile {
  std::string subject_id;
  Eigen::VectorXd scores;
  ProfileKind kind = ProfileKind::edge_sum;

  int size() const noexcept { return static_cast<int>(scores.size()); }
};

/// scores[k] = number of Canny edge pixels of slice k inside `roi`.
SliceProfile edge_sum_profile(const Volume3D& vol, const BoundingBox& roi,
                              const CannyParams& params = {});

/// Shannon entropy (bits) of each slice's 256-bin histogram.
double slice_entropy(const PlaneXd& pixels);
SliceProfile entropy_profile(const Volume3D& vol);

/// CSV with header `subject_id,slice_index,score,kind`.
void write_profile_csv(std::ostream& out, const SliceProfile& profile);
/// Reads the rows of one subject; rows must be in slice order starting at 0.
SliceProfile read_profile_csv(std::istream& in);

}  // namespace slicescout
