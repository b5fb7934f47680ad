#pragma once

#include <algorithm>
#include <string_view>

#include "slicescout/error.hpp"
#include "slicescout/plane.hpp"
#include "slicescout/window.hpp"

namespace slicescout {

enum class ResizeMode { area_average, nearest };

std::string_view to_string(ResizeMode mode) noexcept;
ResizeMode parse_resize_mode(std::string_view text);

struct ResizeSpec {
  int factor = 2;
  ResizeMode mode = ResizeMode::area_average;
};

/// Shrinks a plane by an integer factor. Output is ceil(h/f) x ceil(w/f);
/// with area_average each output pixel is the mean of its f x f source
/// block, and blocks cut short by the plane edge average only the pixels
/// they hold. nearest keeps the top-left pixel of each block.
template <typename Derived>
Plane<typename Derived::Scalar> downsample(const Eigen::ArrayBase<Derived>& plane, const ResizeSpec& spec) {
  using Scalar = typename Derived::Scalar;
  const int f = spec.factor;
  if (f <= 0) throw Error(ErrorKind::parameter, "resize factor must be positive");
  const Eigen::Index h = plane.rows(), w = plane.cols();
  if (h < f || w < f) throw Error(ErrorKind::size, "plane is smaller than the resize factor");
  const Eigen::Index oh = (h + f - 1) / f, ow = (w + f - 1) / f;

  Plane<Scalar> out(oh, ow);
  for (Eigen::Index y = 0; y < oh; ++y) {
    for (Eigen::Index x = 0; x < ow; ++x) {
      if (spec.mode == ResizeMode::nearest) {
        out(y, x) = plane(y * f, x * f);
        continue;
      }
      const Eigen::Index bh = std::min<Eigen::Index>(f, h - y * f);
      const Eigen::Index bw = std::min<Eigen::Index>(f, w - x * f);
      out(y, x) = plane.derived().block(y * f, x * f, bh, bw).sum() / static_cast<Scalar>(bh * bw);
    }
  }
  return out;
}

/// downsample applied to every slice of the stack; selection metadata is kept.
SelectedStack downsample(const SelectedStack& stack, const ResizeSpec& spec);

}  // namespace slicescout
