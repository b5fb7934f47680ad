#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace slicescout {

/// Row-major 2D image plane. Rows index y (height), columns index x (width),
/// so `plane(y, x)` addresses the pixel at column x of row y.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneXd = Plane<double>;

/// One byte per pixel, nonzero = set.
using Mask = Plane<std::uint8_t>;

}  // namespace slicescout
