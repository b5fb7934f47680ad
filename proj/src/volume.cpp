#include "slicescout/volume.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "slicescout/error.hpp"

namespace slicescout {

namespace {

using Stride2 = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;

// Axes spanning the slice plane: {width axis, height axis}.
std::array<int, 2> plane_axes(int slice_axis) {
  switch (slice_axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

void check_axis(int axis) {
  if (axis < 0 || axis > 2)
    throw Error(ErrorKind::parameter, fmt::format("slice axis must be 0, 1 or 2 (got {})", axis));
}

// Strided view over one plane of the x-fastest buffer.
template <typename Pointer>
auto plane_map(Pointer data, const Dims3& dims, int slice_axis, int index) {
  using Scalar = std::remove_pointer_t<Pointer>;
  using MapType = Eigen::Map<std::conditional_t<std::is_const_v<Scalar>, const PlaneXd, PlaneXd>,
                             Eigen::Unaligned, Stride2>;
  const Eigen::Index nx = dims[0], ny = dims[1], nz = dims[2];
  switch (slice_axis) {
    case 0:  // rows z, cols y
      return MapType(data + index, nz, ny, Stride2(nx * ny, nx));
    case 1:  // rows z, cols x
      return MapType(data + index * nx, nz, nx, Stride2(nx * ny, 1));
    default:  // rows y, cols x
      return MapType(data + index * nx * ny, ny, nx, Stride2(nx, 1));
  }
}

}  // namespace

Volume3D::Volume3D(Dims3 dims, Spacing3 spacing, Eigen::ArrayXd intensities,
                   std::string subject_id, int slice_axis)
    : dims_(dims),
      spacing_(spacing),
      slice_axis_(slice_axis),
      intensities_(std::move(intensities)),
      subject_id_(std::move(subject_id)) {
  check_axis(slice_axis);
  Eigen::Index count = 1;
  for (int d : dims_) {
    if (d <= 0) throw Error(ErrorKind::parameter, "volume dimensions must be positive");
    count *= d;
  }
  for (double s : spacing_) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(ErrorKind::parameter, "voxel spacing must be positive and finite");
  }
  if (count != intensities_.size())
    throw Error(ErrorKind::size,
                fmt::format("volume holds {} values but dims {}x{}x{} need {}",
                            intensities_.size(), dims_[0], dims_[1], dims_[2], count));
  if (!intensities_.isFinite().all())
    throw Error(ErrorKind::corruption, "volume contains non-finite intensities");
}

int Volume3D::plane_width() const noexcept { return dims_[plane_axes(slice_axis_)[0]]; }
int Volume3D::plane_height() const noexcept { return dims_[plane_axes(slice_axis_)[1]]; }

Volume3D Volume3D::with_slice_axis(int axis) const {
  return Volume3D(dims_, spacing_, intensities_, subject_id_, axis);
}

Volume3D Volume3D::with_subject_id(std::string id) const {
  return Volume3D(dims_, spacing_, intensities_, std::move(id), slice_axis_);
}

Slice2D extract_slice(const Volume3D& vol, int index) {
  if (index < 0 || index >= vol.slice_count())
    throw Error(ErrorKind::parameter,
                fmt::format("slice {} out of range [0, {})", index, vol.slice_count()));
  return Slice2D{plane_map(vol.intensities().data(), vol.dims(), vol.slice_axis(), index), index};
}

std::vector<Slice2D> extract_slices(const Volume3D& vol) {
  std::vector<Slice2D> slices;
  slices.reserve(vol.slice_count());
  for (int k = 0; k < vol.slice_count(); ++k) slices.push_back(extract_slice(vol, k));
  return slices;
}

Volume3D stack_slices(const std::vector<Slice2D>& slices, int slice_axis, Spacing3 spacing,
                      std::string subject_id) {
  check_axis(slice_axis);
  if (slices.empty()) throw Error(ErrorKind::size, "cannot stack an empty slice list");
  const int w = slices.front().width();
  const int h = slices.front().height();
  const auto axes = plane_axes(slice_axis);
  Dims3 dims{};
  dims[axes[0]] = w;
  dims[axes[1]] = h;
  dims[slice_axis] = static_cast<int>(slices.size());

  Eigen::ArrayXd data(static_cast<Eigen::Index>(w) * h * static_cast<Eigen::Index>(slices.size()));
  for (std::size_t k = 0; k < slices.size(); ++k) {
    if (slices[k].width() != w || slices[k].height() != h)
      throw Error(ErrorKind::size, "slices to stack differ in size");
    plane_map(data.data(), dims, slice_axis, static_cast<int>(k)) = slices[k].pixels;
  }
  return Volume3D(dims, spacing, std::move(data), std::move(subject_id), slice_axis);
}

Volume3D make_phantom(const PhantomSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.dims[a] <= 0) throw Error(ErrorKind::parameter, "phantom dims must be positive");
    if (spec.radii[a] < 0.0) throw Error(ErrorKind::parameter, "phantom radii must be >= 0");
    if (spec.center[a] - spec.radii[a] < 0.0 || spec.center[a] + spec.radii[a] > spec.dims[a] - 1)
      throw Error(ErrorKind::parameter,
                  fmt::format("phantom ellipsoid exceeds the volume along axis {}", a));
  }
  if (spec.noise_sigma < 0.0) throw Error(ErrorKind::parameter, "noise sigma must be >= 0");

  const bool empty = spec.radii[0] == 0.0 || spec.radii[1] == 0.0 || spec.radii[2] == 0.0;
  const auto [nx, ny, nz] = spec.dims;
  Eigen::ArrayXd data(static_cast<Eigen::Index>(nx) * ny * nz);

  std::mt19937_64 rng(spec.seed);
  // Box-Muller on raw engine output; std::normal_distribution is not
  // specified bit-for-bit across standard libraries.
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  auto gaussian = [&] {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  Eigen::Index i = 0;
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x, ++i) {
        bool inside = false;
        if (!empty) {
          const double dx = (x - spec.center[0]) / spec.radii[0];
          const double dy = (y - spec.center[1]) / spec.radii[1];
          const double dz = (z - spec.center[2]) / spec.radii[2];
          inside = dx * dx + dy * dy + dz * dz <= 1.0;
        }
        if (inside) {
          data[i] = spec.foreground;
        } else {
          data[i] = spec.background;
          if (spec.noise_sigma > 0.0) data[i] += spec.noise_sigma * gaussian();
        }
      }
    }
  }
  return Volume3D(spec.dims, spec.spacing, std::move(data), spec.subject_id, spec.slice_axis);
}

}  // namespace slicescout
