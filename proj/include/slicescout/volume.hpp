#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slicescout/plane.hpp"

namespace slicescout {

using Dims3 = std::array<int, 3>;
using Spacing3 = std::array<double, 3>;

/// A 3D scalar grid in canonical x-fastest order: the voxel (x, y, z) lives
/// at `x + nx * (y + ny * z)`, which is also the NIfTI on-disk order.
///
/// Slices are taken orthogonal to `slice_axis()`. The two remaining axes form
/// the slice plane in ascending order; the lower one becomes the plane width
/// (columns) and the higher one the plane height (rows). With the default
/// slice axis 2 a slice is the (x, y) plane, `nx` wide and `ny` high.
///
/// Instances are immutable once constructed; invariants (positive dims and
/// spacing, matching element count, finite intensities) are checked up front.
class Volume3D {
 public:
  Volume3D(Dims3 dims, Spacing3 spacing, Eigen::ArrayXd intensities,
           std::string subject_id = {}, int slice_axis = 2);

  const Dims3& dims() const noexcept { return dims_; }
  const Spacing3& spacing() const noexcept { return spacing_; }
  int slice_axis() const noexcept { return slice_axis_; }
  const Eigen::ArrayXd& intensities() const noexcept { return intensities_; }
  const std::string& subject_id() const noexcept { return subject_id_; }

  int slice_count() const noexcept { return dims_[slice_axis_]; }
  /// Width and height of one slice plane for the current slice axis.
  int plane_width() const noexcept;
  int plane_height() const noexcept;

  double at(int x, int y, int z) const {
    return intensities_[x + static_cast<Eigen::Index>(dims_[0]) *
                                (y + static_cast<Eigen::Index>(dims_[1]) * z)];
  }

  Volume3D with_slice_axis(int axis) const;
  Volume3D with_subject_id(std::string id) const;

 private:
  Dims3 dims_;
  Spacing3 spacing_;
  int slice_axis_;
  Eigen::ArrayXd intensities_;
  std::string subject_id_;
};

struct Slice2D {
  PlaneXd pixels;
  int index = 0;

  int width() const noexcept { return static_cast<int>(pixels.cols()); }
  int height() const noexcept { return static_cast<int>(pixels.rows()); }
};

/// Copy of plane `index` orthogonal to the volume's slice axis.
Slice2D extract_slice(const Volume3D& vol, int index);

/// All planes in ascending index order.
std::vector<Slice2D> extract_slices(const Volume3D& vol);

/// Inverse of extract_slices. `slices` must be in order and equally sized.
Volume3D stack_slices(const std::vector<Slice2D>& slices, int slice_axis,
                      Spacing3 spacing, std::string subject_id = {});

// ---------------------------------------------------------------------------
// NIfTI-1

/// NIfTI-1 datatype codes honoured by the reader and writer.
enum class NiftiType : std::int16_t {
  uint8 = 2,
  int16 = 4,
  int32 = 8,
  float32 = 16,
  float64 = 64,
};

/// Reads a single-file (.nii / .nii.gz, magic "n+1") or paired (.hdr/.img,
/// magic "ni1") NIfTI-1 volume. Gzip input is detected by content, not name.
/// Byte order follows `sizeof_hdr`; `scl_slope`/`scl_inter` are applied when
/// the slope is nonzero. Only 3D scalar data is accepted.
Volume3D read_nifti(const std::filesystem::path& path, int slice_axis = 2);

/// Writes a single-file little-endian NIfTI-1 (.nii, or gzip when the path
/// ends in ".gz"). Intensities are cast to `type`; the caller chooses a type
/// that represents them. `slope`/`inter` are stored verbatim in the header.
void write_nifti(const std::filesystem::path& path, const Volume3D& vol,
                 NiftiType type = NiftiType::float32, float slope = 0.0f,
                 float inter = 0.0f);

// ---------------------------------------------------------------------------
// Raw test format
//
//   offset  size  field
//   0       8     magic "SSVOL1\0\0"
//   8       12    nx, ny, nz          uint32 little-endian
//   20      24    sx, sy, sz          float64 little-endian
//   44      8*N   intensities         float64 little-endian, x fastest

Volume3D read_raw(const std::filesystem::path& path, int slice_axis = 2);
void write_raw(const std::filesystem::path& path, const Volume3D& vol);

/// Dispatches on file content: raw magic, else NIfTI (plain or gzip).
/// The subject id is the file name with volume extensions stripped.
Volume3D read_volume(const std::filesystem::path& path, int slice_axis = 2);

/// "sub01.nii.gz" -> "sub01"; ".nii", ".hdr", ".img", ".ssvol" also stripped.
std::string subject_id_from_path(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic phantoms

struct PhantomSpec {
  Dims3 dims{64, 64, 64};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::array<double, 3> center{31.5, 31.5, 31.5};
  std::array<double, 3> radii{20.0, 20.0, 20.0};
  double foreground = 100.0;
  double background = 0.0;
  /// Standard deviation of additive Gaussian noise on background voxels.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int slice_axis = 2;
  std::string subject_id = "phantom";
};

/// Voxel (x, y, z) is foreground iff sum(((p - center) / radii)^2) <= 1.
/// A zero radius on any axis yields an all-background volume. Noise comes
/// from mt19937_64 through Box-Muller, so output is bit-reproducible.
Volume3D make_phantom(const PhantomSpec& spec);

}  // namespace slicescout
