#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <zlib.h>

#include "byteio.hpp"
#include "slicescout/error.hpp"
#include "slicescout/volume.hpp"

namespace slicescout {

namespace detail {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error(ErrorKind::io, fmt::format("cannot open {}", path));
  std::vector<unsigned char> bytes;
  std::array<unsigned char, 1 << 16> buffer;
  for (;;) {
    const int n = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (n < 0) {
      int errnum = 0;
      std::string message = gzerror(file, &errnum);
      gzclose(file);
      throw Error(ErrorKind::corruption, fmt::format("{}: {}", path, message));
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), buffer.begin(), buffer.begin() + n);
  }
  // A truncated gzip stream reads short without an error code until close.
  if (gzclose(file) != Z_OK)
    throw Error(ErrorKind::corruption, fmt::format("{}: truncated compressed stream", path));
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const unsigned char> bytes, bool gzip) {
  if (gzip) {
    gzFile file = gzopen(path.c_str(), "wb6");
    if (file == nullptr) throw Error(ErrorKind::io, fmt::format("cannot create {}", path));
    std::size_t done = 0;
    while (done < bytes.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
      if (gzwrite(file, bytes.data() + done, chunk) != static_cast<int>(chunk)) {
        gzclose(file);
        throw Error(ErrorKind::io, fmt::format("write failed for {}", path));
      }
      done += chunk;
    }
    if (gzclose(file) != Z_OK) throw Error(ErrorKind::io, fmt::format("write failed for {}", path));
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot create {}", path));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, fmt::format("write failed for {}", path));
}

}  // namespace detail

namespace {

constexpr int kHeaderSize = 348;
constexpr std::size_t kSingleFileOffset = 352;  // header + 4-byte extension flag
constexpr char kRawMagic[8] = {'S', 'S', 'V', 'O', 'L', '1', '\0', '\0'};
constexpr std::size_t kRawHeaderSize = 44;

// Header field offsets.
constexpr std::size_t kDim = 40;
constexpr std::size_t kDatatype = 70;
constexpr std::size_t kBitpix = 72;
constexpr std::size_t kPixdim = 76;
constexpr std::size_t kVoxOffset = 108;
constexpr std::size_t kSclSlope = 112;
constexpr std::size_t kSclInter = 116;
constexpr std::size_t kXyztUnits = 123;
constexpr std::size_t kMagic = 344;

int bytes_per_voxel(NiftiType type) {
  switch (type) {
    case NiftiType::uint8: return 1;
    case NiftiType::int16: return 2;
    case NiftiType::int32: return 4;
    case NiftiType::float32: return 4;
    case NiftiType::float64: return 8;
  }
  return 0;
}

bool known_type(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 64: return true;
    default: return false;
  }
}

template <typename T>
void decode_payload(const unsigned char* src, Eigen::ArrayXd& out, bool little) {
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(detail::load<T>(src + i * sizeof(T), little));
}

std::string companion_image_path(const std::string& header_path) {
  auto swap_ext = [](std::string p, std::string_view from, std::string_view to) {
    p.replace(p.size() - from.size(), from.size(), to);
    return p;
  };
  auto ends_with = [&](std::string_view s) { return header_path.ends_with(s); };
  if (ends_with(".hdr.gz")) return swap_ext(header_path, ".hdr.gz", ".img.gz");
  if (ends_with(".hdr")) return swap_ext(header_path, ".hdr", ".img");
  throw Error(ErrorKind::format,
              fmt::format("{}: 'ni1' header needs a .hdr name with a paired .img", header_path));
}

}  // namespace

Volume3D read_nifti(const std::filesystem::path& path, int slice_axis) {
  const std::string name = path.string();
  const auto bytes = detail::read_file_bytes(name);
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize))
    throw Error(ErrorKind::format, fmt::format("{}: shorter than a NIfTI-1 header", name));
  const unsigned char* h = bytes.data();

  bool little = true;
  if (detail::load<std::int32_t>(h, true) != kHeaderSize) {
    if (detail::load<std::int32_t>(h, false) != kHeaderSize)
      throw Error(ErrorKind::format, fmt::format("{}: sizeof_hdr is not 348", name));
    little = false;
  }

  const bool single_file = std::memcmp(h + kMagic, "n+1\0", 4) == 0;
  const bool paired = std::memcmp(h + kMagic, "ni1\0", 4) == 0;
  if (!single_file && !paired)
    throw Error(ErrorKind::format, fmt::format("{}: bad NIfTI-1 magic", name));

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = detail::load<std::int16_t>(h + kDim + 2 * i, little);
  if (dim[0] < 3 || dim[0] > 7)
    throw Error(ErrorKind::unsupported, fmt::format("{}: dim[0]={} is not a 3D volume", name, dim[0]));
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1)
      throw Error(ErrorKind::unsupported, fmt::format("{}: 4D and higher volumes are not supported", name));
  }
  Dims3 dims{dim[1], dim[2], dim[3]};
  for (int d : dims) {
    if (d <= 0) throw Error(ErrorKind::format, fmt::format("{}: non-positive dimension", name));
  }

  const auto datatype = detail::load<std::int16_t>(h + kDatatype, little);
  if (!known_type(datatype))
    throw Error(ErrorKind::unsupported, fmt::format("{}: unsupported datatype {}", name, datatype));
  const auto type = static_cast<NiftiType>(datatype);
  const auto bitpix = detail::load<std::int16_t>(h + kBitpix, little);
  if (bitpix != 8 * bytes_per_voxel(type))
    throw Error(ErrorKind::format,
                fmt::format("{}: bitpix {} disagrees with datatype {}", name, bitpix, datatype));

  Spacing3 spacing{};
  for (int i = 0; i < 3; ++i) {
    spacing[i] = detail::load<float>(h + kPixdim + 4 * (i + 1), little);
    if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
      throw Error(ErrorKind::format, fmt::format("{}: pixdim[{}] must be positive", name, i + 1));
  }

  const float vox_offset = detail::load<float>(h + kVoxOffset, little);
  const float slope = detail::load<float>(h + kSclSlope, little);
  const float inter = detail::load<float>(h + kSclInter, little);

  std::vector<unsigned char> image_bytes;
  const std::vector<unsigned char>* source = &bytes;
  std::size_t offset = 0;
  if (single_file) {
    if (!(vox_offset >= static_cast<float>(kHeaderSize)))
      throw Error(ErrorKind::format, fmt::format("{}: vox_offset {} inside header", name, vox_offset));
    offset = static_cast<std::size_t>(vox_offset);
  } else {
    image_bytes = detail::read_file_bytes(companion_image_path(name));
    source = &image_bytes;
    offset = vox_offset > 0.0f ? static_cast<std::size_t>(vox_offset) : 0;
  }

  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  const std::size_t need = count * bytes_per_voxel(type);
  if (source->size() < offset || source->size() - offset < need)
    throw Error(ErrorKind::corruption,
                fmt::format("{}: payload truncated ({} of {} bytes)", name,
                            source->size() > offset ? source->size() - offset : 0, need));

  Eigen::ArrayXd data(static_cast<Eigen::Index>(count));
  const unsigned char* src = source->data() + offset;
  switch (type) {
    case NiftiType::uint8: decode_payload<std::uint8_t>(src, data, little); break;
    case NiftiType::int16: decode_payload<std::int16_t>(src, data, little); break;
    case NiftiType::int32: decode_payload<std::int32_t>(src, data, little); break;
    case NiftiType::float32: decode_payload<float>(src, data, little); break;
    case NiftiType::float64: decode_payload<double>(src, data, little); break;
  }
  if (slope != 0.0f && std::isfinite(slope) && std::isfinite(inter))
    data = data * static_cast<double>(slope) + static_cast<double>(inter);
  if (!data.isFinite().all())
    throw Error(ErrorKind::corruption, fmt::format("{}: non-finite voxel values", name));

  return Volume3D(dims, spacing, std::move(data), subject_id_from_path(path), slice_axis);
}

void write_nifti(const std::filesystem::path& path, const Volume3D& vol, NiftiType type,
                 float slope, float inter) {
  for (int d : vol.dims()) {
    if (d > std::numeric_limits<std::int16_t>::max())
      throw Error(ErrorKind::unsupported, "dimension exceeds the NIfTI-1 int16 range");
  }
  const int bpv = bytes_per_voxel(type);
  std::vector<unsigned char> out(kSingleFileOffset, 0);
  out.reserve(kSingleFileOffset + vol.intensities().size() * bpv);

  detail::store_le_at<std::int32_t>(out, 0, kHeaderSize);
  detail::store_le_at<std::int16_t>(out, kDim, 3);
  for (int i = 0; i < 3; ++i)
    detail::store_le_at<std::int16_t>(out, kDim + 2 * (i + 1), static_cast<std::int16_t>(vol.dims()[i]));
  for (int i = 4; i < 8; ++i) detail::store_le_at<std::int16_t>(out, kDim + 2 * i, 1);
  detail::store_le_at<std::int16_t>(out, kDatatype, static_cast<std::int16_t>(type));
  detail::store_le_at<std::int16_t>(out, kBitpix, static_cast<std::int16_t>(8 * bpv));
  detail::store_le_at<float>(out, kPixdim, 1.0f);
  for (int i = 0; i < 3; ++i)
    detail::store_le_at<float>(out, kPixdim + 4 * (i + 1), static_cast<float>(vol.spacing()[i]));
  detail::store_le_at<float>(out, kVoxOffset, static_cast<float>(kSingleFileOffset));
  detail::store_le_at<float>(out, kSclSlope, slope);
  detail::store_le_at<float>(out, kSclInter, inter);
  out[kXyztUnits] = 2;  // NIFTI_UNITS_MM
  std::memcpy(out.data() + kMagic, "n+1\0", 4);

  for (double v : vol.intensities()) {
    switch (type) {
      case NiftiType::uint8: out.push_back(static_cast<std::uint8_t>(v)); break;
      case NiftiType::int16: detail::store_le(out, static_cast<std::int16_t>(v)); break;
      case NiftiType::int32: detail::store_le(out, static_cast<std::int32_t>(v)); break;
      case NiftiType::float32: detail::store_le(out, static_cast<float>(v)); break;
      case NiftiType::float64: detail::store_le(out, v); break;
    }
  }
  detail::write_file_bytes(path.string(), out, path.string().ends_with(".gz"));
}

Volume3D read_raw(const std::filesystem::path& path, int slice_axis) {
  const std::string name = path.string();
  const auto bytes = detail::read_file_bytes(name);
  if (bytes.size() < kRawHeaderSize || std::memcmp(bytes.data(), kRawMagic, 8) != 0)
    throw Error(ErrorKind::format, fmt::format("{}: not a raw volume (bad magic)", name));
  Dims3 dims{};
  Spacing3 spacing{};
  for (int i = 0; i < 3; ++i) {
    const auto d = detail::load<std::uint32_t>(bytes.data() + 8 + 4 * i);
    if (d == 0 || d > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
      throw Error(ErrorKind::format, fmt::format("{}: invalid dimension", name));
    dims[i] = static_cast<int>(d);
    spacing[i] = detail::load<double>(bytes.data() + 20 + 8 * i);
  }
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (bytes.size() - kRawHeaderSize < count * sizeof(double))
    throw Error(ErrorKind::corruption, fmt::format("{}: payload truncated", name));
  Eigen::ArrayXd data(static_cast<Eigen::Index>(count));
  decode_payload<double>(bytes.data() + kRawHeaderSize, data, true);
  return Volume3D(dims, spacing, std::move(data), subject_id_from_path(path), slice_axis);
}

void write_raw(const std::filesystem::path& path, const Volume3D& vol) {
  std::vector<unsigned char> out(kRawMagic, kRawMagic + 8);
  out.reserve(kRawHeaderSize + vol.intensities().size() * sizeof(double));
  for (int d : vol.dims()) detail::store_le(out, static_cast<std::uint32_t>(d));
  for (double s : vol.spacing()) detail::store_le(out, s);
  for (double v : vol.intensities()) detail::store_le(out, v);
  detail::write_file_bytes(path.string(), out, path.string().ends_with(".gz"));
}

Volume3D read_volume(const std::filesystem::path& path, int slice_axis) {
  const std::string name = path.string();
  gzFile file = gzopen(name.c_str(), "rb");
  if (file == nullptr) throw Error(ErrorKind::io, fmt::format("cannot open {}", name));
  char magic[8] = {};
  const int n = gzread(file, magic, sizeof magic);
  gzclose(file);
  if (n == 8 && std::memcmp(magic, kRawMagic, 8) == 0) return read_raw(path, slice_axis);
  return read_nifti(path, slice_axis);
}

std::string subject_id_from_path(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (std::string_view ext : {".gz", ".nii", ".hdr", ".img", ".ssvol"}) {
    if (name.size() > ext.size() && name.ends_with(ext)) name.resize(name.size() - ext.size());
  }
  return name;
}

}  // namespace slicescout
