#include "slicescout/roi.hpp"

#include <fmt/format.h>

#include "slicescout/error.hpp"

namespace slicescout {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

constexpr std::uint64_t kMaxOtsuSamples = std::uint64_t{1} << 27;

// sigma_B^2 * N^2 = D^2 / (n0 * n1) with D = s0*n1 - s1*n0. Kept as the pair
// (D^2, n0*n1) so candidates compare exactly.
struct VarianceRatio {
  u128 numerator = 0;
  u128 denominator = 1;

  // this > other, via quotient then cross-multiplied remainders.
  bool greater_than(const VarianceRatio& other) const {
    const u128 q_a = numerator / denominator;
    const u128 q_b = other.numerator / other.denominator;
    if (q_a != q_b) return q_a > q_b;
    const u128 r_a = numerator % denominator;
    const u128 r_b = other.numerator % other.denominator;
    return r_a * other.denominator > r_b * denominator;
  }
};

struct SplitSums {
  std::uint64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0;
};

SplitSums split_sums(const Histogram256& hist, int t) {
  SplitSums s;
  for (int b = 0; b < kHistogramBins; ++b) {
    auto& n = b <= t ? s.n0 : s.n1;
    auto& sum = b <= t ? s.s0 : s.s1;
    n += hist.counts[b];
    sum += hist.counts[b] * static_cast<std::uint64_t>(b);
  }
  return s;
}

VarianceRatio ratio_of(const SplitSums& s) {
  const i128 d = static_cast<i128>(s.s0) * static_cast<i128>(s.n1) -
                 static_cast<i128>(s.s1) * static_cast<i128>(s.n0);
  const u128 mag = static_cast<u128>(d < 0 ? -d : d);
  return {mag * mag, static_cast<u128>(s.n0) * s.n1};
}

double to_variance(const VarianceRatio& r, std::uint64_t total) {
  const long double n = static_cast<long double>(total);
  return static_cast<double>(static_cast<long double>(r.numerator) /
                             static_cast<long double>(r.denominator) / (n * n));
}

void check_histogram(const Histogram256& hist) {
  std::uint64_t sum = 0;
  for (auto c : hist.counts) sum += c;
  if (sum != hist.total)
    throw Error(ErrorKind::parameter, "histogram counts do not sum to its total");
  if (hist.total == 0) throw Error(ErrorKind::parameter, "histogram is empty");
  if (hist.total > kMaxOtsuSamples)
    throw Error(ErrorKind::size, "histogram exceeds 2^27 samples");
}

}  // namespace

Histogram256 histogram(const PlaneXd& pixels) {
  Histogram256 hist;
  if (pixels.size() == 0) return hist;
  hist.min_val = pixels.minCoeff();
  hist.max_val = pixels.maxCoeff();
  const auto bins = bin_indices(pixels);
  for (Eigen::Index i = 0; i < bins.size(); ++i) ++hist.counts[bins.data()[i]];
  hist.total = static_cast<std::uint64_t>(pixels.size());
  return hist;
}

double between_class_variance(const Histogram256& hist, int t) {
  if (t < 0 || t >= kHistogramBins - 1 || hist.total == 0) return 0.0;
  const auto s = split_sums(hist, t);
  if (s.n0 == 0 || s.n1 == 0) return 0.0;
  return to_variance(ratio_of(s), hist.total);
}

OtsuResult otsu_threshold(const Histogram256& hist) {
  check_histogram(hist);

  std::uint64_t total_sum = 0;
  for (int b = 0; b < kHistogramBins; ++b) total_sum += hist.counts[b] * static_cast<std::uint64_t>(b);

  OtsuResult result;
  VarianceRatio best;
  SplitSums s;
  s.n1 = hist.total;
  s.s1 = total_sum;
  for (int t = 0; t < kHistogramBins - 1; ++t) {
    s.n0 += hist.counts[t];
    s.s0 += hist.counts[t] * static_cast<std::uint64_t>(t);
    s.n1 -= hist.counts[t];
    s.s1 -= hist.counts[t] * static_cast<std::uint64_t>(t);
    if (s.n0 == 0 || s.n1 == 0) continue;
    const auto candidate = ratio_of(s);
    if (!result.threshold || candidate.greater_than(best)) {
      best = candidate;
      result.threshold = t;
    }
  }
  if (result.threshold) result.between_class_variance = to_variance(best, hist.total);
  return result;
}

Mask binarize(const PlaneXd& pixels, const OtsuResult& otsu) {
  if (!otsu.threshold) return Mask::Zero(pixels.rows(), pixels.cols());
  const int t = *otsu.threshold;
  return bin_indices(pixels).unaryExpr(
      [t](std::uint8_t b) { return static_cast<std::uint8_t>(b > t ? 1 : 0); });
}

Mask binarize(const Slice2D& slice, const OtsuResult& otsu) {
  return binarize(slice.pixels, otsu);
}

std::optional<BoundingBox> slice_bounding_box(const Mask& mask) {
  std::optional<BoundingBox> box;
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      const int xi = static_cast<int>(x), yi = static_cast<int>(y);
      if (!box) {
        box = BoundingBox{xi, yi, xi, yi};
      } else {
        box->min_x = std::min(box->min_x, xi);
        box->max_x = std::max(box->max_x, xi);
        box->min_y = std::min(box->min_y, yi);
        box->max_y = std::max(box->max_y, yi);
      }
    }
  }
  return box;
}

BoundingBox patient_roi(std::span<const BoundingBox> boxes) {
  if (boxes.empty())
    throw Error(ErrorKind::input, "no foreground found in any slice of the volume");
  const BoundingBox* best = &boxes.front();
  for (const auto& box : boxes.subspan(1)) {
    const bool better =
        box.area() > best->area() ||
        (box.area() == best->area() &&
         (box.min_y < best->min_y || (box.min_y == best->min_y && box.min_x < best->min_x)));
    if (better) best = &box;
  }
  return *best;
}

BoundingBox patient_roi(std::span<const std::optional<BoundingBox>> per_slice) {
  std::vector<BoundingBox> present;
  for (const auto& box : per_slice) {
    if (box) present.push_back(*box);
  }
  return patient_roi(std::span<const BoundingBox>(present));
}

BoundingBox union_roi(std::span<const std::optional<BoundingBox>> per_slice) {
  std::optional<BoundingBox> result;
  for (const auto& box : per_slice) {
    if (!box) continue;
    if (!result) {
      result = *box;
      continue;
    }
    result->min_x = std::min(result->min_x, box->min_x);
    result->min_y = std::min(result->min_y, box->min_y);
    result->max_x = std::max(result->max_x, box->max_x);
    result->max_y = std::max(result->max_y, box->max_y);
  }
  if (!result) throw Error(ErrorKind::input, "no foreground found in any slice of the volume");
  return *result;
}

std::optional<BoundingBox> segment_slice(const PlaneXd& pixels) {
  const auto otsu = otsu_threshold(histogram(pixels));
  if (!otsu.is_split()) return std::nullopt;
  return slice_bounding_box(binarize(pixels, otsu));
}

std::vector<std::optional<BoundingBox>> slice_boxes(const Volume3D& vol) {
  std::vector<std::optional<BoundingBox>> boxes;
  boxes.reserve(vol.slice_count());
  for (int k = 0; k < vol.slice_count(); ++k) boxes.push_back(segment_slice(extract_slice(vol, k).pixels));
  return boxes;
}

}  // namespace slicescout
