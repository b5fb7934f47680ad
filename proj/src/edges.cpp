#include "slicescout/edges.hpp"

#include <istream>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"

namespace slicescout {

Eigen::VectorXd gaussian_kernel_1d(double sigma, int radius) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::parameter, "gaussian sigma must be > 0");
  if (radius < 1) throw Error(ErrorKind::parameter, "gaussian radius must be >= 1");
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  return k / k.sum();
}

Eigen::MatrixXd gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::parameter, "gaussian sigma must be > 0");
  if (radius < 1) throw Error(ErrorKind::parameter, "gaussian radius must be >= 1");
  const int n = 2 * radius + 1;
  const double norm = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  Eigen::MatrixXd k(n, n);
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x)
      k(y + radius, x + radius) = norm * std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
  }
  return k / k.sum();
}

void CannyParams::validate() const {
  if (!(sigma > 0.0)) throw Error(ErrorKind::parameter, "canny sigma must be > 0");
  if (radius < 1) throw Error(ErrorKind::parameter, "canny radius must be >= 1");
  if (!(low_frac > 0.0 && low_frac < high_frac && high_frac <= 1.0))
    throw Error(ErrorKind::parameter,
                fmt::format("canny fractions need 0 < low < high <= 1 (got {}, {})", low_frac, high_frac));
}

Sector quantize_direction(double radians) noexcept {
  double deg = radians * (180.0 / std::numbers::pi);
  if (deg < 0.0) deg += 180.0;
  if (deg < 22.5 || deg >= 157.5) return Sector::deg0;
  if (deg < 67.5) return Sector::deg45;
  if (deg < 112.5) return Sector::deg90;
  return Sector::deg135;
}

namespace {

// {behind, ahead} neighbour offsets (dx, dy) along the gradient.
struct NeighbourPair {
  int bx, by, ax, ay;
};

NeighbourPair neighbours(Sector s) {
  switch (s) {
    case Sector::deg0: return {-1, 0, 1, 0};
    case Sector::deg45: return {-1, -1, 1, 1};
    case Sector::deg90: return {0, -1, 0, 1};
    case Sector::deg135: return {1, -1, -1, 1};
  }
  return {-1, 0, 1, 0};
}

void hysteresis(CannyResult& r, const BoundingBox& roi) {
  r.edges = Mask::Zero(r.candidates.rows(), r.candidates.cols());
  std::vector<std::pair<int, int>> stack;
  for (int y = roi.min_y + 1; y < roi.max_y; ++y) {
    for (int x = roi.min_x + 1; x < roi.max_x; ++x) {
      if (r.strong(y, x)) {
        r.edges(y, x) = 1;
        stack.emplace_back(x, y);
      }
    }
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        // candidates are only ever set inside the ROI interior
        if (r.candidates(ny, nx) && !r.edges(ny, nx)) {
          r.edges(ny, nx) = 1;
          stack.emplace_back(nx, ny);
        }
      }
    }
  }
}

}  // namespace

CannyResult canny(const PlaneXd& pixels, const BoundingBox& roi, const CannyParams& params) {
  params.validate();
  const int w = static_cast<int>(pixels.cols()), h = static_cast<int>(pixels.rows());
  if (!roi.fits(w, h))
    throw Error(ErrorKind::parameter,
                fmt::format("ROI ({},{})-({},{}) is empty or outside the {}x{} slice", roi.min_x,
                            roi.min_y, roi.max_x, roi.max_y, w, h));

  CannyResult r;
  r.gradient = sobel_gradients(gaussian_smooth(pixels, params.sigma, params.radius));
  r.candidates = Mask::Zero(h, w);
  r.strong = Mask::Zero(h, w);

  const auto roi_block = [&](const PlaneXd& p) {
    return p.block(roi.min_y, roi.min_x, roi.height(), roi.width());
  };
  const double reference = params.base == ThresholdBase::gradient_magnitude
                               ? roi_block(r.gradient.magnitude).maxCoeff()
                               : roi_block(pixels).maxCoeff();
  r.low = params.low_frac * reference;
  r.high = params.high_frac * reference;
  if (!(reference > 0.0)) {
    r.edges = Mask::Zero(h, w);
    return r;
  }

  const PlaneXd& mag = r.gradient.magnitude;
  for (int y = roi.min_y + 1; y < roi.max_y; ++y) {
    for (int x = roi.min_x + 1; x < roi.max_x; ++x) {
      const double m = mag(y, x);
      if (m < r.low || m <= 0.0) continue;
      const auto n = neighbours(quantize_direction(r.gradient.direction(y, x)));
      if (m > mag(y + n.by, x + n.bx) && m >= mag(y + n.ay, x + n.ax)) {
        r.candidates(y, x) = 1;
        if (m >= r.high) r.strong(y, x) = 1;
      }
    }
  }
  hysteresis(r, roi);
  return r;
}

Mask canny_edges(const PlaneXd& pixels, const BoundingBox& roi, const CannyParams& params) {
  return canny(pixels, roi, params).edges;
}

Mask canny_edges(const Slice2D& slice, const BoundingBox& roi, const CannyParams& params) {
  return canny_edges(slice.pixels, roi, params);
}

std::string_view to_string(ProfileKind kind) noexcept {
  return kind == ProfileKind::edge_sum ? "edge_sum" : "entropy";
}

ProfileKind parse_profile_kind(std::string_view text) {
  if (text == "edge_sum" || text == "edge" || text == "canny") return ProfileKind::edge_sum;
  if (text == "entropy") return ProfileKind::entropy;
  throw Error(ErrorKind::parameter, fmt::format("unknown profile kind '{}'", text));
}

SliceProfile edge_sum_profile(const Volume3D& vol, const BoundingBox& roi, const CannyParams& params) {
  SliceProfile profile{vol.subject_id(), Eigen::VectorXd(vol.slice_count()), ProfileKind::edge_sum};
  for (int k = 0; k < vol.slice_count(); ++k) {
    try {
      const Mask edges = canny_edges(extract_slice(vol, k).pixels, roi, params);
      profile.scores[k] = static_cast<double>(edges.cast<long long>().sum());
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("slice {}: {}", k, e.what()));
    }
  }
  return profile;
}

double slice_entropy(const PlaneXd& pixels) {
  const auto hist = histogram(pixels);
  if (hist.total == 0) return 0.0;
  double h = 0.0;
  for (auto c : hist.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(hist.total);
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;  // -0.0 for a single symbol
}

SliceProfile entropy_profile(const Volume3D& vol) {
  SliceProfile profile{vol.subject_id(), Eigen::VectorXd(vol.slice_count()), ProfileKind::entropy};
  for (int k = 0; k < vol.slice_count(); ++k) profile.scores[k] = slice_entropy(extract_slice(vol, k).pixels);
  return profile;
}

void write_profile_csv(std::ostream& out, const SliceProfile& profile) {
  out << "subject_id,slice_index,score,kind\n";
  for (int k = 0; k < profile.size(); ++k)
    fmt::print(out, "{},{},{},{}\n", profile.subject_id, k, profile.scores[k], to_string(profile.kind));
}

SliceProfile read_profile_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "subject_id,slice_index,score,kind")
    throw Error(ErrorKind::format, "profile CSV: missing header");
  SliceProfile profile;
  std::vector<double> scores;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorKind::format, fmt::format("profile CSV line {}: expected 4 fields", line_no));
    const auto kind = parse_profile_kind(f[3]);
    if (scores.empty()) {
      profile.subject_id = f[0];
      profile.kind = kind;
    } else if (f[0] != profile.subject_id || kind != profile.kind) {
      throw Error(ErrorKind::format, fmt::format("profile CSV line {}: mixed subjects or kinds", line_no));
    }
    if (detail::parse_int(f[1], "slice_index") != static_cast<long long>(scores.size()))
      throw Error(ErrorKind::format, fmt::format("profile CSV line {}: slice indices out of order", line_no));
    const double score = detail::parse_double(f[2], "score");
    if (score < 0.0) throw Error(ErrorKind::format, fmt::format("profile CSV line {}: negative score", line_no));
    scores.push_back(score);
  }
  profile.scores = Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
  return profile;
}

}  // namespace slicescout
