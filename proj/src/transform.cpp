#include "slicescout/transform.hpp"

#include <fmt/format.h>

namespace slicescout {

std::string_view to_string(ResizeMode mode) noexcept {
  return mode == ResizeMode::area_average ? "area_average" : "nearest";
}

ResizeMode parse_resize_mode(std::string_view text) {
  if (text == "area_average" || text == "area") return ResizeMode::area_average;
  if (text == "nearest") return ResizeMode::nearest;
  throw Error(ErrorKind::parameter, fmt::format("unknown resize mode '{}'", text));
}

SelectedStack downsample(const SelectedStack& stack, const ResizeSpec& spec) {
  SelectedStack out{stack.subject_id, stack.window, {}, stack.roi};
  out.slices.reserve(stack.slices.size());
  for (const auto& s : stack.slices) out.slices.push_back(Slice2D{downsample(s.pixels, spec), s.index});
  return out;
}

}  // namespace slicescout
