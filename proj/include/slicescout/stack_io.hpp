#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "slicescout/window.hpp"

namespace slicescout {

/// On-disk description of a SelectedStack directory.
///
/// The directory holds `manifest.txt` plus one file per retained slice,
/// `slice_NNNN.f64`, containing the plane as float64 little-endian values in
/// row-major order (plane_width values per row, plane_height rows).
///
/// manifest.txt is UTF-8 `key=value` lines in a fixed order; lines starting
/// with '#' are comments:
///
///   format=1
///   subject_id=<id>
///   method=edge_sum|entropy
///   selection=contiguous|top_k
///   start=<first index>
///   length=<slice count>
///   total_score=<score sum>
///   roi=<min_x>,<min_y>,<max_x>,<max_y>
///   plane_width=<w>
///   plane_height=<h>
///   plane_encoding=float64-le-row-major
///   param.<name>=<value>          (zero or more, caller supplied)
///   slice=<source index>,<file>   (one per slice, in stack order)
///   content_hash=sha256:<hex>
///
/// content_hash covers, for each slice in order, its source index, width and
/// height (uint32 LE each) followed by the plane bytes.
struct StackManifest {
  std::string subject_id;
  WindowSelection window;
  BoundingBox roi;
  int plane_width = 0;
  int plane_height = 0;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::pair<int, std::string>> slice_files;
  std::string content_hash;
};

std::string content_hash(const SelectedStack& stack);

/// Writes planes and manifest into `dir` (created if missing) and returns
/// the manifest that was written.
StackManifest write_stack(const std::filesystem::path& dir, const SelectedStack& stack,
                          std::vector<std::pair<std::string, std::string>> parameters = {});

StackManifest read_manifest(const std::filesystem::path& dir);

/// Loads manifest and planes, verifying the content hash.
SelectedStack read_stack(const std::filesystem::path& dir);

}  // namespace slicescout
