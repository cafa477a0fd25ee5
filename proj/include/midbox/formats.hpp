// Copyright 2026 The midbox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// On-disk formats.
//
// MTF tensor file:
//   bytes 0..3   "MTF1"
//   bytes 4..7   header length N, uint32 little-endian
//   next N bytes UTF-8 JSON {"dtype":"f32le","shape":[C,H,W],"names":[...]}
//   payload      C*H*W float32 little-endian, row-major
//
// Annotation JSONL, one image per line:
//   {"image": id, "width": W, "height": H,
//    "objects": [{"cx","cy","w","h","theta","class","difficult"}]}
// Detections use the same schema with a "score" per object. Tiled output adds
// "source", "x0", "y0" per image and "truncated" per object.
//
// Keypoint JSONL, one image per line:
//   {"image", "width", "height",
//    "centers":   [{"x","y","score","radius","class","object"}],
//    "midpoints": [{"label","x","y","score","sx","sy","class","object"}]}
// "object" is the index of the ground-truth object a keypoint came from, -1
// for spurious points; it is optional on input.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "midbox/heatmap.hpp"
#include "midbox/matcher.hpp"
#include "midbox/tensor.hpp"

namespace midbox {

struct MtfFile {
  Tensor tensor;
  std::vector<std::string> names;  // one per channel
};

void write_mtf(std::ostream& out, const MtfFile& file);
/// Throws kParse with the byte offset of the first malformed field.
MtfFile read_mtf(std::istream& in);

void write_mtf_file(const std::string& path, const MtfFile& file);
MtfFile read_mtf_file(const std::string& path);

/// Packs a TargetSet into one tensor with channels center (K), midpoint (4K),
/// shift (8), radius (1), mask (5), named e.g. "center/0", "mid/0/l",
/// "shift/l/dx", "radius", "mask/c".
MtfFile pack_targets(const TargetSet& targets);
/// Inverse of pack_targets; checks channel count and names.
TargetSet unpack_targets(const MtfFile& file);

struct AnnotatedObject {
  OrientedBox box;
  bool difficult = false;
  std::optional<double> score;
  std::optional<bool> truncated;
};

struct TileOrigin {
  std::string source;
  int x0 = 0;
  int y0 = 0;
};

struct ImageAnnotation {
  std::string image;
  int width = 0;  // 0 when absent
  int height = 0;
  std::vector<AnnotatedObject> objects;
  std::optional<TileOrigin> tile;
};

std::string to_jsonl(const ImageAnnotation& image);
ImageAnnotation parse_annotation_line(const std::string& line);
/// Skips blank lines; throws kParse prefixed with "line N:".
std::vector<ImageAnnotation> read_annotations(std::istream& in);
std::vector<ImageAnnotation> read_annotations_file(const std::string& path);
void write_annotations(std::ostream& out, const std::vector<ImageAnnotation>& images);

struct ImageKeypoints {
  std::string image;
  int width = 0;
  int height = 0;
  std::vector<CenterDet> centers;
  std::vector<MidpointDet> midpoints;
  std::vector<int> center_object;    // parallel to centers
  std::vector<int> midpoint_object;  // parallel to midpoints
};

std::string to_jsonl(const ImageKeypoints& image);
ImageKeypoints parse_keypoint_line(const std::string& line);
std::vector<ImageKeypoints> read_keypoints(std::istream& in);
std::vector<ImageKeypoints> read_keypoints_file(const std::string& path);

}  // namespace midbox
