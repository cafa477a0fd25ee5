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

#include "midbox/tiling.hpp"

#include <algorithm>
#include <string>

#include "midbox/error.hpp"

namespace midbox {

void TileSpec::validate() const {
  if (size <= 0 || overlap < 0 || overlap >= size) {
    throw Error(ErrorKind::kInvalidArgument, "tiling needs 0 <= overlap < size");
  }
}

std::vector<int> tile_origins(int extent, const TileSpec& spec) {
  spec.validate();
  std::vector<int> origins;
  for (int x = 0;; x += spec.stride()) {
    origins.push_back(x);
    if (x + spec.size >= extent) break;
  }
  return origins;
}

std::vector<ImageAnnotation> tile_annotation(const ImageAnnotation& image, const TileSpec& spec) {
  if (image.width <= 0 || image.height <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "image " + image.image + " lacks width/height");
  }
  constexpr double kSlack = 1e-9;
  std::vector<ImageAnnotation> tiles;
  for (int y0 : tile_origins(image.height, spec)) {
    for (int x0 : tile_origins(image.width, spec)) {
      ImageAnnotation tile;
      tile.image = image.image + "_" + std::to_string(x0) + "_" + std::to_string(y0);
      tile.width = std::min(spec.size, image.width - x0);
      tile.height = std::min(spec.size, image.height - y0);
      tile.tile = TileOrigin{image.image, x0, y0};
      for (const AnnotatedObject& o : image.objects) {
        const Point2 c = o.box.center;
        if (c.x < x0 || c.x >= x0 + tile.width || c.y < y0 || c.y >= y0 + tile.height) continue;
        AnnotatedObject moved = o;
        moved.box.center = {c.x - x0, c.y - y0};
        bool truncated = false;
        for (const Point2& p : box_corners(moved.box)) {
          truncated = truncated || p.x < -kSlack || p.y < -kSlack ||
                      p.x > tile.width + kSlack || p.y > tile.height + kSlack;
        }
        moved.truncated = truncated;
        tile.objects.push_back(moved);
      }
      tiles.push_back(std::move(tile));
    }
  }
  return tiles;
}

}  // namespace midbox
