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

#include <vector>

#include "midbox/formats.hpp"

namespace midbox {

struct TileSpec {
  int size = 768;
  int overlap = 200;

  int stride() const { return size - overlap; }
  void validate() const;
};

/// Tile origins along one axis: 0, s, 2s, ... until a tile reaches `extent`.
std::vector<int> tile_origins(int extent, const TileSpec& spec);

/// Splits one annotated image into tiles. A box goes to every tile whose
/// half-open extent contains its center, translated into the tile frame;
/// boxes reaching past the tile are kept whole and flagged truncated.
std::vector<ImageAnnotation> tile_annotation(const ImageAnnotation& image, const TileSpec& spec);

}  // namespace midbox
