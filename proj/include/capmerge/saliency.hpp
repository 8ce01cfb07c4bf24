// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capmerge/types.hpp"

namespace capmerge {

/// Per-word saliency grid. Cells are non-negative finite reals, row-major.
struct AttentionMap {
  std::string image_id;
  std::string word;
  int rows = 0;
  int cols = 0;
  std::vector<float> cells;

  float at(int r, int c) const {
    return cells[static_cast<std::size_t>(r) * cols + c];
  }
  void validate() const;
};

struct ActivationMask {
  int rows = 0;
  int cols = 0;
  double alpha = 0;
  std::vector<std::uint8_t> cells;  // 1 = activated

  bool at(int r, int c) const {
    return cells[static_cast<std::size_t>(r) * cols + c] != 0;
  }
  long long activated_count() const;
  std::string debug_dump() const;  // '#' activated, '.' not
};

/// Half-open cell rectangle: rows [row0,row1) x cols [col0,col1).
struct GridRect {
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;

  long long area() const {
    return static_cast<long long>(row1 - row0) * (col1 - col0);
  }
  bool contains(int r, int c) const {
    return r >= row0 && r < row1 && c >= col0 && c < col1;
  }
};

/// Min-max normalizes the grid to [0,1] and activates cells >= alpha.
/// A flat map (max == min) activates every cell. alpha must be in (0,1].
ActivationMask binarize(const AttentionMap& map, double alpha);

/// Projects a pixel bbox onto an attention grid: corners scaled by
/// (cols/width, rows/height), low corner floored, high corner ceiled,
/// clamped to the grid. Always covers at least one cell.
GridRect bbox_to_grid(const BBox& bbox, int image_width, int image_height,
                      int rows, int cols);

enum class OverlapDenominator { BoxArea, ActivatedArea, UnionArea };

/// Fraction of the box covered by activated cells (exact integer ratio).
/// Alternative denominators are available for ablation.
double overlap_ratio(const ActivationMask& mask, const GridRect& box,
                     OverlapDenominator denom = OverlapDenominator::BoxArea);

// Attention map files. The binary format is bit-exact: magic "ATTN",
// little-endian u16 version (=1), u32 rows, u32 cols, then rows*cols
// IEEE-754 32-bit floats row-major. A JSON alternative
// {"image_id":..., "word":..., "grid": [[...], ...]} is accepted for
// small fixtures; readers sniff the magic to tell them apart.

void write_attention_binary(const std::string& path, const AttentionMap& map);
AttentionMap read_attention_file(const std::string& path);
AttentionMap parse_attention_json(const std::string& text,
                                  const std::string& origin);

/// Lookup seam for per-(image, word) attention maps.
class AttentionSource {
 public:
  virtual ~AttentionSource() = default;
  virtual std::optional<AttentionMap> lookup(const std::string& image_id,
                                             const std::string& word) const = 0;
  // Sorted list of words with a map for this image.
  virtual std::vector<std::string> words_for(const std::string& image_id) const = 0;
};

class InMemoryAttentionSource : public AttentionSource {
 public:
  void add(AttentionMap map);
  std::optional<AttentionMap> lookup(const std::string& image_id,
                                     const std::string& word) const override;
  std::vector<std::string> words_for(const std::string& image_id) const override;

 private:
  std::map<std::pair<std::string, std::string>, AttentionMap> maps_;
};

}  // namespace capmerge
