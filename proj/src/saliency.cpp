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

#include "capmerge/saliency.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace capmerge {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'A', 'T', 'T', 'N'};
constexpr std::uint16_t kVersion = 1;
// Guard against absurd headers in corrupt files.
constexpr std::uint64_t kMaxCells = 1ull << 26;

void append_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void AttentionMap::validate() const {
  if (rows < 1 || cols < 1)
    throw InputError("attention map: grid dimensions must be >= 1");
  if (cells.size() != static_cast<std::size_t>(rows) * cols)
    throw InputError("attention map: cell count does not match dimensions");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!std::isfinite(cells[i]))
      throw InputError("attention map: non-finite cell at index " +
                       std::to_string(i));
    if (cells[i] < 0)
      throw InputError("attention map: negative cell at index " +
                       std::to_string(i));
  }
}

long long ActivationMask::activated_count() const {
  long long n = 0;
  for (auto c : cells) n += c != 0;
  return n;
}

std::string ActivationMask::debug_dump() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(rows) * (cols + 1));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.push_back(at(r, c) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

ActivationMask binarize(const AttentionMap& map, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InputError("binarize: activation level must be in (0,1]");
  if (map.rows < 1 || map.cols < 1 ||
      map.cells.size() != static_cast<std::size_t>(map.rows) * map.cols)
    throw InputError("binarize: malformed attention map");

  float lo = map.cells[0], hi = map.cells[0];
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const float v = map.cells[i];
    if (!std::isfinite(v))
      throw InputError("binarize: non-finite cell at index " + std::to_string(i));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  ActivationMask mask;
  mask.rows = map.rows;
  mask.cols = map.cols;
  mask.alpha = alpha;
  mask.cells.resize(map.cells.size());
  if (hi == lo) {
    std::fill(mask.cells.begin(), mask.cells.end(), std::uint8_t{1});
    return mask;
  }
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const double normalized = (static_cast<double>(map.cells[i]) - lo) / range;
    mask.cells[i] = normalized >= alpha ? 1 : 0;
  }
  return mask;
}

GridRect bbox_to_grid(const BBox& bbox, int image_width, int image_height,
                      int rows, int cols) {
  if (bbox.w <= 0 || bbox.h <= 0) throw InputError("bbox_to_grid: empty bbox");
  if (image_width <= 0 || image_height <= 0 || rows <= 0 || cols <= 0)
    throw InputError("bbox_to_grid: dimensions must be positive");
  if (bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > image_width ||
      bbox.y + bbox.h > image_height)
    throw InputError("bbox_to_grid: bbox outside image bounds");

  const double sx = static_cast<double>(cols) / image_width;
  const double sy = static_cast<double>(rows) / image_height;
  GridRect r;
  r.col0 = std::max(0, static_cast<int>(std::floor(bbox.x * sx)));
  r.row0 = std::max(0, static_cast<int>(std::floor(bbox.y * sy)));
  r.col1 = std::min(cols, static_cast<int>(std::ceil((bbox.x + bbox.w) * sx)));
  r.row1 = std::min(rows, static_cast<int>(std::ceil((bbox.y + bbox.h) * sy)));
  if (r.col1 <= r.col0) {
    r.col0 = std::min(r.col0, cols - 1);
    r.col1 = r.col0 + 1;
  }
  if (r.row1 <= r.row0) {
    r.row0 = std::min(r.row0, rows - 1);
    r.row1 = r.row0 + 1;
  }
  return r;
}

double overlap_ratio(const ActivationMask& mask, const GridRect& box,
                     OverlapDenominator denom) {
  if (box.row0 < 0 || box.col0 < 0 || box.row1 > mask.rows ||
      box.col1 > mask.cols || box.row1 <= box.row0 || box.col1 <= box.col0)
    throw InputError("overlap_ratio: box outside grid");

  long long inside = 0;
  for (int r = box.row0; r < box.row1; ++r)
    for (int c = box.col0; c < box.col1; ++c) inside += mask.at(r, c);

  long long denominator = 0;
  switch (denom) {
    case OverlapDenominator::BoxArea:
      denominator = box.area();
      break;
    case OverlapDenominator::ActivatedArea:
      denominator = mask.activated_count();
      break;
    case OverlapDenominator::UnionArea:
      denominator = mask.activated_count() + box.area() - inside;
      break;
  }
  if (denominator == 0) return 0.0;
  return static_cast<double>(inside) / static_cast<double>(denominator);
}

void write_attention_binary(const std::string& path, const AttentionMap& map) {
  map.validate();
  std::string buf;
  buf.reserve(14 + map.cells.size() * 4);
  buf.append(kMagic, 4);
  append_u16le(buf, kVersion);
  append_u32le(buf, static_cast<std::uint32_t>(map.rows));
  append_u32le(buf, static_cast<std::uint32_t>(map.cols));
  for (float v : map.cells) append_u32le(buf, std::bit_cast<std::uint32_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("write failed: " + path);
}

AttentionMap parse_attention_json(const std::string& text,
                                  const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
  AttentionMap map;
  try {
    if (root.contains("image_id")) map.image_id = root["image_id"].get<std::string>();
    if (root.contains("word")) map.word = root["word"].get<std::string>();
    const json& grid = root.at("grid");
    if (!grid.is_array() || grid.empty())
      throw InputError("grid must be a non-empty array of rows");
    map.rows = static_cast<int>(grid.size());
    map.cols = static_cast<int>(grid[0].size());
    for (const json& row : grid) {
      if (static_cast<int>(row.size()) != map.cols)
        throw InputError("ragged grid rows");
      for (const json& v : row) map.cells.push_back(v.get<float>());
    }
  } catch (const json::exception& e) {
    throw InputError(origin + ": " + e.what());
  }
  map.validate();
  return map;
}

AttentionMap read_attention_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open attention file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    return parse_attention_json(buf, path);

  if (buf.size() < 14) throw InputError(path + ": truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint16_t version = read_u16le(p + 4);
  if (version != kVersion)
    throw InputError(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t rows = read_u32le(p + 6);
  const std::uint32_t cols = read_u32le(p + 10);
  if (rows < 1 || cols < 1)
    throw InputError(path + ": grid dimensions must be >= 1");
  const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
  if (cells > kMaxCells)
    throw InputError(path + ": grid too large (" + std::to_string(cells) + " cells)");
  if (buf.size() != 14 + cells * 4)
    throw InputError(path + ": file size does not match header");

  AttentionMap map;
  map.rows = static_cast<int>(rows);
  map.cols = static_cast<int>(cols);
  map.cells.resize(cells);
  for (std::uint64_t i = 0; i < cells; ++i)
    map.cells[i] = std::bit_cast<float>(read_u32le(p + 14 + i * 4));
  map.validate();
  return map;
}

void InMemoryAttentionSource::add(AttentionMap map) {
  maps_[{map.image_id, map.word}] = std::move(map);
}

std::optional<AttentionMap> InMemoryAttentionSource::lookup(
    const std::string& image_id, const std::string& word) const {
  auto it = maps_.find({image_id, word});
  if (it == maps_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> InMemoryAttentionSource::words_for(
    const std::string& image_id) const {
  std::vector<std::string> out;
  for (const auto& [key, _] : maps_)
    if (key.first == image_id) out.push_back(key.second);
  return out;  // map iteration keeps words sorted
}

}  // namespace capmerge
