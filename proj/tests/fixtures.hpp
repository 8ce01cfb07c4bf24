// Shared fixture builders for the test suites.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "capmerge/merge.hpp"
#include "capmerge/saliency.hpp"
#include "capmerge/types.hpp"

namespace fixtures {

inline capmerge::ImageRecord image(std::string id, int width = 100,
                                   int height = 100) {
  capmerge::ImageRecord rec;
  rec.id = std::move(id);
  rec.width = width;
  rec.height = height;
  return rec;
}

inline capmerge::FaceObservation face(double x, double y, double w, double h,
                                      std::string identity,
                                      double similarity = 0.97) {
  capmerge::FaceObservation f;
  f.bbox = {x, y, w, h};
  f.identity = std::move(identity);
  f.similarity = similarity;
  return f;
}

// Map fully activated over the given pixel boxes and zero elsewhere.
inline capmerge::AttentionMap map_over(const capmerge::ImageRecord& rec,
                                       std::string word,
                                       const std::vector<capmerge::BBox>& boxes,
                                       int rows = 10, int cols = 10) {
  capmerge::AttentionMap m;
  m.image_id = rec.id;
  m.word = std::move(word);
  m.rows = rows;
  m.cols = cols;
  m.cells.assign(static_cast<std::size_t>(rows) * cols, 0.0f);
  for (const auto& box : boxes) {
    const capmerge::GridRect r =
        capmerge::bbox_to_grid(box, rec.width, rec.height, rows, cols);
    for (int row = r.row0; row < r.row1; ++row)
      for (int col = r.col0; col < r.col1; ++col)
        m.cells[static_cast<std::size_t>(row) * cols + col] = 1.0f;
  }
  return m;
}

inline capmerge::AttentionMap random_attention(std::mt19937& rng,
                                               std::string image_id,
                                               std::string word, int rows,
                                               int cols) {
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  capmerge::AttentionMap m;
  m.image_id = std::move(image_id);
  m.word = std::move(word);
  m.rows = rows;
  m.cols = cols;
  m.cells.resize(static_cast<std::size_t>(rows) * cols);
  for (auto& c : m.cells) c = dist(rng);
  return m;
}

inline capmerge::BBox random_bbox(std::mt19937& rng, int width, int height) {
  std::uniform_int_distribution<int> xd(0, width - 2), yd(0, height - 2);
  const int x = xd(rng), y = yd(rng);
  std::uniform_int_distribution<int> wd(1, width - x - 1), hd(1, height - y - 1);
  return {static_cast<double>(x), static_cast<double>(y),
          static_cast<double>(wd(rng)), static_cast<double>(hd(rng))};
}

}  // namespace fixtures
