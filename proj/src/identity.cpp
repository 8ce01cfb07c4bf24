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

#include "capmerge/identity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "capmerge/corpus.hpp"
#include "capmerge/parallel.hpp"
#include "json.hpp"

namespace capmerge {

namespace {

using nlohmann::json;

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void Gallery::validate() const {
  std::set<std::string> seen;
  for (const auto& entry : entries) {
    if (entry.name.empty()) throw InputError("gallery: empty identity name");
    if (!seen.insert(entry.name).second)
      throw InputError("gallery: duplicate identity '" + entry.name + "'");
    if (entry.embeddings.empty())
      throw InputError("gallery: identity '" + entry.name +
                       "' has no embeddings");
    for (const auto& emb : entry.embeddings) {
      if (emb.size() != embedding_dim)
        throw InputError("gallery: identity '" + entry.name +
                         "' embedding length " + std::to_string(emb.size()) +
                         " != embedding_dim " + std::to_string(embedding_dim));
      if (norm(emb) == 0.0)
        throw InputError("gallery: identity '" + entry.name +
                         "' has a zero embedding");
    }
  }
}

std::vector<std::string> Gallery::names() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.name);
  return out;
}

Gallery parse_gallery(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
  if (!root.is_array())
    throw InputError(origin + ": gallery must be a top-level array");
  Gallery g;
  for (const json& j : root) {
    GalleryEntry entry;
    try {
      entry.name = j.at("name").get<std::string>();
      entry.embeddings =
          j.at("embeddings").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw InputError(origin + ": malformed gallery entry: " + e.what());
    }
    if (g.entries.empty() && !entry.embeddings.empty())
      g.embedding_dim = entry.embeddings.front().size();
    g.entries.push_back(std::move(entry));
  }
  g.validate();
  return g;
}

Gallery load_gallery(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open gallery file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gallery(ss.str(), path);
}

std::optional<IdentityMatch> match_face(const std::vector<double>& embedding,
                                        const Gallery& gallery,
                                        double threshold,
                                        SimilarityScale scale) {
  if (embedding.size() != gallery.embedding_dim)
    throw InputError("match_face: embedding length " +
                     std::to_string(embedding.size()) + " != gallery dim " +
                     std::to_string(gallery.embedding_dim));
  const double qn = norm(embedding);
  if (qn == 0.0) throw InputError("match_face: zero-vector query");

  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_entry = 0;
  bool found = false;
  for (std::size_t i = 0; i < gallery.entries.size(); ++i) {
    double entry_best = -std::numeric_limits<double>::infinity();
    for (const auto& emb : gallery.entries[i].embeddings) {
      const double cos = dot(embedding, emb) / (qn * norm(emb));
      double sim = scale == SimilarityScale::MappedCosine
                       ? std::clamp((cos + 1.0) / 2.0, 0.0, 1.0)
                       : cos;
      entry_best = std::max(entry_best, sim);
    }
    if (entry_best > best) {  // strict: first entry keeps ties
      best = entry_best;
      best_entry = i;
      found = true;
    }
  }
  if (!found || best < threshold) return std::nullopt;
  return IdentityMatch{gallery.entries[best_entry].name, best};
}

std::vector<ImageRecord> resolve_all(std::vector<ImageRecord> records,
                                     const Gallery& gallery, double threshold,
                                     int jobs, SimilarityScale scale) {
  const auto n = static_cast<long long>(records.size());
  std::vector<std::string> errors(records.size());

  auto resolve_record = [&](long long i) {
    ImageRecord& rec = records[static_cast<std::size_t>(i)];
    for (std::size_t f = 0; f < rec.faces.size(); ++f) {
      FaceObservation& face = rec.faces[f];
      if (face.identity) continue;  // pre-resolved, pass through
      if (!face.embedding) continue;
      try {
        auto match = match_face(*face.embedding, gallery, threshold, scale);
        if (match) {
          face.identity = match->name;
          face.similarity = match->similarity;
        } else {
          face.identity.reset();
          face.similarity.reset();
        }
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = "record '" + rec.id + "' face #" +
                                              std::to_string(f) + ": " + e.what();
        return;
      }
    }
  };

  parallel_for(n, jobs, resolve_record);

  for (const auto& err : errors)
    if (!err.empty()) throw InputError(err);
  return records;
}

std::optional<IdentityMatch> remote_identify(const FaceCrop& crop,
                                             IdentificationBackend& backend,
                                             double threshold) {
  auto verdict = backend.identify(crop);
  if (!verdict || verdict->similarity < threshold) return std::nullopt;
  return verdict;
}

void FixtureBackend::add(const std::string& image_id, IdentityMatch verdict) {
  verdicts_[image_id] = std::move(verdict);
}

std::optional<IdentityMatch> FixtureBackend::identify(const FaceCrop& crop) {
  if (!available_)
    throw BackendUnavailableError("identification backend unavailable");
  auto it = verdicts_.find(crop.image_id);
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

FacesFile load_faces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open faces file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  if (!root.is_object())
    throw InputError(path + ": faces file must map image ids to face lists");
  FacesFile out;
  for (auto it = root.begin(); it != root.end(); ++it) {
    std::vector<FaceObservation> faces;
    for (const json& fj : it.value()) {
      FaceObservation f;
      try {
        const json& bb = fj.at("bbox");
        if (!bb.is_array() || bb.size() != 4)
          throw InputError("bbox must be [x, y, w, h]");
        f.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(),
                      bb[2].get<double>(), bb[3].get<double>()};
        if (fj.contains("embedding") && !fj["embedding"].is_null())
          f.embedding = fj["embedding"].get<std::vector<double>>();
        if (fj.contains("identity") && !fj["identity"].is_null())
          f.identity = fj["identity"].get<std::string>();
        if (fj.contains("similarity") && !fj["similarity"].is_null())
          f.similarity = fj["similarity"].get<double>();
      } catch (const json::exception& e) {
        throw InputError(path + ": image '" + it.key() + "': " + e.what());
      }
      faces.push_back(std::move(f));
    }
    out[it.key()] = std::move(faces);
  }
  return out;
}

std::vector<std::string> apply_faces(std::vector<ImageRecord>& records,
                                     const FacesFile& faces) {
  std::set<std::string> used;
  for (auto& rec : records) {
    auto it = faces.find(rec.id);
    if (it == faces.end()) continue;
    rec.faces = it->second;
    validate_record(rec);
    used.insert(rec.id);
  }
  std::vector<std::string> orphans;
  for (const auto& [id, _] : faces)
    if (!used.count(id)) orphans.push_back(id);
  return orphans;
}

}  // namespace capmerge
