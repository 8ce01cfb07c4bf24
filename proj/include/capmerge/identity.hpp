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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capmerge/types.hpp"

namespace capmerge {

struct GalleryEntry {
  std::string name;
  std::vector<std::vector<double>> embeddings;
};

/// Immutable database of known identities and their face embeddings.
struct Gallery {
  std::vector<GalleryEntry> entries;
  std::size_t embedding_dim = 0;

  // Throws InputError unless all embeddings share embedding_dim, none is the
  // zero vector, and names are unique.
  void validate() const;
  std::vector<std::string> names() const;
};

Gallery load_gallery(const std::string& path);
Gallery parse_gallery(const std::string& text, const std::string& origin);

/// How a raw cosine becomes the reported similarity score.
/// MappedCosine rescales to [0,1] via (cos+1)/2; RawCosine keeps [-1,1].
enum class SimilarityScale { MappedCosine, RawCosine };

struct IdentityMatch {
  std::string name;
  double similarity = 0;
};

/// Best gallery identity for `embedding`, or nullopt when the best similarity
/// falls below `threshold`. For identities with several embeddings the
/// maximum similarity counts; ties are broken by gallery entry order.
std::optional<IdentityMatch> match_face(
    const std::vector<double>& embedding, const Gallery& gallery,
    double threshold, SimilarityScale scale = SimilarityScale::MappedCosine);

/// Resolves every face that carries an embedding but no identity. Faces with
/// a pre-resolved identity pass through untouched; faces whose best match
/// falls below the threshold end up with neither identity nor similarity.
/// Pure element-wise map; jobs > 1 distributes records across threads.
std::vector<ImageRecord> resolve_all(
    std::vector<ImageRecord> records, const Gallery& gallery, double threshold,
    int jobs = 1, SimilarityScale scale = SimilarityScale::MappedCosine);

// Remote identification seam. Real network clients live behind this
// interface; the library ships only a fixture implementation.

struct FaceCrop {
  std::string image_id;
  BBox bbox;
};

struct BackendUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class IdentificationBackend {
 public:
  virtual ~IdentificationBackend() = default;
  // Returns the backend's verdict, nullopt for "no match". Throws
  // BackendUnavailableError when the service cannot answer at all.
  virtual std::optional<IdentityMatch> identify(const FaceCrop& crop) = 0;
};

/// Backend verdict gated by the same similarity threshold as match_face.
std::optional<IdentityMatch> remote_identify(const FaceCrop& crop,
                                             IdentificationBackend& backend,
                                             double threshold);

/// Canned verdicts keyed by image id, for tests and offline runs.
class FixtureBackend : public IdentificationBackend {
 public:
  void add(const std::string& image_id, IdentityMatch verdict);
  void set_available(bool available) { available_ = available; }
  std::optional<IdentityMatch> identify(const FaceCrop& crop) override;

 private:
  std::map<std::string, IdentityMatch> verdicts_;
  bool available_ = true;
};

/// Per-image detector output: image id -> face observations.
using FacesFile = std::map<std::string, std::vector<FaceObservation>>;

FacesFile load_faces(const std::string& path);

/// Replaces the faces of every record whose id appears in `faces` (the
/// sidecar is the authoritative detector output). Returns the ids in `faces`
/// that match no record, for the caller to warn about.
std::vector<std::string> apply_faces(std::vector<ImageRecord>& records,
                                     const FacesFile& faces);

}  // namespace capmerge
