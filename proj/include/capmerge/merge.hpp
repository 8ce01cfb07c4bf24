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
#include <string_view>
#include <vector>

#include "capmerge/corpus.hpp"
#include "capmerge/saliency.hpp"
#include "capmerge/types.hpp"

namespace capmerge {

/// Person-denoting words eligible for replacement, plus the number words
/// that open groups like "two men".
struct Lexicon {
  std::vector<std::pair<std::string, std::string>> person_words;  // {singular, plural}
  std::map<std::string, int> number_words;

  static Lexicon default_lexicon();

  bool is_singular(std::string_view word) const;
  std::optional<std::string> singular_of_plural(std::string_view word) const;
  std::optional<int> number_of(std::string_view word) const;
  // Sorted unique singular and plural forms.
  std::vector<std::string> all_person_words() const;
};

enum class CandidateKind { GenericSingular, GenericPlural, NumeralGroup, ExistingName };

std::string to_string(CandidateKind kind);

struct CandidateToken {
  std::string surface;    // caption text covered by the span
  std::size_t begin = 0;  // [begin, end) character span
  std::size_t end = 0;
  CandidateKind kind = CandidateKind::GenericSingular;
  std::string head;       // the person-word token, lowercase ("man", "men")
  std::optional<int> numeral;               // NumeralGroup only
  std::optional<std::string> associated_name;  // ExistingName only
};

struct MergeConfig {
  double theta = 0.05;                 // overlap gate
  double alpha = 0.5;                  // activation level
  double similarity_threshold = 0.90;  // identification gate
  Lexicon lexicon = Lexicon::default_lexicon();
  OverlapDenominator overlap_denominator = OverlapDenominator::BoxArea;
};

struct Substitution {
  CandidateToken candidate;
  std::vector<std::string> names;
  std::string rule;  // "R1", "R2", "R3"
};

struct MergePlan {
  std::string image_id;
  std::vector<Substitution> substitutions;  // sorted by span start
  std::string enhanced_caption;
  bool complex = false;  // complex => enhanced_caption equals the base caption
  std::vector<std::string> trace;
};

/// Candidate words in the caption, left to right: lexicon singulars, number
/// word + plural pairs as one numeral-group, bare plurals, and dictionary
/// name spans. Longer matches win; spans never overlap.
std::vector<CandidateToken> detect_candidates(std::string_view caption,
                                              const Lexicon& lexicon,
                                              const NameDictionary& dict);

struct FaceAssignment {
  int candidate = 0;  // index into the candidates list
  int face = 0;       // index into the faces list
  double overlap = 0;
  bool fallback = false;  // grounded via a borrowed person-word map
};

struct AssignResult {
  std::vector<FaceAssignment> pairs;  // greedy acceptance order
  std::vector<std::string> trace;
};

/// Pairs candidates with identified faces: every (candidate, face) overlap
/// >= theta enters a pool, consumed greedily in descending overlap order
/// (ties: smaller face bbox x, then candidate span start). Each face and
/// each name is used at most once; a numeral-group candidate with numeral n
/// takes up to n faces, every other kind at most one.
AssignResult assign_faces(const std::vector<CandidateToken>& candidates,
                          const std::vector<FaceObservation>& faces,
                          const std::string& image_id, int image_width,
                          int image_height, const AttentionSource& maps,
                          const MergeConfig& config);

/// Rewrites the caption right-to-left by span:
///   R1 generic singular: candidate (and an immediately preceding article)
///      replaced by the name.
///   R2 existing name: span replaced by the assigned face's name when they
///      differ.
///   R3 numeral-group "«n» «plural»": all n names joined with " and " when
///      n faces are assigned; fewer faces keep a spelled-out remainder
///      ("NAME and a man").
/// Captions containing a candidate context the rules cannot parse (a bare
/// plural, a possessive) are flagged complex and pass through unchanged
/// whenever identified faces exist; the flag depends only on the caption
/// structure, not on the overlap gate.
MergePlan apply_merge(std::string_view caption,
                      const std::vector<CandidateToken>& candidates,
                      const AssignResult& assignment,
                      const std::vector<FaceObservation>& faces,
                      const MergeConfig& config);

/// detect_candidates -> assign_faces -> apply_merge over one image. Only
/// faces with identity and similarity >= the configured threshold
/// participate. Deterministic for fixed inputs.
MergePlan enhance(const ImageRecord& record, std::string_view base_caption,
                  const AttentionSource& maps, const MergeConfig& config,
                  const NameDictionary& dict);

}  // namespace capmerge
