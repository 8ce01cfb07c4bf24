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

#include "capmerge/merge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

namespace capmerge {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct WordToken {
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Maximal alphanumeric runs. Apostrophes and hyphens break tokens, so
// "man's" yields "man" + "s" and the possessive shows up as context.
std::vector<WordToken> word_tokens(std::string_view s) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_char(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && is_word_char(s[j])) ++j;
    out.push_back({s.substr(i, j - i), i, j});
    i = j;
  }
  return out;
}

bool only_whitespace_between(std::string_view s, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i)
    if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

const char* kNumberWords[] = {"one", "two",   "three", "four", "five",
                              "six", "seven", "eight", "nine", "ten"};

std::string spell_number(int n) {
  if (n >= 1 && n <= 10) return kNumberWords[n - 1];
  return std::to_string(n);
}

std::string indefinite_article(std::string_view noun) {
  if (noun.empty()) return "a";
  switch (std::tolower(static_cast<unsigned char>(noun.front()))) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return "an";
    default:
      return "a";
  }
}

}  // namespace

Lexicon Lexicon::default_lexicon() {
  Lexicon lex;
  lex.person_words = {{"man", "men"},
                      {"woman", "women"},
                      {"person", "people"},
                      {"astronaut", "astronauts"}};
  for (int i = 0; i < 10; ++i) lex.number_words[kNumberWords[i]] = i + 1;
  return lex;
}

bool Lexicon::is_singular(std::string_view word) const {
  for (const auto& [sing, _] : person_words)
    if (sing == word) return true;
  return false;
}

std::optional<std::string> Lexicon::singular_of_plural(std::string_view word) const {
  for (const auto& [sing, plur] : person_words)
    if (plur == word) return sing;
  return std::nullopt;
}

std::optional<int> Lexicon::number_of(std::string_view word) const {
  auto it = number_words.find(std::string(word));
  if (it == number_words.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Lexicon::all_person_words() const {
  std::set<std::string> words;
  for (const auto& [sing, plur] : person_words) {
    words.insert(sing);
    words.insert(plur);
  }
  return {words.begin(), words.end()};
}

std::string to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::GenericSingular: return "generic-singular";
    case CandidateKind::GenericPlural: return "generic-plural";
    case CandidateKind::NumeralGroup: return "numeral-group";
    case CandidateKind::ExistingName: return "existing-name";
  }
  return "unknown";
}

std::vector<CandidateToken> detect_candidates(std::string_view caption,
                                              const Lexicon& lexicon,
                                              const NameDictionary& dict) {
  std::vector<CandidateToken> out;

  const std::vector<NameMatch> names = extract_names(caption, dict);
  for (const auto& m : names) {
    CandidateToken c;
    c.surface = std::string(caption.substr(m.begin, m.end - m.begin));
    c.begin = m.begin;
    c.end = m.end;
    c.kind = CandidateKind::ExistingName;
    c.associated_name = m.name;
    out.push_back(std::move(c));
  }
  auto inside_name = [&](std::size_t begin, std::size_t end) {
    for (const auto& m : names)
      if (begin < m.end && end > m.begin) return true;
    return false;
  };

  const std::vector<WordToken> toks = word_tokens(caption);
  for (std::size_t t = 0; t < toks.size(); ++t) {
    const WordToken& tok = toks[t];
    if (inside_name(tok.begin, tok.end)) continue;
    const std::string low = lower(tok.text);

    if (lexicon.is_singular(low)) {
      CandidateToken c;
      c.surface = std::string(tok.text);
      c.begin = tok.begin;
      c.end = tok.end;
      c.kind = CandidateKind::GenericSingular;
      c.head = low;
      out.push_back(std::move(c));
      continue;
    }
    if (auto singular = lexicon.singular_of_plural(low)) {
      // Number word immediately before the plural makes a numeral-group.
      if (t > 0 && !inside_name(toks[t - 1].begin, toks[t - 1].end) &&
          only_whitespace_between(caption, toks[t - 1].end, tok.begin)) {
        if (auto n = lexicon.number_of(lower(toks[t - 1].text))) {
          CandidateToken c;
          c.begin = toks[t - 1].begin;
          c.end = tok.end;
          c.surface = std::string(caption.substr(c.begin, c.end - c.begin));
          c.kind = CandidateKind::NumeralGroup;
          c.head = low;
          c.numeral = *n;
          out.push_back(std::move(c));
          continue;
        }
      }
      CandidateToken c;
      c.surface = std::string(tok.text);
      c.begin = tok.begin;
      c.end = tok.end;
      c.kind = CandidateKind::GenericPlural;
      c.head = low;
      out.push_back(std::move(c));
    }
  }

  std::sort(out.begin(), out.end(),
            [](const CandidateToken& a, const CandidateToken& b) {
              return a.begin < b.begin;
            });
  return out;
}

namespace {

struct PoolEntry {
  int candidate;
  int face;
  double overlap;
  bool fallback;
};

// Descending overlap; ties by smaller face bbox x, then candidate span
// start, then face index, so the greedy pass is fully deterministic.
bool pool_order(const std::vector<CandidateToken>& cands,
                const std::vector<FaceObservation>& faces, const PoolEntry& a,
                const PoolEntry& b) {
  if (a.overlap != b.overlap) return a.overlap > b.overlap;
  const double ax = faces[a.face].bbox.x, bx = faces[b.face].bbox.x;
  if (ax != bx) return ax < bx;
  if (cands[a.candidate].begin != cands[b.candidate].begin)
    return cands[a.candidate].begin < cands[b.candidate].begin;
  return a.face < b.face;
}

std::optional<AttentionMap> lookup_map(const AttentionSource& maps,
                                       const std::string& image_id,
                                       const CandidateToken& cand) {
  if (auto m = maps.lookup(image_id, cand.surface)) return m;
  if (cand.kind == CandidateKind::ExistingName) {
    if (cand.associated_name && *cand.associated_name != cand.surface)
      return maps.lookup(image_id, *cand.associated_name);
    return std::nullopt;
  }
  if (!cand.head.empty() && cand.head != cand.surface)
    return maps.lookup(image_id, cand.head);
  return std::nullopt;
}

}  // namespace

AssignResult assign_faces(const std::vector<CandidateToken>& candidates,
                          const std::vector<FaceObservation>& faces,
                          const std::string& image_id, int image_width,
                          int image_height, const AttentionSource& maps,
                          const MergeConfig& config) {
  AssignResult result;
  std::vector<PoolEntry> pool;

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const CandidateToken& cand = candidates[ci];
    auto map = lookup_map(maps, image_id, cand);

    if (!map && cand.kind == CandidateKind::ExistingName) {
      // Wrong-name correction without a map for the name itself: borrow any
      // available person-word map and ground by its strongest cell.
      std::optional<AttentionMap> borrowed;
      const std::vector<std::string> lex_words = config.lexicon.all_person_words();
      for (const std::string& word : maps.words_for(image_id)) {
        if (std::find(lex_words.begin(), lex_words.end(), word) == lex_words.end())
          continue;
        borrowed = maps.lookup(image_id, word);
        if (borrowed) break;
      }
      if (!borrowed) {
        result.trace.push_back("candidate '" + cand.surface +
                               "': no attention map available; skipped");
        continue;
      }
      std::size_t argmax = 0;
      for (std::size_t i = 1; i < borrowed->cells.size(); ++i)
        if (borrowed->cells[i] > borrowed->cells[argmax]) argmax = i;
      const int ar = static_cast<int>(argmax) / borrowed->cols;
      const int ac = static_cast<int>(argmax) % borrowed->cols;

      std::vector<int> order(faces.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (faces[a].bbox.x != faces[b].bbox.x) return faces[a].bbox.x < faces[b].bbox.x;
        if (faces[a].bbox.y != faces[b].bbox.y) return faces[a].bbox.y < faces[b].bbox.y;
        return a < b;
      });
      const ActivationMask mask = binarize(*borrowed, config.alpha);
      bool grounded = false;
      for (int fi : order) {
        const GridRect rect = bbox_to_grid(faces[fi].bbox, image_width,
                                           image_height, borrowed->rows,
                                           borrowed->cols);
        if (!rect.contains(ar, ac)) continue;
        const double ov = overlap_ratio(mask, rect, config.overlap_denominator);
        if (ov >= config.theta) {
          pool.push_back({static_cast<int>(ci), fi, ov, true});
          result.trace.push_back("candidate '" + cand.surface +
                                 "': grounded via map for '" + borrowed->word +
                                 "' (overlap " + format_score(ov) + ")");
          grounded = true;
        }
        break;  // only the face containing the argmax qualifies
      }
      if (!grounded)
        result.trace.push_back("candidate '" + cand.surface +
                               "': argmax fallback found no qualifying face; skipped");
      continue;
    }

    if (!map) {
      result.trace.push_back("candidate '" + cand.surface +
                             "': no attention map for word '" +
                             (cand.head.empty() ? cand.surface : cand.head) +
                             "'; skipped");
      continue;
    }

    const ActivationMask mask = binarize(*map, config.alpha);
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      const GridRect rect = bbox_to_grid(faces[fi].bbox, image_width,
                                         image_height, map->rows, map->cols);
      const double ov = overlap_ratio(mask, rect, config.overlap_denominator);
      if (ov >= config.theta)
        pool.push_back({static_cast<int>(ci), static_cast<int>(fi), ov, false});
    }
  }

  std::stable_sort(pool.begin(), pool.end(),
                   [&](const PoolEntry& a, const PoolEntry& b) {
                     return pool_order(candidates, faces, a, b);
                   });

  std::vector<int> capacity(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci)
    capacity[ci] = candidates[ci].kind == CandidateKind::NumeralGroup
                       ? candidates[ci].numeral.value_or(1)
                       : 1;
  std::vector<bool> face_used(faces.size(), false);
  std::set<std::string> name_used;

  for (const PoolEntry& e : pool) {
    if (capacity[e.candidate] <= 0 || face_used[e.face]) continue;
    const std::string& name = faces[e.face].identity.value();
    if (name_used.count(name)) continue;
    capacity[e.candidate]--;
    face_used[e.face] = true;
    name_used.insert(name);
    result.pairs.push_back({e.candidate, e.face, e.overlap, e.fallback});
  }
  return result;
}

namespace {

// Article token immediately before `begin` (only whitespace between),
// or nullopt. Returns the article's start offset.
std::optional<std::size_t> preceding_article(std::string_view caption,
                                             std::size_t begin) {
  std::size_t i = begin;
  while (i > 0 && std::isspace(static_cast<unsigned char>(caption[i - 1]))) --i;
  if (i == begin || i == 0) return std::nullopt;  // need whitespace + a word
  std::size_t end = i;
  while (i > 0 && is_word_char(caption[i - 1])) --i;
  if (i == end) return std::nullopt;
  const std::string word = lower(caption.substr(i, end - i));
  if (word == "a" || word == "an" || word == "the") return i;
  return std::nullopt;
}

std::string join_names(const std::vector<std::string>& names,
                       const std::string& sep, const std::string& last_sep) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += (i + 1 == names.size()) ? last_sep : sep;
    out += names[i];
  }
  return out;
}

}  // namespace

MergePlan apply_merge(std::string_view caption,
                      const std::vector<CandidateToken>& candidates,
                      const AssignResult& assignment,
                      const std::vector<FaceObservation>& faces,
                      const MergeConfig& config) {
  MergePlan plan;
  plan.trace = assignment.trace;
  plan.enhanced_caption = std::string(caption);

  std::vector<std::vector<std::pair<int, double>>> faces_of(candidates.size());
  for (const FaceAssignment& a : assignment.pairs)
    faces_of[a.candidate].push_back({a.face, a.overlap});

  // Complex routing is structural: it depends only on the caption and the
  // presence of identified faces, never on the overlap gate, so raising
  // theta can only remove substitutions.
  if (!faces.empty()) {
    for (const CandidateToken& cand : candidates) {
      std::string reason;
      if (cand.kind == CandidateKind::GenericPlural)
        reason = "bare plural '" + cand.surface + "' has no rewrite rule";
      else if (cand.kind != CandidateKind::ExistingName &&
               cand.end < caption.size() && caption[cand.end] == '\'')
        reason = "candidate '" + cand.surface + "' sits inside a possessive";
      if (!reason.empty()) {
        plan.complex = true;
        plan.substitutions.clear();
        plan.trace.push_back("complex case: " + reason +
                             "; caption left unchanged");
        return plan;
      }
    }
  }

  struct Edit {
    std::size_t begin, end;
    std::string replacement;
    Substitution sub;
    bool text_change;
  };
  std::vector<Edit> edits;

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    if (faces_of[ci].empty()) continue;
    const CandidateToken& cand = candidates[ci];

    // Names read left to right as the faces appear in the image.
    std::vector<std::pair<int, double>> ordered = faces_of[ci];
    std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
      const auto& fa = faces[a.first];
      const auto& fb = faces[b.first];
      if (fa.bbox.x != fb.bbox.x) return fa.bbox.x < fb.bbox.x;
      if (fa.bbox.y != fb.bbox.y) return fa.bbox.y < fb.bbox.y;
      return *fa.identity < *fb.identity;
    });
    std::vector<std::string> names;
    for (const auto& [fi, _] : ordered) names.push_back(*faces[fi].identity);

    Edit edit;
    edit.begin = cand.begin;
    edit.end = cand.end;
    edit.text_change = true;

    switch (cand.kind) {
      case CandidateKind::GenericSingular: {
        if (auto article = preceding_article(caption, cand.begin))
          edit.begin = *article;
        edit.replacement = names.front();
        edit.sub = {cand, names, "R1"};
        break;
      }
      case CandidateKind::ExistingName: {
        if (names.front() == cand.associated_name.value_or(cand.surface)) {
          plan.trace.push_back("existing name '" + cand.surface +
                               "' confirmed by face match");
          edit.text_change = false;
        } else {
          edit.replacement = names.front();
          edit.sub = {cand, names, "R2"};
        }
        break;
      }
      case CandidateKind::NumeralGroup: {
        const int n = cand.numeral.value_or(1);
        const int k = static_cast<int>(names.size());
        if (k == n) {
          edit.replacement = join_names(names, " and ", " and ");
        } else {
          const std::string plural = cand.head;
          const std::string singular =
              config.lexicon.singular_of_plural(plural).value_or(plural);
          const int remaining = n - k;
          std::string rest =
              remaining == 1
                  ? indefinite_article(singular) + " " + singular
                  : spell_number(remaining) + " " + plural;
          edit.replacement = join_names(names, ", ", " and ");
          edit.replacement += " and " + rest;
        }
        edit.sub = {cand, names, "R3"};
        break;
      }
      case CandidateKind::GenericPlural:
        // Unreachable: routed to the complex path above.
        edit.text_change = false;
        break;
    }

    if (edit.text_change) {
      for (const auto& [fi, overlap] : ordered) {
        plan.trace.push_back(
            edit.sub.rule + ": '" + cand.surface + "' <- '" +
            *faces[fi].identity + "' (overlap " + format_score(overlap) +
            ", similarity " + format_score(faces[fi].similarity.value_or(0)) +
            ")");
      }
      edits.push_back(std::move(edit));
    }
  }

  // Right-to-left so earlier spans stay valid while splicing.
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.begin > b.begin; });
  std::string text(caption);
  for (const Edit& e : edits)
    text.replace(e.begin, e.end - e.begin, e.replacement);
  plan.enhanced_caption = std::move(text);

  for (auto& e : edits) plan.substitutions.push_back(std::move(e.sub));
  std::sort(plan.substitutions.begin(), plan.substitutions.end(),
            [](const Substitution& a, const Substitution& b) {
              return a.candidate.begin < b.candidate.begin;
            });
  return plan;
}

MergePlan enhance(const ImageRecord& record, std::string_view base_caption,
                  const AttentionSource& maps, const MergeConfig& config,
                  const NameDictionary& dict) {
  try {
    std::vector<FaceObservation> identified;
    for (const auto& f : record.faces)
      if (f.identity && f.similarity &&
          *f.similarity >= config.similarity_threshold)
        identified.push_back(f);

    const auto candidates = detect_candidates(base_caption, config.lexicon, dict);
    const AssignResult assignment =
        assign_faces(candidates, identified, record.id, record.width,
                     record.height, maps, config);
    MergePlan plan =
        apply_merge(base_caption, candidates, assignment, identified, config);
    plan.image_id = record.id;
    return plan;
  } catch (const InputError& e) {
    throw InputError("image '" + record.id + "': " + e.what());
  }
}

}  // namespace capmerge
