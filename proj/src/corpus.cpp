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

#include "capmerge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace capmerge {

namespace {

using nlohmann::json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_open_punct(char c) {
  return c == '"' || c == '\'' || c == '(' || c == '[' || c == '{';
}

bool is_close_punct(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' ||
         c == ':' || is_close_punct(c);
}

// Whitespace-delimited tokens with their [begin, end) character spans.
struct Token {
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Token> ws_tokens(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    out.push_back({s.substr(i, j - i), i, j});
    i = j;
  }
  return out;
}

}  // namespace

void NameDictionary::validate() const {
  std::set<std::string> canon(names.begin(), names.end());
  if (canon.size() != names.size())
    throw InputError("name dictionary: duplicate canonical name");
  for (const auto& [alias, target] : aliases) {
    if (!canon.count(target))
      throw InputError("name dictionary: alias '" + alias +
                       "' maps to unknown canonical name '" + target + "'");
  }
}

std::vector<std::string> default_abbreviations() {
  return {"Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.",
          "Jr.", "Sr.", "U.S.", "Inc.", "vs."};
}

std::string split_first_sentence(std::string_view text,
                                 const SentenceSplitOptions& opts,
                                 bool* found_terminator) {
  const std::string_view s = trim(text);
  if (s.empty())
    throw InputError("split_first_sentence: text is empty after trimming");
  if (found_terminator) *found_terminator = true;

  std::unordered_set<std::string_view> abbrevs(opts.abbreviations.begin(),
                                               opts.abbreviations.end());

  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '?' && c != '!') continue;

    // Closing quotes/brackets belong to the sentence; the terminator must be
    // followed by whitespace or end of text.
    std::size_t j = i + 1;
    while (j < s.size() && is_close_punct(s[j])) ++j;
    if (j < s.size() && !is_space(s[j])) continue;

    if (c == '.') {
      std::size_t k = i;
      while (k > 0 && !is_space(s[k - 1])) --k;
      std::string_view token = s.substr(k, i - k + 1);
      while (!token.empty() && is_open_punct(token.front()))
        token.remove_prefix(1);
      if (abbrevs.count(token)) continue;
      if (opts.skip_initials && token.size() == 2 &&
          std::isupper(static_cast<unsigned char>(token[0])))
        continue;
    }
    return std::string(s.substr(0, j));
  }

  if (found_terminator) *found_terminator = false;
  return std::string(s);
}

namespace {

struct NamePattern {
  std::vector<std::string> tokens;  // whitespace-normalized surface tokens
  std::string canonical;
  std::size_t char_length = 0;
};

// Tries to match `pattern` starting at caption token `t`. Outer tokens may
// shed leading/trailing punctuation ("(Kelly," still matches "Kelly"); inner
// tokens must match exactly. On success fills the character span.
bool match_pattern_at(const std::vector<Token>& toks, std::size_t t,
                      const NamePattern& pattern, std::size_t* begin,
                      std::size_t* end) {
  if (t + pattern.tokens.size() > toks.size()) return false;
  std::size_t span_begin = 0, span_end = 0;
  for (std::size_t p = 0; p < pattern.tokens.size(); ++p) {
    const Token& tok = toks[t + p];
    const std::string& want = pattern.tokens[p];
    std::string_view got = tok.text;
    std::size_t b = tok.begin, e = tok.end;
    if (got != want) {
      if (p == 0) {
        while (!got.empty() && is_open_punct(got.front())) {
          got.remove_prefix(1);
          ++b;
        }
      }
      if (p + 1 == pattern.tokens.size()) {
        while (!got.empty() && is_trailing_punct(got.back())) {
          got.remove_suffix(1);
          --e;
        }
      }
      if (got != want) return false;
    }
    if (p == 0) span_begin = b;
    if (p + 1 == pattern.tokens.size()) span_end = e;
  }
  *begin = span_begin;
  *end = span_end;
  return true;
}

}  // namespace

std::vector<NameMatch> extract_names(std::string_view caption,
                                     const NameDictionary& dict) {
  std::vector<NamePattern> patterns;
  auto add_pattern = [&](const std::string& surface, const std::string& canonical) {
    NamePattern p;
    for (const Token& t : ws_tokens(surface)) p.tokens.emplace_back(t.text);
    if (p.tokens.empty()) return;
    p.canonical = canonical;
    for (const auto& t : p.tokens) p.char_length += t.size();
    patterns.push_back(std::move(p));
  };
  for (const auto& n : dict.names) add_pattern(n, n);
  for (const auto& [alias, canonical] : dict.aliases) add_pattern(alias, canonical);

  // Longest match wins: more tokens first, then more characters.
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const NamePattern& a, const NamePattern& b) {
                     if (a.tokens.size() != b.tokens.size())
                       return a.tokens.size() > b.tokens.size();
                     return a.char_length > b.char_length;
                   });

  const std::vector<Token> toks = ws_tokens(caption);
  std::vector<NameMatch> out;
  std::size_t t = 0;
  while (t < toks.size()) {
    bool matched = false;
    for (const NamePattern& p : patterns) {
      std::size_t b = 0, e = 0;
      if (match_pattern_at(toks, t, p, &b, &e)) {
        out.push_back({p.canonical, b, e});
        t += p.tokens.size();
        matched = true;
        break;
      }
    }
    if (!matched) ++t;
  }
  return out;
}

std::map<int, int> person_count_histogram(const std::vector<ImageRecord>& records) {
  std::map<int, int> hist;
  for (const auto& rec : records) {
    int identified = 0;
    for (const auto& f : rec.faces)
      if (f.identity) ++identified;
    ++hist[identified];
  }
  return hist;
}

namespace {

[[noreturn]] void record_error(const std::string& origin, std::size_t index,
                               const std::string& id, const std::string& what) {
  std::ostringstream os;
  os << origin << ": record #" << index;
  if (!id.empty()) os << " (id '" << id << "')";
  os << ": " << what;
  throw InputError(os.str());
}

BBox parse_bbox(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw InputError("bbox must be an array [x, y, w, h]");
  return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>()};
}

FaceObservation parse_face(const json& j) {
  FaceObservation f;
  f.bbox = parse_bbox(j.at("bbox"));
  if (j.contains("embedding") && !j["embedding"].is_null())
    f.embedding = j["embedding"].get<std::vector<double>>();
  if (j.contains("identity") && !j["identity"].is_null())
    f.identity = j["identity"].get<std::string>();
  if (j.contains("similarity") && !j["similarity"].is_null())
    f.similarity = j["similarity"].get<double>();
  return f;
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

void validate_record(const ImageRecord& rec) {
  if (rec.id.empty()) throw InputError("field 'id' is empty");
  if (rec.width <= 0) throw InputError("field 'width' must be positive");
  if (rec.height <= 0) throw InputError("field 'height' must be positive");
  for (std::size_t i = 0; i < rec.faces.size(); ++i) {
    const auto& f = rec.faces[i];
    const auto& b = f.bbox;
    if (b.w <= 0 || b.h <= 0)
      throw InputError("face #" + std::to_string(i) +
                       ": bbox width/height must be positive");
    if (b.x < 0 || b.y < 0 || b.x + b.w > rec.width || b.y + b.h > rec.height)
      throw InputError("face #" + std::to_string(i) +
                       ": bbox exceeds image bounds");
    if (f.identity && !f.similarity)
      throw InputError("face #" + std::to_string(i) +
                       ": identity present without similarity");
  }
}

std::vector<ImageRecord> parse_manifest(const std::string& text,
                                        const std::string& origin,
                                        const SentenceSplitOptions& split) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": line " +
                     std::to_string(line_of_offset(text, e.byte)) +
                     ": " + e.what());
  }
  if (!root.is_array())
    throw InputError(origin + ": manifest must be a top-level array of records");

  std::vector<ImageRecord> records;
  records.reserve(root.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& j = root[i];
    ImageRecord rec;
    std::string id = j.contains("id") && j["id"].is_string()
                         ? j["id"].get<std::string>()
                         : std::string();
    try {
      rec.id = j.at("id").get<std::string>();
      rec.width = j.at("width").get<int>();
      rec.height = j.at("height").get<int>();
      if (j.contains("description") && !j["description"].is_null())
        rec.description = j["description"].get<std::string>();
      if (j.contains("first_sentence") && !j["first_sentence"].is_null())
        rec.first_sentence = j["first_sentence"].get<std::string>();
      if (j.contains("synthetic_caption") && !j["synthetic_caption"].is_null())
        rec.synthetic_caption = j["synthetic_caption"].get<std::string>();
      if (j.contains("ground_truth_names") && !j["ground_truth_names"].is_null())
        rec.ground_truth_names =
            j["ground_truth_names"].get<std::vector<std::string>>();
      if (j.contains("faces") && !j["faces"].is_null())
        for (const json& fj : j["faces"]) rec.faces.push_back(parse_face(fj));
      validate_record(rec);
    } catch (const InputError& e) {
      record_error(origin, i, id, e.what());
    } catch (const json::exception& e) {
      record_error(origin, i, id, e.what());
    }
    if (!seen_ids.insert(rec.id).second)
      record_error(origin, i, rec.id, "duplicate id");
    if (!rec.first_sentence && !trim(rec.description).empty())
      rec.first_sentence = split_first_sentence(rec.description, split);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ImageRecord> load_manifest(const std::string& path,
                                       const SentenceSplitOptions& split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path, split);
}

}  // namespace capmerge
