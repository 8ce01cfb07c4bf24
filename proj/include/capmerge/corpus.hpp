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
#include <string>
#include <string_view>
#include <vector>

#include "capmerge/types.hpp"

namespace capmerge {

/// Known person names. Canonical forms are unique; aliases map alternative
/// spellings onto a canonical form. Matching is case-sensitive and
/// whitespace-normalized.
struct NameDictionary {
  std::vector<std::string> names;              // canonical forms
  std::map<std::string, std::string> aliases;  // alias -> canonical

  // Throws InputError if a canonical form repeats or an alias points outside
  // the canonical set.
  void validate() const;
};

// {Dr., Mr., Mrs., Ms., Prof., St., Jr., Sr., U.S., Inc., vs.}
std::vector<std::string> default_abbreviations();

struct SentenceSplitOptions {
  std::vector<std::string> abbreviations = default_abbreviations();
  // When set, a single capital letter followed by a period ("E.") does not
  // end a sentence.
  bool skip_initials = true;
};

/// First sentence of `text` after whitespace trimming: the prefix up to and
/// including the first '.', '?' or '!' that ends a token which is neither a
/// listed abbreviation nor (optionally) a single-letter initial.
///
/// When no terminator exists the whole trimmed text is returned and
/// `*found_terminator`, if given, is set to false.
std::string split_first_sentence(std::string_view text,
                                 const SentenceSplitOptions& opts = {},
                                 bool* found_terminator = nullptr);

struct NameMatch {
  std::string name;       // canonical form (aliases are resolved)
  std::size_t begin = 0;  // character span [begin, end) in the caption
  std::size_t end = 0;
};

/// All maximal, non-overlapping occurrences of dictionary names or aliases in
/// `caption`, longest match first, scanning left to right. Spans never
/// overlap and are sorted by start offset.
std::vector<NameMatch> extract_names(std::string_view caption,
                                     const NameDictionary& dict);

/// Bucket k holds the number of images with exactly k identified faces.
std::map<int, int> person_count_histogram(const std::vector<ImageRecord>& records);

void validate_record(const ImageRecord& rec);

/// Parses and validates a JSON manifest (top-level array of records). Missing
/// `first_sentence` fields are filled by splitting the description with the
/// given options. Record order is preserved.
std::vector<ImageRecord> parse_manifest(const std::string& text,
                                        const std::string& origin,
                                        const SentenceSplitOptions& split = {});

std::vector<ImageRecord> load_manifest(const std::string& path,
                                       const SentenceSplitOptions& split = {});

}  // namespace capmerge
