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

// Porter stemmer (Porter, 1980). Operates on lowercase ASCII words; anything
// shorter than three letters is returned unchanged.

#include <cctype>
#include <string>
#include <string_view>

#include "capmerge/metrics.hpp"

namespace capmerge {

namespace {

class PorterStemmer {
 public:
  explicit PorterStemmer(std::string word) : w_(std::move(word)) {}

  std::string run() {
    if (w_.size() <= 2) return w_;
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return w_;
  }

 private:
  std::string w_;

  bool is_consonant(std::size_t i) const {
    switch (w_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !is_consonant(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in w_[0..len).
  int measure(std::size_t len) const {
    int m = 0;
    std::size_t i = 0;
    while (i < len && is_consonant(i)) ++i;
    while (i < len) {
      while (i < len && !is_consonant(i)) ++i;
      if (i >= len) break;
      ++m;
      while (i < len && is_consonant(i)) ++i;
    }
    return m;
  }

  bool has_vowel(std::size_t len) const {
    for (std::size_t i = 0; i < len; ++i)
      if (!is_consonant(i)) return true;
    return false;
  }

  bool double_consonant() const {
    const std::size_t n = w_.size();
    return n >= 2 && w_[n - 1] == w_[n - 2] && is_consonant(n - 1);
  }

  // consonant-vowel-consonant at the end, final consonant not w, x or y.
  bool cvc(std::size_t len) const {
    if (len < 3) return false;
    if (!is_consonant(len - 3) || is_consonant(len - 2) || !is_consonant(len - 1))
      return false;
    const char c = w_[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends(std::string_view suffix) const {
    return w_.size() >= suffix.size() &&
           std::string_view(w_).substr(w_.size() - suffix.size()) == suffix;
  }

  std::size_t stem_len(std::string_view suffix) const {
    return w_.size() - suffix.size();
  }

  void set_suffix(std::string_view suffix, std::string_view replacement) {
    w_.replace(w_.size() - suffix.size(), suffix.size(), replacement);
  }

  // Replaces suffix when the remaining stem has measure > min_m.
  bool replace_if(std::string_view suffix, std::string_view replacement, int min_m) {
    if (!ends(suffix)) return false;
    if (measure(stem_len(suffix)) > min_m) set_suffix(suffix, replacement);
    return true;
  }

  void step1a() {
    if (ends("sses")) set_suffix("sses", "ss");
    else if (ends("ies")) set_suffix("ies", "i");
    else if (ends("ss")) { /* keep */ }
    else if (ends("s")) set_suffix("s", "");
  }

  void step1b() {
    if (ends("eed")) {
      if (measure(stem_len("eed")) > 0) set_suffix("eed", "ee");
      return;
    }
    bool stripped = false;
    if (ends("ed") && has_vowel(stem_len("ed"))) {
      set_suffix("ed", "");
      stripped = true;
    } else if (ends("ing") && has_vowel(stem_len("ing"))) {
      set_suffix("ing", "");
      stripped = true;
    }
    if (!stripped) return;
    if (ends("at")) set_suffix("at", "ate");
    else if (ends("bl")) set_suffix("bl", "ble");
    else if (ends("iz")) set_suffix("iz", "ize");
    else if (double_consonant()) {
      const char c = w_.back();
      if (c != 'l' && c != 's' && c != 'z') w_.pop_back();
    } else if (measure(w_.size()) == 1 && cvc(w_.size())) {
      w_.push_back('e');
    }
  }

  void step1c() {
    if (ends("y") && has_vowel(stem_len("y"))) w_.back() = 'i';
  }

  void step2() {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
        {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
        {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
        {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
        {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
        {"iviti", "ive"},   {"biliti", "ble"}};
    for (const auto& [suffix, replacement] : rules)
      if (replace_if(suffix, replacement, 0)) return;
  }

  void step3() {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"icate", "ic"}, {"ative", ""},  {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},    {"ness", ""}};
    for (const auto& [suffix, replacement] : rules)
      if (replace_if(suffix, replacement, 0)) return;
  }

  void step4() {
    static const std::string_view suffixes[] = {
        "al",  "ance", "ence", "er",   "ic",  "able", "ible", "ant", "ement",
        "ment", "ent",  "ion",  "ou",   "ism", "ate",  "iti",  "ous", "ive",
        "ize"};
    for (std::string_view suffix : suffixes) {
      if (!ends(suffix)) continue;
      const std::size_t len = stem_len(suffix);
      if (measure(len) <= 1) return;
      if (suffix == "ion" && len > 0 && w_[len - 1] != 's' && w_[len - 1] != 't')
        return;
      set_suffix(suffix, "");
      return;
    }
  }

  void step5a() {
    if (!ends("e")) return;
    const std::size_t len = stem_len("e");
    const int m = measure(len);
    if (m > 1 || (m == 1 && !cvc(len))) set_suffix("e", "");
  }

  void step5b() {
    if (w_.size() >= 2 && w_.back() == 'l' && double_consonant() &&
        measure(w_.size()) > 1)
      w_.pop_back();
  }
};

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string lower;
  lower.reserve(word.size());
  for (char c : word)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return PorterStemmer(std::move(lower)).run();
}

}  // namespace capmerge
