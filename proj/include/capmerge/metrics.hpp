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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capmerge/types.hpp"

namespace capmerge {

struct TokenizerOptions {
  bool lowercase = true;
  bool strip_punctuation = true;
};

/// Shared metric tokenizer: lowercase, drop punctuation characters, split on
/// whitespace.
std::vector<std::string> metric_tokenize(std::string_view text,
                                         const TokenizerOptions& opts = {});

/// Porter suffix-stripping stemmer ("running" -> "run").
std::string porter_stem(std::string_view word);

struct ScoredPair {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;  // at least one
};

struct BleuResult {
  double score = 0;                 // in [0,1]
  std::vector<double> precisions;   // clipped p_n, n = 1..max_n
  double brevity_penalty = 1;
  long long candidate_length = 0;
  long long reference_length = 0;   // closest-reference total
  std::vector<std::string> warnings;
};

/// Corpus BLEU: clipped n-gram precisions pooled over the corpus, uniform
/// geometric mean, brevity penalty exp(1 - r/c) when c < r. A zero p_n is
/// replaced by epsilon = 1e-9 with a warning.
BleuResult bleu(const std::vector<ScoredPair>& pairs, int max_n = 4,
                int jobs = 1);

/// Corpus ROUGE-L: per pair the best LCS F-measure over the references
/// (P = LCS/|cand|, R = LCS/|ref|, F = 2PR/(P+R)), averaged over pairs.
double rouge_l(const std::vector<ScoredPair>& pairs,
               std::vector<double>* per_pair = nullptr,
               std::vector<std::string>* warnings = nullptr, int jobs = 1);

/// Corpus CIDEr: per n in 1..4, TF-IDF n-gram vectors (IDF over the
/// reference sets), cosine similarity against each reference scaled by the
/// length penalty exp(-(|c|-|r|)^2 / (2*sigma^2)), sigma = 6, averaged over
/// references; pair score is 10 x the mean over n. Needs >= 2 pairs.
double cider(const std::vector<ScoredPair>& pairs,
             std::vector<double>* per_pair = nullptr, int jobs = 1);

/// METEOR variant: two-stage unigram alignment (exact, then Porter stems),
/// maximal matching assembled from longest runs, Fmean = 10PR/(R+9P) and
/// chunk penalty 0.5*(chunks/matches)^3; best reference per pair, corpus
/// mean.
double meteor(const std::vector<ScoredPair>& pairs,
              std::vector<double>* per_pair = nullptr, int jobs = 1);

/// 100 * (after - before) / before. Throws InputError when before <= 0.
double relative_improvement(double before, double after);

struct CorpusScores {
  std::optional<double> bleu;
  std::optional<double> rouge_l;
  std::optional<double> cider;
  std::optional<double> meteor;
  std::size_t counts = 0;
};

}  // namespace capmerge
