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

#include "capmerge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

#include "capmerge/parallel.hpp"

namespace capmerge {

std::vector<std::string> metric_tokenize(std::string_view text,
                                         const TokenizerOptions& opts) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else if (std::isalnum(uc) || uc >= 0x80) {
      current.push_back(opts.lowercase
                            ? static_cast<char>(std::tolower(uc))
                            : c);
    } else if (!opts.strip_punctuation) {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

namespace {

using Counts = std::unordered_map<std::string, long long>;

// N-grams keyed by tokens joined with an unlikely separator byte.
std::string gram_key(const std::vector<std::string>& tokens, std::size_t start,
                     int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k > 0) key.push_back('\x1f');
    key += tokens[start + k];
  }
  return key;
}

Counts ngram_counts(const std::vector<std::string>& tokens, int n) {
  Counts counts;
  if (static_cast<int>(tokens.size()) >= n)
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
      ++counts[gram_key(tokens, i, n)];
  return counts;
}

int lcs_length(const std::vector<std::string>& a,
               const std::vector<std::string>& b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

}  // namespace

BleuResult bleu(const std::vector<ScoredPair>& pairs, int max_n, int jobs) {
  if (pairs.empty()) throw InputError("bleu: empty corpus");
  if (max_n < 1) throw InputError("bleu: max_n must be >= 1");

  struct PairStats {
    std::vector<long long> matched, total;
    long long cand_len = 0;
    long long ref_len = 0;
  };
  std::vector<PairStats> stats(pairs.size());

  parallel_for(static_cast<long long>(pairs.size()), jobs, [&](long long pi) {
    const ScoredPair& pair = pairs[static_cast<std::size_t>(pi)];
    PairStats st;
    st.matched.assign(max_n, 0);
    st.total.assign(max_n, 0);
    st.cand_len = static_cast<long long>(pair.candidate.size());

    // Closest reference length; ties go to the shorter reference.
    long long best_ref = 0, best_diff = -1;
    for (const auto& ref : pair.references) {
      const long long len = static_cast<long long>(ref.size());
      const long long diff = std::llabs(len - st.cand_len);
      if (best_diff < 0 || diff < best_diff ||
          (diff == best_diff && len < best_ref)) {
        best_diff = diff;
        best_ref = len;
      }
    }
    st.ref_len = best_ref;

    for (int n = 1; n <= max_n; ++n) {
      const Counts cand = ngram_counts(pair.candidate, n);
      long long total = st.cand_len - n + 1;
      st.total[n - 1] = std::max<long long>(total, 0);
      if (cand.empty()) continue;
      Counts clip;
      for (const auto& ref : pair.references)
        for (const auto& [gram, count] : ngram_counts(ref, n))
          clip[gram] = std::max(clip[gram], count);
      long long matched = 0;
      for (const auto& [gram, count] : cand) {
        auto it = clip.find(gram);
        if (it != clip.end()) matched += std::min(count, it->second);
      }
      st.matched[n - 1] = matched;
    }
    stats[static_cast<std::size_t>(pi)] = std::move(st);
  });

  BleuResult result;
  for (const auto& st : stats) {
    result.candidate_length += st.cand_len;
    result.reference_length += st.ref_len;
  }

  constexpr double kEpsilon = 1e-9;
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    long long num = 0, den = 0;
    for (const auto& st : stats) {
      num += st.matched[n - 1];
      den += st.total[n - 1];
    }
    double p;
    if (den > 0 && num > 0) {
      p = static_cast<double>(num) / static_cast<double>(den);
    } else {
      p = kEpsilon;
      result.warnings.push_back("bleu: zero " + std::to_string(n) +
                                "-gram precision, smoothed to 1e-9");
    }
    result.precisions.push_back(p);
    log_sum += std::log(p);
  }

  if (result.candidate_length == 0) {
    result.brevity_penalty = 0;
  } else if (result.candidate_length < result.reference_length) {
    result.brevity_penalty =
        std::exp(1.0 - static_cast<double>(result.reference_length) /
                           static_cast<double>(result.candidate_length));
  }
  result.score = result.brevity_penalty * std::exp(log_sum / max_n);
  return result;
}

double rouge_l(const std::vector<ScoredPair>& pairs,
               std::vector<double>* per_pair,
               std::vector<std::string>* warnings, int jobs) {
  if (pairs.empty()) throw InputError("rouge_l: empty corpus");
  std::vector<double> scores(pairs.size(), 0.0);
  std::vector<std::uint8_t> warn(pairs.size(), 0);

  parallel_for(static_cast<long long>(pairs.size()), jobs, [&](long long pi) {
    const ScoredPair& pair = pairs[static_cast<std::size_t>(pi)];
    double best = 0;
    for (const auto& ref : pair.references) {
      if (pair.candidate.empty() && ref.empty()) {
        warn[static_cast<std::size_t>(pi)] = 1;
        continue;
      }
      if (pair.candidate.empty() || ref.empty()) continue;
      const double lcs = lcs_length(pair.candidate, ref);
      if (lcs == 0) continue;
      const double p = lcs / static_cast<double>(pair.candidate.size());
      const double r = lcs / static_cast<double>(ref.size());
      best = std::max(best, 2 * p * r / (p + r));
    }
    scores[static_cast<std::size_t>(pi)] = best;
  });

  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += scores[i];
    if (warn[i] && warnings)
      warnings->push_back("rouge_l: pair #" + std::to_string(i) +
                          " has empty candidate and reference; scored 0");
  }
  if (per_pair) *per_pair = scores;
  return sum / static_cast<double>(scores.size());
}

namespace {

constexpr int kCiderMaxN = 4;
constexpr double kCiderSigma = 6.0;

}  // namespace

double cider(const std::vector<ScoredPair>& pairs,
             std::vector<double>* per_pair, int jobs) {
  const std::size_t n_pairs = pairs.size();
  if (n_pairs < 2)
    throw InputError(
        "cider: needs at least 2 pairs so IDF is defined; got " +
        std::to_string(n_pairs) + " (score a larger corpus)");

  // Phase 1: document frequencies over the reference sets.
  std::vector<Counts> df(kCiderMaxN);
  for (const ScoredPair& pair : pairs) {
    for (int n = 1; n <= kCiderMaxN; ++n) {
      std::unordered_set<std::string> grams;
      for (const auto& ref : pair.references)
        for (const auto& [gram, _] : ngram_counts(ref, n)) grams.insert(gram);
      for (const auto& gram : grams) ++df[n - 1][gram];
    }
  }
  const double log_n = std::log(static_cast<double>(n_pairs));

  auto weighted = [&](const Counts& tf, int n) {
    std::unordered_map<std::string, double> vec;
    double norm_sq = 0;
    for (const auto& [gram, count] : tf) {
      auto it = df[n - 1].find(gram);
      const double d = it == df[n - 1].end() ? 1.0
                                             : std::max<double>(it->second, 1.0);
      const double w = static_cast<double>(count) * (log_n - std::log(d));
      vec[gram] = w;
      norm_sq += w * w;
    }
    return std::make_pair(std::move(vec), std::sqrt(norm_sq));
  };

  // Phase 2: pure per-pair scoring.
  std::vector<double> scores(n_pairs, 0.0);
  parallel_for(static_cast<long long>(n_pairs), jobs, [&](long long pi) {
    const ScoredPair& pair = pairs[static_cast<std::size_t>(pi)];
    const double cand_len = static_cast<double>(pair.candidate.size());
    double sum_over_n = 0;
    for (int n = 1; n <= kCiderMaxN; ++n) {
      auto [cand_vec, cand_norm] = weighted(ngram_counts(pair.candidate, n), n);
      double sum_over_refs = 0;
      for (const auto& ref : pair.references) {
        auto [ref_vec, ref_norm] = weighted(ngram_counts(ref, n), n);
        double cos = 0;
        if (cand_norm > 0 && ref_norm > 0) {
          double dot = 0;
          for (const auto& [gram, w] : cand_vec) {
            auto it = ref_vec.find(gram);
            if (it != ref_vec.end()) dot += w * it->second;
          }
          cos = dot / (cand_norm * ref_norm);
        }
        const double delta = cand_len - static_cast<double>(ref.size());
        sum_over_refs +=
            cos * std::exp(-(delta * delta) / (2 * kCiderSigma * kCiderSigma));
      }
      sum_over_n += sum_over_refs / static_cast<double>(pair.references.size());
    }
    scores[static_cast<std::size_t>(pi)] = 10.0 * sum_over_n / kCiderMaxN;
  });

  double sum = 0;
  for (double s : scores) sum += s;
  if (per_pair) *per_pair = scores;
  return sum / static_cast<double>(n_pairs);
}

namespace {

struct UnigramMatch {
  int cand;
  int ref;
};

// Greedy accumulation of longest aligned runs. Each stage runs to
// exhaustion, so the total match count per stage is maximal; preferring
// long runs keeps the chunk count small.
void align_stage(const std::vector<std::string>& cand,
                 const std::vector<std::string>& ref,
                 std::vector<bool>& cand_used, std::vector<bool>& ref_used,
                 std::vector<UnigramMatch>& matches) {
  const int m = static_cast<int>(cand.size());
  const int n = static_cast<int>(ref.size());
  while (true) {
    int best_len = 0, best_i = 0, best_j = 0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        int len = 0;
        while (i + len < m && j + len < n && !cand_used[i + len] &&
               !ref_used[j + len] && cand[i + len] == ref[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) return;
    for (int k = 0; k < best_len; ++k) {
      cand_used[best_i + k] = true;
      ref_used[best_j + k] = true;
      matches.push_back({best_i + k, best_j + k});
    }
  }
}

double meteor_pair(const std::vector<std::string>& cand,
                   const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0;

  std::vector<bool> cand_used(cand.size(), false), ref_used(ref.size(), false);
  std::vector<UnigramMatch> matches;
  align_stage(cand, ref, cand_used, ref_used, matches);

  std::vector<std::string> cand_stems(cand.size()), ref_stems(ref.size());
  for (std::size_t i = 0; i < cand.size(); ++i) cand_stems[i] = porter_stem(cand[i]);
  for (std::size_t j = 0; j < ref.size(); ++j) ref_stems[j] = porter_stem(ref[j]);
  align_stage(cand_stems, ref_stems, cand_used, ref_used, matches);

  const double m = static_cast<double>(matches.size());
  if (m == 0) return 0;

  std::sort(matches.begin(), matches.end(),
            [](const UnigramMatch& a, const UnigramMatch& b) {
              return a.cand < b.cand;
            });
  int chunks = 0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (k == 0 || matches[k].cand != matches[k - 1].cand + 1 ||
        matches[k].ref != matches[k - 1].ref + 1)
      ++chunks;
  }

  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10 * p * r / (r + 9 * p);
  const double frag = static_cast<double>(chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

}  // namespace

double meteor(const std::vector<ScoredPair>& pairs,
              std::vector<double>* per_pair, int jobs) {
  if (pairs.empty()) throw InputError("meteor: empty corpus");
  std::vector<double> scores(pairs.size(), 0.0);
  parallel_for(static_cast<long long>(pairs.size()), jobs, [&](long long pi) {
    const ScoredPair& pair = pairs[static_cast<std::size_t>(pi)];
    double best = 0;
    for (const auto& ref : pair.references)
      best = std::max(best, meteor_pair(pair.candidate, ref));
    scores[static_cast<std::size_t>(pi)] = best;
  });
  double sum = 0;
  for (double s : scores) sum += s;
  if (per_pair) *per_pair = scores;
  return sum / static_cast<double>(scores.size());
}

double relative_improvement(double before, double after) {
  if (!(before > 0))
    throw InputError("relative_improvement: 'before' must be positive");
  return 100.0 * (after - before) / before;
}

}  // namespace capmerge
