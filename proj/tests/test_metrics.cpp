#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "capmerge/metrics.hpp"
#include "doctest.h"

using namespace capmerge;

namespace {

std::vector<std::string> toks(const std::string& text) {
  return metric_tokenize(text);
}

std::vector<std::string> random_sentence(std::mt19937& rng, int max_len,
                                         int vocab = 10) {
  const int len = 1 + static_cast<int>(rng() % max_len);
  std::vector<std::string> out;
  for (int i = 0; i < len; ++i)
    out.push_back(std::string(1, static_cast<char>('a' + rng() % vocab)));
  return out;
}

std::vector<ScoredPair> random_corpus(std::mt19937& rng, int pairs,
                                      int max_len = 8) {
  std::vector<ScoredPair> out;
  for (int i = 0; i < pairs; ++i) {
    ScoredPair p;
    p.candidate = random_sentence(rng, max_len);
    const int refs = 1 + static_cast<int>(rng() % 2);
    for (int r = 0; r < refs; ++r)
      p.references.push_back(random_sentence(rng, max_len));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("metric_tokenize lowercases, strips punctuation, splits on space") {
  CHECK(metric_tokenize("A man, in an Orange suit!") ==
        std::vector<std::string>{"a", "man", "in", "an", "orange", "suit"});
  CHECK(metric_tokenize("  ") == std::vector<std::string>{});
  TokenizerOptions keep;
  keep.lowercase = false;
  keep.strip_punctuation = false;
  CHECK(metric_tokenize("A man,", keep) == std::vector<std::string>{"A", "man,"});
}

TEST_CASE("porter stemmer handles the classic suffix families") {
  CHECK(porter_stem("running") == "run");
  CHECK(porter_stem("runs") == "run");
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("ponies") == "poni");
  CHECK(porter_stem("relational") == "relat");
  CHECK(porter_stem("conditional") == "condit");
  CHECK(porter_stem("happy") == "happi");
  CHECK(porter_stem("agreed") == "agre");
  CHECK(porter_stem("feed") == "feed");
  CHECK(porter_stem("filing") == "file");
  CHECK(porter_stem("hopefulness") == "hope");
  CHECK(porter_stem("sky") == "sky");
}

TEST_CASE("bleu scores identical candidate and reference 1.0") {
  std::vector<ScoredPair> pairs = {{toks("an astronaut waves from orbit"),
                                    {toks("an astronaut waves from orbit")}}};
  const BleuResult r = bleu(pairs);
  CHECK(r.score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.brevity_penalty == 1.0);
  CHECK(r.warnings.empty());
}

TEST_CASE("bleu clips repeated candidate n-grams") {
  // clip("the") = 1 over a 4-token candidate: p1 = 1/4.
  std::vector<ScoredPair> pairs = {{toks("the the the the"), {toks("the cat")}}};
  const BleuResult r = bleu(pairs);
  REQUIRE(r.precisions.size() == 4);
  CHECK(r.precisions[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(r.warnings.empty());  // higher orders smoothed to epsilon
}

TEST_CASE("bleu matches an independent counting oracle") {
  std::mt19937 rng(42);
  for (int iter = 0; iter < 50; ++iter) {
    const auto pairs = random_corpus(rng, 2 + static_cast<int>(rng() % 5));

    // Straight-from-the-formula recomputation with a different counting
    // scheme (token-vector keys instead of joined strings).
    const int max_n = 4;
    double log_sum = 0;
    long long c_total = 0, r_total = 0;
    std::vector<double> precisions;
    for (int n = 1; n <= max_n; ++n) {
      long long num = 0, den = 0;
      for (const auto& pair : pairs) {
        std::map<std::vector<std::string>, long long> cand, clip;
        const auto& c = pair.candidate;
        for (std::size_t i = 0; i + n <= c.size(); ++i)
          ++cand[std::vector<std::string>(c.begin() + i, c.begin() + i + n)];
        for (const auto& ref : pair.references) {
          std::map<std::vector<std::string>, long long> rc;
          for (std::size_t i = 0; i + n <= ref.size(); ++i)
            ++rc[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
          for (const auto& [g, cnt] : rc) clip[g] = std::max(clip[g], cnt);
        }
        for (const auto& [g, cnt] : cand) {
          auto it = clip.find(g);
          if (it != clip.end()) num += std::min(cnt, it->second);
          den += cnt;
        }
      }
      const double p = (den > 0 && num > 0)
                           ? static_cast<double>(num) / static_cast<double>(den)
                           : 1e-9;
      precisions.push_back(p);
      log_sum += std::log(p);
    }
    for (const auto& pair : pairs) {
      c_total += static_cast<long long>(pair.candidate.size());
      long long best = 0, best_diff = -1;
      for (const auto& ref : pair.references) {
        const long long len = static_cast<long long>(ref.size());
        const long long diff =
            std::llabs(len - static_cast<long long>(pair.candidate.size()));
        if (best_diff < 0 || diff < best_diff || (diff == best_diff && len < best)) {
          best_diff = diff;
          best = len;
        }
      }
      r_total += best;
    }
    double bp = 1;
    if (c_total == 0) bp = 0;
    else if (c_total < r_total)
      bp = std::exp(1.0 - static_cast<double>(r_total) / static_cast<double>(c_total));
    const double expected = bp * std::exp(log_sum / max_n);

    const BleuResult got = bleu(pairs);
    CHECK(got.score == doctest::Approx(expected).epsilon(1e-12));
    for (int n = 0; n < max_n; ++n)
      CHECK(got.precisions[n] == doctest::Approx(precisions[n]).epsilon(1e-12));
  }
}

TEST_CASE("bleu treats an empty candidate as zero-length") {
  std::vector<ScoredPair> pairs = {{{}, {toks("a cat")}},
                                   {toks("a cat"), {toks("a cat")}}};
  const BleuResult r = bleu(pairs);
  CHECK(r.candidate_length == 2);
  CHECK(r.reference_length == 4);
  CHECK(r.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)));
}

TEST_CASE("rouge_l trivial cases") {
  std::vector<ScoredPair> same = {{toks("a b c"), {toks("a b c")}}};
  CHECK(rouge_l(same) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<ScoredPair> disjoint = {{toks("a b c"), {toks("x y z")}}};
  CHECK(rouge_l(disjoint) == 0.0);
}

TEST_CASE("rouge_l scores empty-empty pairs 0 with a warning") {
  std::vector<ScoredPair> pairs = {{{}, {{}}}};
  std::vector<std::string> warnings;
  CHECK(rouge_l(pairs, nullptr, &warnings) == 0.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("rouge_l LCS equals exhaustive subsequence enumeration") {
  std::mt19937 rng(1234);
  auto is_subsequence = [](const std::vector<std::string>& sub,
                           const std::vector<std::string>& seq) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i)
      if (seq[i] == sub[j]) ++j;
    return j == sub.size();
  };
  for (int iter = 0; iter < 200; ++iter) {
    const auto cand = random_sentence(rng, 10, 4);
    const auto ref = random_sentence(rng, 10, 4);

    // Brute force: every subset of candidate positions, longest one that is
    // a subsequence of the reference.
    int best = 0;
    const int n = static_cast<int>(cand.size());
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<std::string> sub;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) sub.push_back(cand[i]);
      if (is_subsequence(sub, ref))
        best = std::max(best, static_cast<int>(sub.size()));
    }
    const double lcs = best;
    double expected = 0;
    if (lcs > 0) {
      const double p = lcs / static_cast<double>(cand.size());
      const double r = lcs / static_cast<double>(ref.size());
      expected = 2 * p * r / (p + r);
    }
    std::vector<ScoredPair> pairs = {{cand, {ref}}};
    CHECK(rouge_l(pairs) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adding a reference never decreases rouge_l or meteor") {
  std::mt19937 rng(4321);
  for (int iter = 0; iter < 100; ++iter) {
    ScoredPair pair;
    pair.candidate = random_sentence(rng, 8);
    pair.references = {random_sentence(rng, 8)};
    std::vector<ScoredPair> one = {pair};
    pair.references.push_back(random_sentence(rng, 8));
    std::vector<ScoredPair> two = {pair};
    CHECK(rouge_l(two) >= rouge_l(one) - 1e-15);
    CHECK(meteor(two) >= meteor(one) - 1e-15);
  }
}

TEST_CASE("cider scores an identical pair 10.0 in a disjoint corpus") {
  std::vector<ScoredPair> pairs = {
      {toks("a b c d e"), {toks("a b c d e")}},
      {toks("v w x y z"), {toks("p q r s t")}},
  };
  std::vector<double> per_pair;
  cider(pairs, &per_pair);
  REQUIRE(per_pair.size() == 2);
  CHECK(per_pair[0] == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("cider scores zero without shared n-grams") {
  std::vector<ScoredPair> pairs = {
      {toks("a b c"), {toks("x y z")}},
      {toks("p q r"), {toks("k l m")}},
  };
  std::vector<double> per_pair;
  cider(pairs, &per_pair);
  CHECK(per_pair[0] == 0.0);
  CHECK(per_pair[1] == 0.0);
}

TEST_CASE("cider refuses a single-pair corpus") {
  std::vector<ScoredPair> pairs = {{toks("a"), {toks("a")}}};
  CHECK_THROWS_WITH_AS(cider(pairs), doctest::Contains("IDF"), InputError);
}

TEST_CASE("cider matches a straight-from-the-formula oracle") {
  std::mt19937 rng(2024);
  for (int iter = 0; iter < 20; ++iter) {
    const auto pairs = random_corpus(rng, 5, 7);
    const double sigma = 6.0;
    const double log_n = std::log(5.0);

    // Dense recomputation over an enumerated vocabulary.
    auto grams_of = [](const std::vector<std::string>& s, int n) {
      std::vector<std::vector<std::string>> out;
      for (std::size_t i = 0; i + n <= s.size(); ++i)
        out.emplace_back(s.begin() + i, s.begin() + i + n);
      return out;
    };
    double corpus = 0;
    std::vector<double> expected_pairs;
    for (const auto& pair : pairs) {
      double sum_n = 0;
      for (int n = 1; n <= 4; ++n) {
        std::map<std::vector<std::string>, double> df;
        for (const auto& other : pairs) {
          std::map<std::vector<std::string>, bool> seen;
          for (const auto& ref : other.references)
            for (const auto& g : grams_of(ref, n)) seen[g] = true;
          for (const auto& [g, _] : seen) df[g] += 1;
        }
        auto weight_vec = [&](const std::vector<std::string>& sent) {
          std::map<std::vector<std::string>, double> tf;
          for (const auto& g : grams_of(sent, n)) tf[g] += 1;
          std::map<std::vector<std::string>, double> w;
          for (const auto& [g, cnt] : tf) {
            const double d = df.count(g) ? std::max(df.at(g), 1.0) : 1.0;
            w[g] = cnt * (log_n - std::log(d));
          }
          return w;
        };
        const auto cv = weight_vec(pair.candidate);
        double cnorm = 0;
        for (const auto& [g, w] : cv) cnorm += w * w;
        cnorm = std::sqrt(cnorm);
        double ref_sum = 0;
        for (const auto& ref : pair.references) {
          const auto rv = weight_vec(ref);
          double rnorm = 0, dot = 0;
          for (const auto& [g, w] : rv) rnorm += w * w;
          rnorm = std::sqrt(rnorm);
          for (const auto& [g, w] : cv)
            if (rv.count(g)) dot += w * rv.at(g);
          double cos = (cnorm > 0 && rnorm > 0) ? dot / (cnorm * rnorm) : 0.0;
          const double delta = static_cast<double>(pair.candidate.size()) -
                               static_cast<double>(ref.size());
          ref_sum += cos * std::exp(-delta * delta / (2 * sigma * sigma));
        }
        sum_n += ref_sum / static_cast<double>(pair.references.size());
      }
      expected_pairs.push_back(10.0 * sum_n / 4.0);
      corpus += expected_pairs.back();
    }
    corpus /= 5.0;

    std::vector<double> got_pairs;
    const double got = cider(pairs, &got_pairs);
    CHECK(got == doctest::Approx(corpus).epsilon(1e-9));
    for (int i = 0; i < 5; ++i)
      CHECK(got_pairs[i] == doctest::Approx(expected_pairs[i]).epsilon(1e-9));
  }
}

TEST_CASE("meteor scores identical four-token sentences 0.9921875") {
  std::vector<ScoredPair> pairs = {
      {toks("a man in orbit"), {toks("a man in orbit")}}};
  CHECK(meteor(pairs) == doctest::Approx(0.9921875).epsilon(1e-12));
}

TEST_CASE("meteor scores disjoint sentences 0") {
  std::vector<ScoredPair> pairs = {{toks("a b c"), {toks("x y z")}}};
  CHECK(meteor(pairs) == 0.0);
}

TEST_CASE("meteor counts stem matches in the second stage") {
  // One match over one-token sentences: Fmean = 1, one chunk,
  // penalty = 0.5 * (1/1)^3, score = 0.5.
  std::vector<ScoredPair> pairs = {{toks("running"), {toks("runs")}}};
  CHECK(meteor(pairs) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("meteor prefers fewer chunks for reordered matches") {
  std::vector<ScoredPair> in_order = {{toks("a b c d"), {toks("a b c d")}}};
  std::vector<ScoredPair> scrambled = {{toks("c d a b"), {toks("a b c d")}}};
  CHECK(meteor(scrambled) < meteor(in_order));
  CHECK(meteor(scrambled) > 0.0);
}

TEST_CASE("relative improvement reproduces the published arithmetic") {
  CHECK(relative_improvement(0.48, 0.90) == doctest::Approx(87.5).epsilon(1e-12));
  CHECK(std::round(relative_improvement(0.46, 0.62) * 10) / 10 == 34.8);
  CHECK(relative_improvement(1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(relative_improvement(0.0, 1.0), InputError);
  CHECK_THROWS_AS(relative_improvement(-0.5, 1.0), InputError);
}

TEST_CASE("metrics are invariant under corpus permutation") {
  std::mt19937 rng(9);
  auto pairs = random_corpus(rng, 6);
  const double b1 = bleu(pairs).score;
  const double r1 = rouge_l(pairs);
  const double c1 = cider(pairs);
  const double m1 = meteor(pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  CHECK(bleu(pairs).score == doctest::Approx(b1).epsilon(1e-12));
  CHECK(rouge_l(pairs) == doctest::Approx(r1).epsilon(1e-12));
  CHECK(cider(pairs) == doctest::Approx(c1).epsilon(1e-12));
  CHECK(meteor(pairs) == doctest::Approx(m1).epsilon(1e-12));
}

TEST_CASE("metric results do not depend on the jobs count") {
  std::mt19937 rng(31);
  const auto pairs = random_corpus(rng, 12);
  CHECK(bleu(pairs, 4, 1).score == bleu(pairs, 4, 4).score);
  CHECK(rouge_l(pairs, nullptr, nullptr, 1) == rouge_l(pairs, nullptr, nullptr, 4));
  CHECK(cider(pairs, nullptr, 1) == cider(pairs, nullptr, 4));
  CHECK(meteor(pairs, nullptr, 1) == meteor(pairs, nullptr, 4));
}

TEST_CASE("corpus-level scores stay in their documented ranges") {
  std::mt19937 rng(77);
  for (int iter = 0; iter < 30; ++iter) {
    const auto pairs = random_corpus(rng, 4);
    const double b = bleu(pairs).score;
    const double r = rouge_l(pairs);
    const double c = cider(pairs);
    const double m = meteor(pairs);
    CHECK(b >= 0);
    CHECK(b <= 1);
    CHECK(r >= 0);
    CHECK(r <= 1);
    CHECK(c >= 0);
    CHECK(c <= 10);
    CHECK(m >= 0);
    CHECK(m <= 1);
  }
}
