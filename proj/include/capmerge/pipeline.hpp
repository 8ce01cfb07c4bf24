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

#include "capmerge/corpus.hpp"
#include "capmerge/identity.hpp"
#include "capmerge/merge.hpp"
#include "capmerge/metrics.hpp"
#include "capmerge/saliency.hpp"
#include "capmerge/types.hpp"

namespace capmerge {

struct RunPaths {
  std::string manifest;
  std::string captions;         // base captions to enhance (JSONL)
  std::string attention_index;
  std::string faces;
  std::string gallery;
  std::string out;
  std::string stats_out;
};

struct RunConfig {
  RunPaths paths;
  double theta = 0.05;
  double alpha = 0.5;
  double similarity_threshold = 0.90;
  SimilarityScale similarity_scale = SimilarityScale::MappedCosine;
  OverlapDenominator overlap_denominator = OverlapDenominator::BoxArea;
  Lexicon lexicon = Lexicon::default_lexicon();
  SentenceSplitOptions sentence_split;
  std::map<std::string, std::string> aliases;
  std::vector<std::string> metrics = {"bleu", "rouge_l", "cider", "meteor"};
  std::string ref_field = "first_sentence";  // or "synthetic"
  int jobs = 0;  // 0 = all hardware threads, 1 = serial

  MergeConfig merge_config() const;
  void validate() const;
};

RunConfig load_run_config(const std::string& path);

struct InsertionStats {
  long long persons_detected = 0;
  long long persons_inserted = 0;
  long long unique_images_with_identifications = 0;

  double percent_inserted() const {
    return persons_detected > 0
               ? 100.0 * static_cast<double>(persons_inserted) /
                     static_cast<double>(persons_detected)
               : 0.0;
  }
};

/// Fixed-point formatting with round-half-up, used for every percentage
/// this library prints.
std::string format_percent(double value, int decimals = 2);

struct CorpusStatsSummary {
  long long images = 0;
  long long identified_persons = 0;
  long long unique_images_with_identifications = 0;
  std::map<int, int> histogram;
};

CorpusStatsSummary compute_corpus_stats(const std::vector<ImageRecord>& records);

/// File-backed attention map lookup. The index is a JSON array of
/// {"image_id", "word", "path"} entries (paths relative to the index file)
/// or {"image_id", "word", "grid"} with an inline grid for small fixtures.
class AttentionIndex : public AttentionSource {
 public:
  static AttentionIndex load(const std::string& path);

  void add(AttentionMap map);
  std::size_t size() const { return paths_.size() + inline_.size(); }

  std::optional<AttentionMap> lookup(const std::string& image_id,
                                     const std::string& word) const override;
  std::vector<std::string> words_for(const std::string& image_id) const override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> paths_;
  std::map<std::pair<std::string, std::string>, AttentionMap> inline_;
  std::string base_dir_;
};

struct PredictionEntry {
  std::string id;
  std::string caption;
  std::optional<std::string> enhanced_caption;
};

/// Line-delimited JSON: {"id":..., "caption":...} per line, or enhanced
/// records carrying base_caption/enhanced_caption. Errors name the line.
std::vector<PredictionEntry> load_predictions(const std::string& path);

struct EnhancedRecord {
  std::string base_caption;
  MergePlan plan;
};

struct EnhanceOutcome {
  std::vector<EnhancedRecord> records;  // sorted by image id
  InsertionStats stats;
  std::vector<std::string> warnings;
};

/// Per-image enhancement fan-out over resolved records. Soft failures
/// (missing maps, unreadable map files) leave the affected image
/// unenhanced and never touch other images; jobs only changes wall time,
/// never output.
EnhanceOutcome enhance_corpus(const std::vector<ImageRecord>& records,
                              const std::map<std::string, std::string>& captions,
                              const AttentionSource& maps,
                              const MergeConfig& config,
                              const NameDictionary& dict, int jobs);

std::string to_jsonl(const EnhanceOutcome& outcome);

/// Loads every configured input, resolves faces, enhances all captioned
/// images, and writes the JSONL output (and stats file when configured).
EnhanceOutcome run_enhance(const RunConfig& config);

struct EvaluationReport {
  CorpusScores base;
  std::optional<CorpusScores> enhanced;
  std::map<std::string, double> improvement_percent;
  std::vector<std::string> ids;  // scored pairs, input order
  std::map<std::string, std::vector<double>> per_pair;  // e.g. "rouge_l/base"
  std::vector<std::string> warnings;
};

/// Scores predictions against the configured reference field. Enhanced
/// prediction files get base and enhanced columns side by side plus
/// relative improvements.
EvaluationReport run_evaluate(const RunConfig& config,
                              const std::string& predictions_path);

std::string report_to_json(const EvaluationReport& report);

/// Histogram plus corpus totals; writes the stats file when configured.
CorpusStatsSummary run_stats(const RunConfig& config);

std::string stats_to_json(const CorpusStatsSummary& summary);

/// Names usable for caption matching: gallery identities, resolved face
/// identities, ground-truth names, plus configured aliases.
NameDictionary build_name_dictionary(const std::vector<ImageRecord>& records,
                                     const Gallery* gallery,
                                     const std::map<std::string, std::string>& aliases);

}  // namespace capmerge
