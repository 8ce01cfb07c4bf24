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

#include "capmerge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "capmerge/parallel.hpp"
#include "json.hpp"

namespace capmerge {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string("cannot open ") + what + ": " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content,
                const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(std::string("cannot open ") + what +
                             " for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError(std::string("write failed for ") + what + ": " + path);
}

}  // namespace

MergeConfig RunConfig::merge_config() const {
  MergeConfig cfg;
  cfg.theta = theta;
  cfg.alpha = alpha;
  cfg.similarity_threshold = similarity_threshold;
  cfg.lexicon = lexicon;
  cfg.overlap_denominator = overlap_denominator;
  return cfg;
}

void RunConfig::validate() const {
  if (theta < 0 || theta > 1)
    throw InputError("config: theta must be in [0,1]");
  if (!(alpha > 0 && alpha <= 1))
    throw InputError("config: alpha must be in (0,1]");
  if (similarity_scale == SimilarityScale::MappedCosine) {
    if (similarity_threshold < 0 || similarity_threshold > 1)
      throw InputError("config: sim-threshold must be in [0,1]");
  } else if (similarity_threshold < -1 || similarity_threshold > 1) {
    throw InputError("config: sim-threshold must be in [-1,1] for raw cosine");
  }
  if (ref_field != "first_sentence" && ref_field != "synthetic")
    throw InputError("config: ref-field must be 'first_sentence' or 'synthetic'");
  if (jobs < 0) throw InputError("config: jobs must be >= 0");
  for (const auto& m : metrics)
    if (m != "bleu" && m != "rouge_l" && m != "rouge" && m != "cider" &&
        m != "meteor")
      throw InputError("config: unknown metric '" + m + "'");
}

RunConfig load_run_config(const std::string& path) {
  json root;
  try {
    root = json::parse(read_file(path, "config file"));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  if (!root.is_object()) throw InputError(path + ": config must be an object");

  RunConfig cfg;
  static const std::set<std::string> known = {
      "paths",      "theta",        "alpha",          "sim_threshold",
      "similarity_scale", "overlap_denominator", "lexicon", "abbreviations",
      "skip_initials", "aliases",   "metrics",        "ref_field",
      "jobs"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!known.count(it.key()))
      throw InputError(path + ": unknown config key '" + it.key() + "'");

  try {
    if (root.contains("paths")) {
      const json& p = root["paths"];
      static const std::set<std::string> known_paths = {
          "manifest", "captions", "attention_index", "faces",
          "gallery",  "out",      "stats_out"};
      for (auto it = p.begin(); it != p.end(); ++it)
        if (!known_paths.count(it.key()))
          throw InputError(path + ": unknown path key '" + it.key() + "'");
      auto get = [&](const char* key, std::string& dst) {
        if (p.contains(key)) dst = p[key].get<std::string>();
      };
      get("manifest", cfg.paths.manifest);
      get("captions", cfg.paths.captions);
      get("attention_index", cfg.paths.attention_index);
      get("faces", cfg.paths.faces);
      get("gallery", cfg.paths.gallery);
      get("out", cfg.paths.out);
      get("stats_out", cfg.paths.stats_out);
    }
    if (root.contains("theta")) cfg.theta = root["theta"].get<double>();
    if (root.contains("alpha")) cfg.alpha = root["alpha"].get<double>();
    if (root.contains("sim_threshold"))
      cfg.similarity_threshold = root["sim_threshold"].get<double>();
    if (root.contains("similarity_scale")) {
      const std::string s = root["similarity_scale"].get<std::string>();
      if (s == "mapped") cfg.similarity_scale = SimilarityScale::MappedCosine;
      else if (s == "raw") cfg.similarity_scale = SimilarityScale::RawCosine;
      else throw InputError("similarity_scale must be 'mapped' or 'raw'");
    }
    if (root.contains("overlap_denominator")) {
      const std::string s = root["overlap_denominator"].get<std::string>();
      if (s == "box") cfg.overlap_denominator = OverlapDenominator::BoxArea;
      else if (s == "activated")
        cfg.overlap_denominator = OverlapDenominator::ActivatedArea;
      else if (s == "union")
        cfg.overlap_denominator = OverlapDenominator::UnionArea;
      else throw InputError("overlap_denominator must be box/activated/union");
    }
    if (root.contains("lexicon")) {
      const json& lex = root["lexicon"];
      if (lex.contains("person_words")) {
        cfg.lexicon.person_words.clear();
        for (const json& pw : lex["person_words"])
          cfg.lexicon.person_words.emplace_back(
              pw.at("singular").get<std::string>(),
              pw.at("plural").get<std::string>());
      }
      if (lex.contains("number_words"))
        cfg.lexicon.number_words =
            lex["number_words"].get<std::map<std::string, int>>();
    }
    if (root.contains("abbreviations"))
      cfg.sentence_split.abbreviations =
          root["abbreviations"].get<std::vector<std::string>>();
    if (root.contains("skip_initials"))
      cfg.sentence_split.skip_initials = root["skip_initials"].get<bool>();
    if (root.contains("aliases"))
      cfg.aliases = root["aliases"].get<std::map<std::string, std::string>>();
    if (root.contains("metrics"))
      cfg.metrics = root["metrics"].get<std::vector<std::string>>();
    if (root.contains("ref_field"))
      cfg.ref_field = root["ref_field"].get<std::string>();
    if (root.contains("jobs")) cfg.jobs = root["jobs"].get<int>();
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string format_percent(double value, int decimals) {
  double scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const double sign = value < 0 ? -1.0 : 1.0;
  const double rounded = sign * std::floor(std::abs(value) * scale + 0.5) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

CorpusStatsSummary compute_corpus_stats(const std::vector<ImageRecord>& records) {
  CorpusStatsSummary s;
  s.images = static_cast<long long>(records.size());
  s.histogram = person_count_histogram(records);
  for (const auto& [count, images] : s.histogram) {
    s.identified_persons += static_cast<long long>(count) * images;
    if (count > 0) s.unique_images_with_identifications += images;
  }
  return s;
}

AttentionIndex AttentionIndex::load(const std::string& path) {
  json root;
  try {
    root = json::parse(read_file(path, "attention index"));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  if (!root.is_array())
    throw InputError(path + ": attention index must be a JSON array");

  AttentionIndex index;
  index.base_dir_ = std::filesystem::path(path).parent_path().string();
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& e = root[i];
    try {
      const std::string image_id = e.at("image_id").get<std::string>();
      const std::string word = e.at("word").get<std::string>();
      const auto key = std::make_pair(image_id, word);
      if (index.paths_.count(key) || index.inline_.count(key))
        throw InputError("duplicate entry for image '" + image_id +
                         "' word '" + word + "'");
      if (e.contains("grid")) {
        AttentionMap map = parse_attention_json(e.dump(), path);
        map.image_id = image_id;
        map.word = word;
        index.inline_[key] = std::move(map);
      } else {
        index.paths_[key] = e.at("path").get<std::string>();
      }
    } catch (const json::exception& ex) {
      throw InputError(path + ": entry #" + std::to_string(i) + ": " + ex.what());
    }
  }
  return index;
}

void AttentionIndex::add(AttentionMap map) {
  inline_[{map.image_id, map.word}] = std::move(map);
}

std::optional<AttentionMap> AttentionIndex::lookup(const std::string& image_id,
                                                   const std::string& word) const {
  const auto key = std::make_pair(image_id, word);
  if (auto it = inline_.find(key); it != inline_.end()) return it->second;
  if (auto it = paths_.find(key); it != paths_.end()) {
    std::filesystem::path p(it->second);
    if (p.is_relative() && !base_dir_.empty())
      p = std::filesystem::path(base_dir_) / p;
    AttentionMap map = read_attention_file(p.string());
    map.image_id = image_id;
    map.word = word;
    return map;
  }
  return std::nullopt;
}

std::vector<std::string> AttentionIndex::words_for(const std::string& image_id) const {
  std::set<std::string> words;
  for (const auto& [key, _] : inline_)
    if (key.first == image_id) words.insert(key.second);
  for (const auto& [key, _] : paths_)
    if (key.first == image_id) words.insert(key.second);
  return {words.begin(), words.end()};
}

std::vector<PredictionEntry> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open predictions file: " + path);

  std::vector<PredictionEntry> entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool expect_enhanced = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    PredictionEntry entry;
    try {
      entry.id = j.at("id").get<std::string>();
      if (j.contains("caption")) {
        entry.caption = j["caption"].get<std::string>();
      } else if (j.contains("base_caption")) {
        entry.caption = j["base_caption"].get<std::string>();
      } else {
        throw InputError("missing 'caption' (or 'base_caption')");
      }
      if (j.contains("enhanced_caption"))
        entry.enhanced_caption = j["enhanced_caption"].get<std::string>();
    } catch (const json::exception& e) {
      throw InputError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(entry.id).second)
      throw InputError(path + ": line " + std::to_string(line_no) +
                       ": duplicate id '" + entry.id + "'");
    if (entries.empty()) {
      expect_enhanced = entry.enhanced_caption.has_value();
    } else if (entry.enhanced_caption.has_value() != expect_enhanced) {
      throw InputError(path + ": line " + std::to_string(line_no) +
                       ": mixed plain and enhanced records");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

NameDictionary build_name_dictionary(
    const std::vector<ImageRecord>& records, const Gallery* gallery,
    const std::map<std::string, std::string>& aliases) {
  std::set<std::string> names;
  if (gallery)
    for (const auto& e : gallery->entries) names.insert(e.name);
  for (const auto& rec : records) {
    for (const auto& n : rec.ground_truth_names) names.insert(n);
    for (const auto& f : rec.faces)
      if (f.identity) names.insert(*f.identity);
  }
  NameDictionary dict;
  dict.names.assign(names.begin(), names.end());
  for (const auto& [alias, canonical] : aliases)
    if (names.count(canonical)) dict.aliases[alias] = canonical;
  dict.validate();
  return dict;
}

EnhanceOutcome enhance_corpus(const std::vector<ImageRecord>& records,
                              const std::map<std::string, std::string>& captions,
                              const AttentionSource& maps,
                              const MergeConfig& config,
                              const NameDictionary& dict, int jobs) {
  struct Slot {
    bool captioned = false;
    EnhancedRecord record;
    std::vector<std::string> warnings;
  };
  std::vector<Slot> slots(records.size());

  parallel_for(static_cast<long long>(records.size()), jobs, [&](long long i) {
    const ImageRecord& rec = records[static_cast<std::size_t>(i)];
    Slot& slot = slots[static_cast<std::size_t>(i)];
    auto it = captions.find(rec.id);
    if (it == captions.end()) {
      slot.warnings.push_back("image '" + rec.id +
                              "': no caption provided; skipped");
      return;
    }
    slot.captioned = true;
    slot.record.base_caption = it->second;
    try {
      slot.record.plan = enhance(rec, it->second, maps, config, dict);
      for (const auto& line : slot.record.plan.trace)
        if (line.find("no attention map") != std::string::npos)
          slot.warnings.push_back("image '" + rec.id + "': " + line);
    } catch (const std::exception& e) {
      // Soft failure: this image passes through unenhanced.
      slot.record.plan = MergePlan{};
      slot.record.plan.image_id = rec.id;
      slot.record.plan.enhanced_caption = it->second;
      slot.record.plan.trace = {std::string("error: ") + e.what() +
                                "; caption left unchanged"};
      slot.warnings.push_back("image '" + rec.id + "': " + e.what());
    }
  });

  EnhanceOutcome outcome;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ImageRecord& rec = records[i];
    bool identified_any = false;
    for (const auto& f : rec.faces) {
      if (f.identity && f.similarity &&
          *f.similarity >= config.similarity_threshold) {
        ++outcome.stats.persons_detected;
        identified_any = true;
      }
    }
    if (identified_any) ++outcome.stats.unique_images_with_identifications;

    Slot& slot = slots[i];
    for (auto& w : slot.warnings) outcome.warnings.push_back(std::move(w));
    if (!slot.captioned) continue;
    for (const auto& sub : slot.record.plan.substitutions)
      outcome.stats.persons_inserted += static_cast<long long>(sub.names.size());
    outcome.records.push_back(std::move(slot.record));
  }

  std::sort(outcome.records.begin(), outcome.records.end(),
            [](const EnhancedRecord& a, const EnhancedRecord& b) {
              return a.plan.image_id < b.plan.image_id;
            });
  return outcome;
}

namespace {

json substitution_json(const Substitution& s) {
  json j;
  j["span"] = {s.candidate.begin, s.candidate.end};
  j["surface"] = s.candidate.surface;
  j["kind"] = to_string(s.candidate.kind);
  j["names"] = s.names;
  j["rule"] = s.rule;
  return j;
}

}  // namespace

std::string to_jsonl(const EnhanceOutcome& outcome) {
  std::string out;
  for (const EnhancedRecord& rec : outcome.records) {
    json j;
    j["id"] = rec.plan.image_id;
    j["base_caption"] = rec.base_caption;
    j["enhanced_caption"] = rec.plan.enhanced_caption;
    j["complex"] = rec.plan.complex;
    j["substitutions"] = json::array();
    for (const auto& s : rec.plan.substitutions)
      j["substitutions"].push_back(substitution_json(s));
    j["trace"] = rec.plan.trace;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string insertion_stats_json(const InsertionStats& stats,
                                 const std::vector<std::string>& warnings) {
  json j;
  j["persons_detected"] = stats.persons_detected;
  j["persons_inserted"] = stats.persons_inserted;
  j["unique_images_with_identifications"] =
      stats.unique_images_with_identifications;
  j["percent_inserted"] = stats.percent_inserted();
  j["percent_inserted_display"] = format_percent(stats.percent_inserted());
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

}  // namespace

EnhanceOutcome run_enhance(const RunConfig& config) {
  config.validate();
  if (config.paths.manifest.empty())
    throw InputError("enhance: a manifest path is required");
  if (config.paths.captions.empty())
    throw InputError("enhance: a captions file with base captions is required");
  if (config.paths.attention_index.empty())
    throw InputError("enhance: an attention index path is required");

  std::vector<ImageRecord> records =
      load_manifest(config.paths.manifest, config.sentence_split);

  std::vector<std::string> warnings;
  if (!config.paths.faces.empty()) {
    const FacesFile faces = load_faces(config.paths.faces);
    for (const auto& orphan : apply_faces(records, faces))
      warnings.push_back("faces file: image '" + orphan +
                         "' not in manifest; ignored");
  }

  std::optional<Gallery> gallery;
  if (!config.paths.gallery.empty()) {
    gallery = load_gallery(config.paths.gallery);
    records = resolve_all(std::move(records), *gallery,
                          config.similarity_threshold, config.jobs,
                          config.similarity_scale);
  }

  std::map<std::string, std::string> captions;
  std::set<std::string> manifest_ids;
  for (const auto& rec : records) manifest_ids.insert(rec.id);
  for (const auto& entry : load_predictions(config.paths.captions)) {
    if (!manifest_ids.count(entry.id)) {
      warnings.push_back("captions file: image '" + entry.id +
                         "' not in manifest; ignored");
      continue;
    }
    captions[entry.id] = entry.caption;
  }

  const AttentionIndex index = AttentionIndex::load(config.paths.attention_index);
  const NameDictionary dict =
      build_name_dictionary(records, gallery ? &*gallery : nullptr, config.aliases);

  EnhanceOutcome outcome = enhance_corpus(records, captions, index,
                                          config.merge_config(), dict,
                                          config.jobs);
  outcome.warnings.insert(outcome.warnings.begin(), warnings.begin(),
                          warnings.end());

  if (!config.paths.out.empty())
    write_file(config.paths.out, to_jsonl(outcome), "output file");
  if (!config.paths.stats_out.empty())
    write_file(config.paths.stats_out,
               insertion_stats_json(outcome.stats, outcome.warnings),
               "stats file");
  return outcome;
}

namespace {

struct MetricSelection {
  bool bleu = false, rouge = false, cider = false, meteor = false;
};

MetricSelection parse_metric_selection(const std::vector<std::string>& names) {
  MetricSelection sel;
  for (const auto& name : names) {
    if (name == "bleu") sel.bleu = true;
    else if (name == "rouge_l" || name == "rouge") sel.rouge = true;
    else if (name == "cider") sel.cider = true;
    else if (name == "meteor") sel.meteor = true;
    else throw InputError("unknown metric '" + name + "'");
  }
  return sel;
}

CorpusScores score_column(const std::vector<ScoredPair>& pairs,
                          const MetricSelection& sel, int jobs,
                          const std::string& label,
                          std::map<std::string, std::vector<double>>& per_pair,
                          std::vector<std::string>& warnings) {
  CorpusScores scores;
  scores.counts = pairs.size();
  if (sel.bleu) {
    BleuResult b = bleu(pairs, 4, jobs);
    scores.bleu = b.score;
    for (auto& w : b.warnings) warnings.push_back(label + ": " + w);
  }
  if (sel.rouge) {
    std::vector<double> pp;
    std::vector<std::string> w;
    scores.rouge_l = rouge_l(pairs, &pp, &w, jobs);
    per_pair["rouge_l/" + label] = std::move(pp);
    for (auto& msg : w) warnings.push_back(label + ": " + msg);
  }
  if (sel.cider) {
    std::vector<double> pp;
    scores.cider = cider(pairs, &pp, jobs);
    per_pair["cider/" + label] = std::move(pp);
  }
  if (sel.meteor) {
    std::vector<double> pp;
    scores.meteor = meteor(pairs, &pp, jobs);
    per_pair["meteor/" + label] = std::move(pp);
  }
  return scores;
}

void add_improvement(EvaluationReport& report, const std::string& metric,
                     std::optional<double> base, std::optional<double> enh) {
  if (!base || !enh) return;
  if (*base > 0)
    report.improvement_percent[metric] = relative_improvement(*base, *enh);
  else
    report.warnings.push_back("improvement for " + metric +
                              " undefined: base score is not positive");
}

}  // namespace

EvaluationReport run_evaluate(const RunConfig& config,
                              const std::string& predictions_path) {
  config.validate();
  if (config.paths.manifest.empty())
    throw InputError("evaluate: a manifest path is required");

  const std::vector<ImageRecord> records =
      load_manifest(config.paths.manifest, config.sentence_split);
  std::map<std::string, const ImageRecord*> by_id;
  for (const auto& rec : records) by_id[rec.id] = &rec;

  const std::vector<PredictionEntry> entries = load_predictions(predictions_path);
  if (entries.empty())
    throw InputError(predictions_path + ": no prediction records");

  std::vector<std::string> orphans;
  for (const auto& e : entries)
    if (!by_id.count(e.id)) orphans.push_back(e.id);
  if (!orphans.empty()) {
    std::string msg = predictions_path + ": ids not present in the manifest:";
    for (const auto& id : orphans) msg += " '" + id + "'";
    throw InputError(msg);
  }

  EvaluationReport report;
  const bool dual = entries.front().enhanced_caption.has_value();
  std::vector<ScoredPair> base_pairs, enhanced_pairs;
  for (const auto& e : entries) {
    const ImageRecord& rec = *by_id.at(e.id);
    const std::optional<std::string>& ref = config.ref_field == "synthetic"
                                                ? rec.synthetic_caption
                                                : rec.first_sentence;
    if (!ref) {
      report.warnings.push_back("image '" + e.id + "': no " + config.ref_field +
                                " reference; excluded");
      continue;
    }
    const std::vector<std::string> ref_tokens = metric_tokenize(*ref);
    base_pairs.push_back({metric_tokenize(e.caption), {ref_tokens}});
    if (dual)
      enhanced_pairs.push_back({metric_tokenize(*e.enhanced_caption), {ref_tokens}});
    report.ids.push_back(e.id);
  }
  if (base_pairs.empty())
    throw InputError("evaluate: no scorable pairs (missing references?)");

  const MetricSelection sel = parse_metric_selection(config.metrics);
  report.base = score_column(base_pairs, sel, config.jobs, "base",
                             report.per_pair, report.warnings);
  if (dual) {
    report.enhanced = score_column(enhanced_pairs, sel, config.jobs, "enhanced",
                                   report.per_pair, report.warnings);
    add_improvement(report, "bleu", report.base.bleu, report.enhanced->bleu);
    add_improvement(report, "rouge_l", report.base.rouge_l,
                    report.enhanced->rouge_l);
    add_improvement(report, "cider", report.base.cider, report.enhanced->cider);
    add_improvement(report, "meteor", report.base.meteor,
                    report.enhanced->meteor);
  }

  if (!config.paths.out.empty())
    write_file(config.paths.out, report_to_json(report), "report file");
  return report;
}

namespace {

json scores_json(const CorpusScores& s) {
  json j;
  j["counts"] = s.counts;
  if (s.bleu) {
    j["bleu"] = *s.bleu;
    j["bleu_x100"] = *s.bleu * 100.0;
  }
  if (s.rouge_l) j["rouge_l"] = *s.rouge_l;
  if (s.cider) j["cider"] = *s.cider;
  if (s.meteor) j["meteor"] = *s.meteor;
  return j;
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json j;
  j["base"] = scores_json(report.base);
  if (report.enhanced) j["enhanced"] = scores_json(*report.enhanced);
  if (!report.improvement_percent.empty()) {
    json imp;
    for (const auto& [metric, value] : report.improvement_percent)
      imp[metric] = value;
    j["improvement_percent"] = imp;
  }
  json pairs = json::array();
  for (std::size_t i = 0; i < report.ids.size(); ++i) {
    json p;
    p["id"] = report.ids[i];
    for (const auto& [key, values] : report.per_pair)
      if (i < values.size()) p[key] = values[i];
    pairs.push_back(p);
  }
  j["pairs"] = pairs;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

CorpusStatsSummary run_stats(const RunConfig& config) {
  config.validate();
  if (config.paths.manifest.empty())
    throw InputError("stats: a manifest path is required");

  std::vector<ImageRecord> records =
      load_manifest(config.paths.manifest, config.sentence_split);
  if (!config.paths.faces.empty()) {
    const FacesFile faces = load_faces(config.paths.faces);
    apply_faces(records, faces);
  }
  if (!config.paths.gallery.empty()) {
    const Gallery gallery = load_gallery(config.paths.gallery);
    records = resolve_all(std::move(records), gallery,
                          config.similarity_threshold, config.jobs,
                          config.similarity_scale);
  }
  const CorpusStatsSummary summary = compute_corpus_stats(records);
  if (!config.paths.out.empty())
    write_file(config.paths.out, stats_to_json(summary), "stats file");
  return summary;
}

std::string stats_to_json(const CorpusStatsSummary& summary) {
  json j;
  j["images"] = summary.images;
  j["identified_persons"] = summary.identified_persons;
  j["unique_images_with_identifications"] =
      summary.unique_images_with_identifications;
  json hist = json::object();
  for (const auto& [count, images] : summary.histogram)
    hist[std::to_string(count)] = images;
  j["histogram"] = hist;
  return j.dump(2) + "\n";
}

}  // namespace capmerge
