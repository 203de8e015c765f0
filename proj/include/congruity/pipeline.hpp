#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "congruity/datagen.hpp"
#include "congruity/detect/mlp.hpp"
#include "congruity/detect/threshold.hpp"
#include "congruity/detect/trainer.hpp"
#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/evaluation.hpp"
#include "congruity/ingestion.hpp"
#include "congruity/ndjson.hpp"
#include "congruity/random.hpp"
#include "congruity/scoring.hpp"

namespace congruity {

// Fixed offsets fanning the pipeline seed out to the stages.
enum class Stage : std::uint64_t {
  synth = 1,
  split = 2,
  gen_train = 3,
  gen_validation = 4,
  gen_test = 5,
  train = 6,
};

inline std::uint64_t stage_seed(std::uint64_t seed, Stage stage) {
  return derive_seed(seed, static_cast<std::uint64_t>(stage));
}

inline Stage generation_stage(Pool pool) {
  switch (pool) {
    case Pool::train: return Stage::gen_train;
    case Pool::validation: return Stage::gen_validation;
    case Pool::test: return Stage::gen_test;
  }
  return Stage::gen_train;
}

struct PipelineConfig {
  std::filesystem::path corpus_path = "corpus.jsonl";
  std::filesystem::path embedding_store_path = "embeddings.emb";
  std::optional<std::string> embedding_service_url;
  std::vector<std::string> keyword_list = covid_keywords();
  std::uint64_t seed = 0;
  GenerationConfig generation;
  TrainConfig train;
  std::filesystem::path output_dir = "out";
};

inline json to_json(const PipelineConfig& c) {
  json generation = {{"congruent_quantile", c.generation.congruent_quantile},
                     {"pool_fractions", c.generation.pool_fractions},
                     {"pool_counts", nullptr}};
  if (c.generation.pool_counts) generation["pool_counts"] = *c.generation.pool_counts;
  json train = to_json(c.train);
  train.erase("seed");
  return {{"corpus_path", c.corpus_path.string()},
          {"embedding_store_path", c.embedding_store_path.string()},
          {"embedding_service_url",
           c.embedding_service_url ? json(*c.embedding_service_url) : json(nullptr)},
          {"keyword_list", c.keyword_list},
          {"seed", c.seed},
          {"generation", generation},
          {"train", train},
          {"output_dir", c.output_dir.string()}};
}

inline PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    c.corpus_path = j.value("corpus_path", c.corpus_path.string());
    c.embedding_store_path = j.value("embedding_store_path", c.embedding_store_path.string());
    if (auto it = j.find("embedding_service_url"); it != j.end() && !it->is_null())
      c.embedding_service_url = it->get<std::string>();
    c.keyword_list = j.value("keyword_list", c.keyword_list);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (auto it = j.find("generation"); it != j.end()) {
      c.generation.congruent_quantile = it->value("congruent_quantile", c.generation.congruent_quantile);
      c.generation.pool_fractions = it->value("pool_fractions", c.generation.pool_fractions);
      if (auto counts = it->find("pool_counts"); counts != it->end() && !counts->is_null())
        c.generation.pool_counts = counts->get<std::array<std::size_t, 3>>();
    }
    if (auto it = j.find("train"); it != j.end()) c.train = train_config_from_json(*it, c.train);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::usage, std::string("invalid config: ") + e.what());
  }
  if (c.corpus_path.empty() || c.embedding_store_path.empty() || c.output_dir.empty())
    throw Error(ErrorKind::usage, "config paths must be non-empty");
  c.generation.validate();
  c.train.validate();
  return c;
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

// Overrides every leaf key of `config` from PREFIX_<PATH_IN_UPPER_SNAKE>,
// e.g. CONGRUITY_TRAIN_LEARNING_RATE. String-valued (or null) keys take the
// raw value; others parse it as JSON.
inline void apply_env_overrides(json& config, const EnvLookup& lookup,
                                const std::string& prefix = "CONGRUITY") {
  for (auto it = config.begin(); it != config.end(); ++it) {
    std::string name = prefix + "_" + it.key();
    for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (it->is_object()) {
      apply_env_overrides(*it, lookup, name);
      continue;
    }
    auto value = lookup(name);
    if (!value) continue;
    if (it->is_string() || it->is_null()) {
      *it = *value;
      continue;
    }
    json parsed = json::parse(*value, nullptr, false);
    if (parsed.is_discarded())
      throw Error(ErrorKind::usage, "environment variable " + name + " is not valid JSON: " + *value);
    *it = std::move(parsed);
  }
}

// Defaults, then the config file, then environment overrides.
inline PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path,
                                           const EnvLookup& lookup = process_env) {
  json merged = to_json(PipelineConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorKind::usage, "cannot open config " + path->string());
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object())
      throw Error(ErrorKind::usage, "config " + path->string() + " is not a JSON object");
    merged.merge_patch(file);
  }
  apply_env_overrides(merged, lookup);
  return config_from_json(merged);
}

struct Dataset {
  Pools pools;
  std::array<std::vector<PairSample>, 3> samples;  // indexed by Pool

  const std::vector<PairSample>& operator[](Pool p) const {
    return samples[static_cast<std::size_t>(p)];
  }
};

inline std::array<std::vector<PairSample>, 3> generate_pool_samples(const Pools& pools,
                                                                    const CorpusIndex& corpus,
                                                                    std::uint64_t seed) {
  std::array<std::vector<PairSample>, 3> out;
  for (Pool p : kAllPools)
    out[static_cast<std::size_t>(p)] =
        generate_samples(pools[p], corpus, stage_seed(seed, generation_stage(p)), p);
  return out;
}

// Congruent selection over general-media scores, pool split, then per-pool
// mismatching.
inline Dataset build_dataset(const std::vector<ScoredPair>& scored,
                             const std::vector<ArticleRecord>& corpus, GenerationConfig config,
                             std::uint64_t seed) {
  std::vector<ScoredPair> general;
  for (const auto& s : scored)
    if (s.media_label == MediaLabel::general) general.push_back(s);
  config.seed = stage_seed(seed, Stage::split);
  Dataset dataset;
  dataset.pools = split_pools(select_congruent(std::move(general), config), config);
  dataset.samples = generate_pool_samples(dataset.pools, index_corpus(corpus), seed);
  return dataset;
}

// Similarity of every sample's (title, image) pair.
inline std::vector<LabeledScore> sample_similarities(const std::vector<PairSample>& samples,
                                                     const EmbeddingStore& store) {
  std::vector<LabeledScore> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back({clip_score(store.at(title_key(s.title_record_id)), store.at(thumb_key(s.image_record_id))),
                   s.label});
  return out;
}

inline EvalReport evaluate_threshold(const ThresholdModel& model, const std::vector<PairSample>& samples,
                                     const EmbeddingStore& store, const std::string& split_name) {
  const auto sims = sample_similarities(samples, store);
  std::vector<LabelPair> labels;
  std::vector<LabeledScore> prediction_scores;
  for (const auto& s : sims) {
    const auto p = threshold_predict(model, s.score);
    labels.push_back({p.label, s.label});
    prediction_scores.push_back({p.prediction_score, s.label});
  }
  return {split_name, samples.size(), accuracy(labels), auroc(prediction_scores)};
}

inline EvalReport evaluate_mlp(const MlpModel& model, const std::vector<PairSample>& samples,
                               const EmbeddingStore& store, const std::string& split_name) {
  const FeatureSet features = build_features(samples, store);
  const Eigen::VectorXd prob = mlp_predict(model, features.inputs);
  std::vector<LabelPair> labels;
  std::vector<LabeledScore> prediction_scores;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    const Congruity truth = samples[static_cast<std::size_t>(i)].label;
    labels.push_back({prob(i) >= 0.5 ? Congruity::incongruent : Congruity::congruent, truth});
    prediction_scores.push_back({prob(i), truth});
  }
  return {split_name, samples.size(), accuracy(labels), auroc(prediction_scores)};
}

}  // namespace congruity
