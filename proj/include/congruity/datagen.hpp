#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "congruity/error.hpp"
#include "congruity/ingestion.hpp"
#include "congruity/ndjson.hpp"
#include "congruity/random.hpp"
#include "congruity/scoring.hpp"

namespace congruity {

enum class Origin { original, same_media, cross_media };
enum class Pool { train, validation, test };

inline constexpr std::array<Pool, 3> kAllPools = {Pool::train, Pool::validation, Pool::test};

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::original: return "original";
    case Origin::same_media: return "same_media";
    case Origin::cross_media: return "cross_media";
  }
  return "?";
}

inline std::string_view to_string(Pool p) {
  switch (p) {
    case Pool::train: return "train";
    case Pool::validation: return "validation";
    case Pool::test: return "test";
  }
  return "?";
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "original") return Origin::original;
  if (s == "same_media") return Origin::same_media;
  if (s == "cross_media") return Origin::cross_media;
  return std::nullopt;
}

inline std::optional<Pool> parse_pool(std::string_view s) {
  if (s == "train") return Pool::train;
  if (s == "validation") return Pool::validation;
  if (s == "test") return Pool::test;
  return std::nullopt;
}

struct PairSample {
  std::string sample_id;
  std::string image_record_id;
  std::string title_record_id;
  Congruity label = Congruity::congruent;
  Origin origin = Origin::original;
  Pool pool = Pool::train;

  bool operator==(const PairSample&) const = default;
};

struct GenerationConfig {
  double congruent_quantile = 0.75;
  std::array<double, 3> pool_fractions = {0.80, 0.10, 0.10};
  // Exact pool sizes; overrides the fractions when set.
  std::optional<std::array<std::size_t, 3>> pool_counts;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(congruent_quantile > 0.0 && congruent_quantile <= 1.0))
      throw data_error("congruent_quantile must be in (0, 1]");
    double sum = 0.0;
    for (double f : pool_fractions) {
      if (!(f >= 0.0)) throw data_error("pool fractions must be nonnegative");
      sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw data_error("pool fractions must sum to 1");
  }
};

namespace datagen_detail {

// floor(x) tolerant of representation error just below an integer.
inline std::size_t safe_floor(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

}  // namespace datagen_detail

// Top floor(q * n) record ids by score; ties broken by ascending id.
inline std::vector<std::string> select_congruent(std::vector<ScoredPair> scored,
                                                 const GenerationConfig& config) {
  config.validate();
  if (scored.empty()) throw data_error("select_congruent: no scored pairs");
  for (const auto& s : scored) {
    if (s.media_label != MediaLabel::general)
      throw data_error("select_congruent: record '" + s.record_id +
                       "' is not from a general (trustworthy) source");
    if (!std::isfinite(s.score))
      throw data_error("select_congruent: non-finite score for '" + s.record_id + "'");
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredPair& x, const ScoredPair& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.record_id < y.record_id;
  });
  const std::size_t keep =
      datagen_detail::safe_floor(config.congruent_quantile * static_cast<double>(scored.size()));
  std::vector<std::string> ids;
  ids.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) ids.push_back(scored[i].record_id);
  return ids;
}

struct Pools {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  const std::vector<std::string>& operator[](Pool p) const {
    return p == Pool::train ? train : p == Pool::validation ? validation : test;
  }

  bool operator==(const Pools&) const = default;
};

// Seeded shuffle, then sizes (floor(f1 n), floor(f2 n), remainder), or the
// exact counts when configured.
inline Pools split_pools(std::vector<std::string> ids, const GenerationConfig& config) {
  config.validate();
  {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second) throw data_error("split_pools: duplicate id '" + id + "'");
  }
  const std::size_t n = ids.size();
  std::size_t n_train, n_validation;
  if (config.pool_counts) {
    const auto& c = *config.pool_counts;
    if (c[0] + c[1] + c[2] != n)
      throw data_error("pool counts sum to " + std::to_string(c[0] + c[1] + c[2]) +
                       " but " + std::to_string(n) + " ids were given");
    n_train = c[0];
    n_validation = c[1];
  } else {
    n_train = datagen_detail::safe_floor(config.pool_fractions[0] * static_cast<double>(n));
    n_validation = datagen_detail::safe_floor(config.pool_fractions[1] * static_cast<double>(n));
    n_validation = std::min(n_validation, n - n_train);
  }

  Rng rng(config.seed);
  rng.shuffle(std::span<std::string>(ids));

  Pools pools;
  auto begin = ids.begin();
  pools.train.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train));
  pools.validation.assign(begin + static_cast<std::ptrdiff_t>(n_train),
                          begin + static_cast<std::ptrdiff_t>(n_train + n_validation));
  pools.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_validation), ids.end());
  return pools;
}

using CorpusIndex = std::unordered_map<std::string, ArticleRecord>;

inline CorpusIndex index_corpus(const std::vector<ArticleRecord>& records) {
  CorpusIndex index;
  for (const auto& r : records) index.emplace(r.id, r);
  return index;
}

inline std::string sample_id_for(Pool pool, const std::string& image_id, Origin origin) {
  return std::string(to_string(pool)) + "/" + image_id + "/" + std::string(to_string(origin));
}

// For every article in the pool: the original pair, plus its image linked to
// a title drawn uniformly from another article of the same media, plus one
// drawn uniformly from articles of other media. Draws are with replacement
// across targets and never reach outside the pool.
inline std::vector<PairSample> generate_samples(const std::vector<std::string>& pool_ids,
                                                const CorpusIndex& corpus, std::uint64_t seed,
                                                Pool pool = Pool::train) {
  // Members grouped by media (media in sorted order, members in pool order),
  // laid out contiguously so "every record outside my media" is two ranges.
  std::map<std::string, std::vector<std::size_t>> by_media;
  std::vector<const ArticleRecord*> members;
  members.reserve(pool_ids.size());
  {
    std::unordered_set<std::string> seen;
    for (const auto& id : pool_ids) {
      auto it = corpus.find(id);
      if (it == corpus.end()) throw data_error("pool id '" + id + "' is not in the corpus");
      if (!seen.insert(id).second) throw data_error("pool contains '" + id + "' twice");
      by_media[it->second.media].push_back(members.size());
      members.push_back(&it->second);
    }
  }
  if (members.empty()) return {};
  if (by_media.size() < 2)
    throw data_error("pool has a single media ('" + by_media.begin()->first +
                     "'); cross-media sampling impossible");
  for (const auto& [media, list] : by_media) {
    if (list.size() < 2)
      throw data_error("media '" + media + "' has a single record in the pool; "
                       "same-media sampling impossible");
  }

  std::vector<std::size_t> grouped;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> range;  // offset, size
  for (const auto& [media, list] : by_media) {
    range[media] = {grouped.size(), list.size()};
    grouped.insert(grouped.end(), list.begin(), list.end());
  }
  // Position of each member inside its media group.
  std::vector<std::size_t> pos_in_group(members.size());
  for (const auto& [media, list] : by_media)
    for (std::size_t k = 0; k < list.size(); ++k) pos_in_group[list[k]] = k;

  Rng rng(seed);
  std::vector<PairSample> samples;
  samples.reserve(3 * members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const ArticleRecord& target = *members[i];
    const auto [offset, size] = range.at(target.media);

    std::size_t k = rng.uniform_index(size - 1);
    if (k >= pos_in_group[i]) ++k;
    const ArticleRecord& same = *members[grouped[offset + k]];

    std::size_t r = rng.uniform_index(members.size() - size);
    if (r >= offset) r += size;
    const ArticleRecord& cross = *members[grouped[r]];

    samples.push_back({sample_id_for(pool, target.id, Origin::original), target.id, target.id,
                       Congruity::congruent, Origin::original, pool});
    samples.push_back({sample_id_for(pool, target.id, Origin::same_media), target.id, same.id,
                       Congruity::incongruent, Origin::same_media, pool});
    samples.push_back({sample_id_for(pool, target.id, Origin::cross_media), target.id, cross.id,
                       Congruity::incongruent, Origin::cross_media, pool});
  }
  return samples;
}

inline json sample_to_json(const PairSample& s) {
  return {{"sample_id", s.sample_id},
          {"image_record_id", s.image_record_id},
          {"title_record_id", s.title_record_id},
          {"label", to_string(s.label)},
          {"origin", to_string(s.origin)},
          {"pool", to_string(s.pool)}};
}

inline PairSample sample_from_json(const json& j) {
  PairSample s;
  s.sample_id = require_string(j, "sample_id");
  s.image_record_id = require_string(j, "image_record_id");
  s.title_record_id = require_string(j, "title_record_id");
  auto label = parse_congruity(require_string(j, "label"));
  auto origin = parse_origin(require_string(j, "origin"));
  auto pool = parse_pool(require_string(j, "pool"));
  if (!label) throw data_error("field 'label' must be congruent or incongruent");
  if (!origin) throw data_error("field 'origin' must be original, same_media or cross_media");
  if (!pool) throw data_error("field 'pool' must be train, validation or test");
  s.label = *label;
  s.origin = *origin;
  s.pool = *pool;
  if ((s.label == Congruity::congruent) != (s.origin == Origin::original) ||
      (s.origin == Origin::original) != (s.image_record_id == s.title_record_id))
    throw data_error("sample '" + s.sample_id + "' violates label/origin consistency");
  return s;
}

inline void write_samples(const std::filesystem::path& path,
                          const std::vector<PairSample>& samples) {
  ndjson::write(path, samples, sample_to_json);
}

inline std::vector<PairSample> read_samples(const std::filesystem::path& path) {
  std::vector<PairSample> samples;
  ndjson::for_each(path, [&](const json& j, std::size_t) {
    samples.push_back(sample_from_json(j));
  });
  return samples;
}

inline json pools_to_json(const Pools& pools) {
  return {{"train", pools.train}, {"validation", pools.validation}, {"test", pools.test}};
}

inline Pools pools_from_json(const json& j) {
  Pools p;
  p.train = require_field(j, "train").get<std::vector<std::string>>();
  p.validation = require_field(j, "validation").get<std::vector<std::string>>();
  p.test = require_field(j, "test").get<std::vector<std::string>>();
  return p;
}

}  // namespace congruity
