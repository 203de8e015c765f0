#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/ingestion.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

struct ScoredPair {
  std::string record_id;
  std::string media;
  MediaLabel media_label = MediaLabel::general;
  double score = 0.0;

  bool operator==(const ScoredPair&) const = default;
};

namespace scoring_detail {

template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw data_error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    norm_a += x * x;
    norm_b += y * y;
  }
  if (norm_a == 0.0 || norm_b == 0.0)
    throw data_error("zero-norm embedding in cosine similarity");
  return std::clamp(dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), -1.0, 1.0);
}

}  // namespace scoring_detail

// <a,b> / (|a| |b|), accumulated in double and clamped to [-1, 1].
// Zero-norm inputs are rejected rather than mapped to 0.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  return scoring_detail::cosine(a, b);
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return scoring_detail::cosine(a, b);
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values(), b.values());
}

// Canonical (unrectified, unscaled) CLIPScore: negative similarities are kept.
inline double clip_score(const Embedding& text, const Embedding& image) {
  return cosine_similarity(text, image);
}

// Looks up `<id>:title` and `<id>:thumb` for every record. Missing entries
// are collected and reported together.
inline std::vector<ScoredPair> score_corpus(const std::vector<ArticleRecord>& records,
                                            const EmbeddingStore& store) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!store.contains(title_key(r.id)) || !store.contains(thumb_key(r.id)))
      missing.push_back(r.id);
  }
  if (!missing.empty())
    throw IdListError(ErrorKind::data, "records without title/thumbnail embeddings",
                      std::move(missing));

  std::vector<ScoredPair> scored;
  scored.reserve(records.size());
  for (const auto& r : records) {
    scored.push_back({r.id, r.media, r.media_label,
                      clip_score(store.at(title_key(r.id)), store.at(thumb_key(r.id)))});
  }
  return scored;
}

inline json scored_to_json(const ScoredPair& s) {
  return {{"record_id", s.record_id},
          {"media", s.media},
          {"media_label", to_string(s.media_label)},
          {"score", s.score}};
}

inline ScoredPair scored_from_json(const json& j) {
  ScoredPair s;
  s.record_id = require_string(j, "record_id");
  s.media = require_string(j, "media");
  const auto label = parse_media_label(require_string(j, "media_label"));
  if (!label) throw data_error("field 'media_label' must be general or fake");
  s.media_label = *label;
  s.score = require_number(j, "score");
  return s;
}

inline void write_scored(const std::filesystem::path& path,
                         const std::vector<ScoredPair>& scored) {
  ndjson::write(path, scored, scored_to_json);
}

inline std::vector<ScoredPair> read_scored(const std::filesystem::path& path) {
  std::vector<ScoredPair> scored;
  ndjson::for_each(path, [&](const json& j, std::size_t) {
    scored.push_back(scored_from_json(j));
  });
  return scored;
}

}  // namespace congruity
