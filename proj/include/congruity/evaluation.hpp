#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "congruity/detect/threshold.hpp"
#include "congruity/error.hpp"
#include "congruity/labels.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

struct LabelPair {
  Congruity predicted;
  Congruity truth;
};

struct EvalReport {
  std::string split_name;
  std::size_t n = 0;
  double accuracy = 0.0;
  double auroc = 0.0;
};

struct RankedItem {
  std::string record_id;
  double prediction_score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

struct PrecisionPoint {
  std::size_t k = 0;
  double precision = 0.0;
};

struct PrecisionCurve {
  std::vector<PrecisionPoint> points;
  std::size_t annotated_count = 0;
};

inline double accuracy(std::span<const LabelPair> predictions) {
  if (predictions.empty()) throw data_error("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.predicted == p.truth;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

// Mann-Whitney form with midranks for ties; positive class = incongruent.
// `score` here is the prediction score (higher = more likely incongruent).
inline double auroc(std::span<const LabeledScore> scores) {
  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  for (const auto& s : sorted)
    if (!std::isfinite(s.score)) throw data_error("non-finite prediction score in AUROC");
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
    // Ranks i+1 .. j share their average.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].label == Congruity::incongruent) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = sorted.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw data_error("AUROC needs both classes present");
  const double p = static_cast<double>(n_pos), q = static_cast<double>(n_neg);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

// Descending prediction score, ties by ascending record id.
inline std::vector<RankedItem> rank_articles(std::vector<RankedItem> items) {
  for (const auto& item : items)
    if (!std::isfinite(item.prediction_score))
      throw data_error("non-finite prediction score for '" + item.record_id + "'");
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.prediction_score != b.prediction_score) return a.prediction_score > b.prediction_score;
    return a.record_id < b.record_id;
  });
  return items;
}

// Fraction of the top-k records labeled incongruent, for each k. ks are
// sorted and deduplicated. Unlabeled records inside the deepest requested
// prefix are reported together (that list is the annotation backlog).
inline PrecisionCurve top_k_precision(const std::vector<RankedItem>& ranked,
                                      const std::unordered_map<std::string, Congruity>& labels,
                                      std::vector<std::size_t> ks) {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  PrecisionCurve curve;
  for (const auto& item : ranked) curve.annotated_count += labels.contains(item.record_id);
  if (ks.empty()) return curve;
  if (ks.front() == 0) throw data_error("top-k precision needs k >= 1");
  const std::size_t depth = ks.back();
  if (depth > ranked.size())
    throw data_error("k=" + std::to_string(depth) + " exceeds ranking length " +
                     std::to_string(ranked.size()));

  std::vector<std::string> missing;
  for (std::size_t i = 0; i < depth; ++i)
    if (!labels.contains(ranked[i].record_id)) missing.push_back(ranked[i].record_id);
  if (!missing.empty())
    throw IdListError(ErrorKind::data, "unlabeled records inside the requested top-k",
                      std::move(missing));

  std::size_t positives = 0, next_k = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    positives += labels.at(ranked[i].record_id) == Congruity::incongruent;
    if (i + 1 == ks[next_k]) {
      curve.points.push_back({ks[next_k], static_cast<double>(positives) / static_cast<double>(i + 1)});
      ++next_k;
    }
  }
  return curve;
}

inline json to_json(const EvalReport& r) {
  return {{"split_name", r.split_name}, {"n", r.n}, {"accuracy", r.accuracy}, {"auroc", r.auroc}};
}

inline json to_json(const PrecisionCurve& c) {
  json points = json::array();
  for (const auto& p : c.points) points.push_back({{"k", p.k}, {"precision", p.precision}});
  return {{"points", points}, {"annotated_count", c.annotated_count}};
}

inline json ranked_to_json(const RankedItem& item, std::size_t rank) {
  return {{"record_id", item.record_id}, {"prediction_score", item.prediction_score}, {"rank", rank}};
}

// Ranking file: one {record_id, prediction_score, rank} object per line,
// rank 1-based, in rank order.
inline void write_ranking(const std::filesystem::path& path, const std::vector<RankedItem>& ranked) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  for (std::size_t i = 0; i < ranked.size(); ++i) out << ranked_to_json(ranked[i], i + 1).dump() << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

inline std::vector<RankedItem> read_ranking(const std::filesystem::path& path) {
  std::vector<std::pair<std::size_t, RankedItem>> rows;
  ndjson::for_each(path, [&](const json& j, std::size_t line) {
    RankedItem item{require_string(j, "record_id"), require_number(j, "prediction_score")};
    const std::size_t rank = j.contains("rank") ? j["rank"].get<std::size_t>() : line;
    rows.emplace_back(rank, std::move(item));
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<RankedItem> ranked;
  ranked.reserve(rows.size());
  for (auto& [rank, item] : rows) ranked.push_back(std::move(item));
  return ranked;
}

}  // namespace congruity
