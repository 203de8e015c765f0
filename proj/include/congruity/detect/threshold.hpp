#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>

#include "congruity/error.hpp"
#include "congruity/labels.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

struct LabeledScore {
  double score;
  Congruity label;
};

// Predicts incongruent iff similarity < threshold.
struct ThresholdModel {
  double threshold = 0.0;
};

struct ThresholdPrediction {
  Congruity label;
  double prediction_score;  // 1 - similarity; higher = more likely incongruent
};

// Unweighted mean of the two per-class means, so the 2:1 class imbalance of
// generated data does not pull the threshold toward the majority class.
inline ThresholdModel derive_threshold(std::span<const LabeledScore> validation) {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (const auto& s : validation) {
    if (!std::isfinite(s.score)) throw data_error("non-finite validation score");
    const int c = s.label == Congruity::incongruent ? 1 : 0;
    sum[c] += s.score;
    ++count[c];
  }
  if (count[0] == 0 || count[1] == 0)
    throw data_error("derive_threshold needs both congruent and incongruent samples");
  const double mean_congruent = sum[0] / static_cast<double>(count[0]);
  const double mean_incongruent = sum[1] / static_cast<double>(count[1]);
  return {(mean_congruent + mean_incongruent) / 2.0};
}

inline ThresholdPrediction threshold_predict(const ThresholdModel& model, double score) {
  return {score < model.threshold ? Congruity::incongruent : Congruity::congruent, 1.0 - score};
}

inline void write_threshold(const std::filesystem::path& path, const ThresholdModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << json{{"threshold", model.threshold}}.dump() << '\n';
}

inline ThresholdModel threshold_from_json(const json& j) {
  const double t = require_number(j, "threshold");
  if (!std::isfinite(t)) throw data_error("threshold must be finite");
  return {t};
}

inline ThresholdModel read_threshold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  try {
    return threshold_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

}  // namespace congruity
