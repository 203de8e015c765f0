#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "congruity/error.hpp"
#include "congruity/ndjson.hpp"
#include "congruity/scoring.hpp"

namespace congruity {

struct EmpiricalCDF {
  std::vector<double> thresholds;  // distinct sample values, ascending
  std::vector<double> cumulative_probs;
};

struct GroupComparison {
  std::string group_a_name;
  std::string group_b_name;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t_statistic = 0.0;
  double degrees_freedom = 0.0;
  double p_value = 1.0;
  double cohens_d = 0.0;
};

struct WelchResult {
  double t_statistic;
  double degrees_freedom;
  double p_value;
};

// Right-continuous ECDF evaluated at each distinct sample value.
inline EmpiricalCDF empirical_cdf(std::span<const double> scores) {
  if (scores.empty()) throw data_error("empirical CDF of an empty sample");
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted)
    if (!std::isfinite(s)) throw data_error("non-finite score in CDF input");
  std::sort(sorted.begin(), sorted.end());
  EmpiricalCDF cdf;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.thresholds.push_back(sorted[i]);
    cdf.cumulative_probs.push_back(static_cast<double>(i + 1) / n);
  }
  cdf.cumulative_probs.back() = 1.0;
  return cdf;
}

namespace stats_detail {

inline constexpr double kBetaTolerance = 1e-10;
inline constexpr int kBetaMaxIterations = 10000;

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kBetaTolerance) return h;
  }
  throw Error(ErrorKind::data, "incomplete beta continued fraction did not converge");
}

inline double mean(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Sample variance, n-1 denominator, two-pass.
inline double variance(std::span<const double> xs, double m) {
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

inline void require_group(std::span<const double> xs, const char* name) {
  if (xs.size() < 2)
    throw data_error(std::string("group ") + name + " needs at least 2 values, has " +
                     std::to_string(xs.size()));
  for (double x : xs)
    if (!std::isfinite(x)) throw data_error(std::string("non-finite value in group ") + name);
}

}  // namespace stats_detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw data_error("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * stats_detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * stats_detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw data_error("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

// Welch's unequal-variance t-test, two-sided.
inline WelchResult two_sample_t(std::span<const double> a, std::span<const double> b) {
  using namespace stats_detail;
  require_group(a, "a");
  require_group(b, "b");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double qa = variance(a, ma) / na, qb = variance(b, mb) / nb;
  const double se2 = qa + qb;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
    throw data_error("t-test undefined: both groups have zero variance and different means");
  }
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  return {t, df, student_t_two_sided_p(t, df)};
}

// Standardized mean difference with the pooled (n-1 weighted) SD.
inline double cohens_d(std::span<const double> a, std::span<const double> b) {
  using namespace stats_detail;
  require_group(a, "a");
  require_group(b, "b");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double pooled =
      ((na - 1.0) * variance(a, ma) + (nb - 1.0) * variance(b, mb)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) throw data_error("Cohen's d undefined: pooled variance is zero");
  return (ma - mb) / std::sqrt(pooled);
}

inline GroupComparison compare_groups(const std::string& name_a, std::span<const double> a,
                                      const std::string& name_b, std::span<const double> b) {
  const WelchResult welch = two_sample_t(a, b);
  GroupComparison out;
  out.group_a_name = name_a;
  out.group_b_name = name_b;
  out.n_a = a.size();
  out.n_b = b.size();
  out.mean_a = stats_detail::mean(a);
  out.mean_b = stats_detail::mean(b);
  out.t_statistic = welch.t_statistic;
  out.degrees_freedom = welch.degrees_freedom;
  out.p_value = welch.p_value;
  out.cohens_d = cohens_d(a, b);
  return out;
}

struct StatsReport {
  GroupComparison comparison;
  EmpiricalCDF cdf_a;
  EmpiricalCDF cdf_b;
};

// General vs fake media over a scored-pair stream.
inline StatsReport media_report(const std::vector<ScoredPair>& scored) {
  std::vector<double> general, fake;
  for (const auto& s : scored)
    (s.media_label == MediaLabel::general ? general : fake).push_back(s.score);
  return {compare_groups("general", general, "fake", fake), empirical_cdf(general),
          empirical_cdf(fake)};
}

inline json to_json(const EmpiricalCDF& cdf) {
  return {{"thresholds", cdf.thresholds}, {"cumulative_probs", cdf.cumulative_probs}};
}

inline json to_json(const GroupComparison& c) {
  return {{"group_a_name", c.group_a_name}, {"group_b_name", c.group_b_name},
          {"n_a", c.n_a},                   {"n_b", c.n_b},
          {"mean_a", c.mean_a},             {"mean_b", c.mean_b},
          {"t_statistic", c.t_statistic},   {"degrees_freedom", c.degrees_freedom},
          {"p_value", c.p_value},           {"cohens_d", c.cohens_d}};
}

inline json to_json(const StatsReport& r) {
  return {{"comparison", to_json(r.comparison)},
          {"cdfs",
           {{r.comparison.group_a_name, to_json(r.cdf_a)},
            {r.comparison.group_b_name, to_json(r.cdf_b)}}}};
}

// CSV rows: group,threshold,cumulative_prob
inline void write_cdf_csv(std::ostream& out, const StatsReport& r) {
  out << "group,threshold,cumulative_prob\n";
  auto emit = [&](const std::string& name, const EmpiricalCDF& cdf) {
    for (std::size_t i = 0; i < cdf.thresholds.size(); ++i)
      out << name << ',' << json(cdf.thresholds[i]).dump() << ','
          << json(cdf.cumulative_probs[i]).dump() << '\n';
  };
  emit(r.comparison.group_a_name, r.cdf_a);
  emit(r.comparison.group_b_name, r.cdf_b);
}

}  // namespace congruity
