#include "congruity/media_stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "congruity/random.hpp"

namespace congruity {
namespace {

// Reference values below were computed with scipy.stats (ttest_ind with
// equal_var=False, t.sf, special.betainc).

TEST(EmpiricalCdf, TiesCollapseToDistinctPoints) {
  const std::vector<double> scores = {0.3, 0.1, 0.3, 0.2};
  const auto cdf = empirical_cdf(scores);
  EXPECT_EQ(cdf.thresholds, (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_EQ(cdf.cumulative_probs, (std::vector<double>{0.25, 0.5, 1.0}));
}

TEST(EmpiricalCdf, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(empirical_cdf(std::vector<double>{}), Error);
  EXPECT_THROW(empirical_cdf(std::vector<double>{0.1, NAN}), Error);
}

TEST(EmpiricalCdf, PropertiesOnRandomSamples) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(1 + rng.uniform_index(200));
    for (auto& x : xs) x = static_cast<double>(rng.uniform_index(50)) / 10.0;
    const auto cdf = empirical_cdf(xs);
    ASSERT_EQ(cdf.thresholds.size(), cdf.cumulative_probs.size());
    EXPECT_EQ(cdf.cumulative_probs.back(), 1.0);
    for (std::size_t i = 0; i < cdf.thresholds.size(); ++i) {
      if (i) {
        EXPECT_LT(cdf.thresholds[i - 1], cdf.thresholds[i]);
        EXPECT_LT(cdf.cumulative_probs[i - 1], cdf.cumulative_probs[i]);
      }
      const auto le = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= cdf.thresholds[i]; });
      EXPECT_DOUBLE_EQ(cdf.cumulative_probs[i], static_cast<double>(le) / static_cast<double>(xs.size()));
    }
  }
}

TEST(IncompleteBeta, ReferenceValues) {
  EXPECT_NEAR(incomplete_beta(2.5, 0.5, 0.3), 0.018927124071945658, 1e-12);
  EXPECT_NEAR(incomplete_beta(10, 3, 0.9), 0.889130022255, 1e-10);
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_NEAR(incomplete_beta(1, 1, 0.37), 0.37, 1e-14);
}

TEST(StudentT, TwoSidedReferenceValues) {
  EXPECT_NEAR(student_t_two_sided_p(2.5, 3.7), 0.07182202291182675, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(0.3, 1.5), 0.8004721968035848, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(4.0, 20), 0.0007035232931283182, 1e-12);
  EXPECT_NEAR(student_t_two_sided_p(1.96, 1000), 0.05027318495574871, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(-2.0, 5), 0.10193947882985828, 1e-10);
  EXPECT_NEAR(student_t_two_sided_p(50, 3), 1.761715204127195e-05, 1e-12);
  EXPECT_EQ(student_t_two_sided_p(0.0, 5), 1.0);
}

// T = Z / sqrt(chi2_df / df) simulated directly; the tail frequency must agree
// with the analytic p-value.
TEST(StudentT, MonteCarloTailAgreement) {
  Rng rng(2024);
  const int df = 5;
  const int n = 200000;
  for (const double t : {0.5, 1.0, 2.0, 3.0}) {
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      double chi2 = 0;
      for (int k = 0; k < df; ++k) {
        const double z = rng.normal();
        chi2 += z * z;
      }
      const double sample = rng.normal() / std::sqrt(chi2 / df);
      if (std::abs(sample) >= t) ++hits;
    }
    const double p = student_t_two_sided_p(t, df);
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 5 * se) << "t=" << t;
  }
}

TEST(Welch, ShiftedIntegers) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
  const auto r = two_sample_t(a, b);
  EXPECT_NEAR(r.t_statistic, -1.0, 1e-12);
  EXPECT_NEAR(r.degrees_freedom, 8.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.34659350708733416, 1e-10);
}

TEST(Welch, UnequalSizesAndVariances) {
  const std::vector<double> a = {0.1, 0.5, 0.9, 0.3}, b = {0.2, 0.25, 0.7, 1.3, 0.8, 0.05};
  const auto r = two_sample_t(a, b);
  EXPECT_NEAR(r.t_statistic, -0.3887589243470117, 1e-12);
  EXPECT_NEAR(r.degrees_freedom, 7.854869308950518, 1e-10);
  EXPECT_NEAR(r.p_value, 0.7077798795122647, 1e-10);
  const std::vector<double> c = {1, 2, 3}, d = {4, 5, 6, 7, 8, 9, 10};
  EXPECT_NEAR(two_sample_t(c, d).p_value, 0.00117359141817428, 1e-10);
}

TEST(Welch, DegenerateInputs) {
  const std::vector<double> one = {1.0}, two = {1.0, 2.0};
  EXPECT_THROW(two_sample_t(one, two), Error);
  const std::vector<double> flat = {3, 3, 3}, flat2 = {3, 3};
  EXPECT_EQ(two_sample_t(flat, flat2).p_value, 1.0);
  const std::vector<double> other = {4, 4};
  EXPECT_THROW(two_sample_t(flat, other), Error);
}

TEST(CohensD, ReferenceValues) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
  EXPECT_NEAR(cohens_d(a, b), -1.0 / std::sqrt(2.5), 1e-14);
  const std::vector<double> c = {0.1, 0.5, 0.9, 0.3}, d = {0.2, 0.25, 0.7, 1.3, 0.8, 0.05};
  EXPECT_NEAR(cohens_d(c, d), -0.23408229439226091, 1e-12);
  const std::vector<double> flat = {3, 3};
  EXPECT_THROW(cohens_d(flat, flat), Error);
}

TEST(MediaReport, GroupsByLabel) {
  const std::vector<ScoredPair> scored = {{"a", "g", MediaLabel::general, 1},
                                          {"b", "f", MediaLabel::fake, 2},
                                          {"c", "g", MediaLabel::general, 2},
                                          {"d", "f", MediaLabel::fake, 3},
                                          {"e", "g", MediaLabel::general, 3},
                                          {"f", "f", MediaLabel::fake, 4}};
  const auto report = media_report(scored);
  EXPECT_EQ(report.comparison.n_a, 3u);
  EXPECT_EQ(report.comparison.n_b, 3u);
  EXPECT_DOUBLE_EQ(report.comparison.mean_a, 2.0);
  EXPECT_DOUBLE_EQ(report.comparison.mean_b, 3.0);
  EXPECT_EQ(report.cdf_a.thresholds, (std::vector<double>{1, 2, 3}));

  const auto j = to_json(report);
  EXPECT_EQ(j["comparison"]["group_a_name"], "general");
  EXPECT_TRUE(j["cdfs"].contains("fake"));

  std::ostringstream csv;
  write_cdf_csv(csv, report);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "group,threshold,cumulative_prob");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(MediaReport, NeedsBothGroups) {
  const std::vector<ScoredPair> scored = {{"a", "g", MediaLabel::general, 1},
                                          {"b", "g", MediaLabel::general, 2}};
  EXPECT_THROW(media_report(scored), Error);
}

}  // namespace
}  // namespace congruity
