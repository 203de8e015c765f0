#include "congruity/datagen.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

namespace congruity {
namespace {

ArticleRecord record(const std::string& id, const std::string& media) {
  ArticleRecord r;
  r.id = id;
  r.media = media;
  r.title = "title " + id;
  r.article_url = "u";
  r.published_at = "2021-01-01";
  return r;
}

std::vector<ScoredPair> scores(const std::vector<std::pair<std::string, double>>& items) {
  std::vector<ScoredPair> out;
  for (const auto& [id, s] : items) out.push_back({id, "m", MediaLabel::general, s});
  return out;
}

TEST(SelectCongruent, TopQuantileWithIdTieBreak) {
  const auto scored = scores({{"e", 0.5}, {"a", 0.9}, {"d", 0.5}, {"c", 0.7}, {"b", 0.1},
                              {"f", 0.5}, {"g", 0.2}, {"h", 0.3}});
  EXPECT_EQ(select_congruent(scored, {}), (std::vector<std::string>{"a", "c", "d", "e", "f", "h"}));
  GenerationConfig half;
  half.congruent_quantile = 0.5;
  EXPECT_EQ(select_congruent(scored, half), (std::vector<std::string>{"a", "c", "d", "e"}));
}

TEST(SelectCongruent, FloorOfQuantileTimesCount) {
  GenerationConfig config;
  for (std::size_t n : {1u, 3u, 4u, 7u, 100u, 8223u}) {
    std::vector<ScoredPair> scored;
    for (std::size_t i = 0; i < n; ++i)
      scored.push_back({"r" + std::to_string(i), "m", MediaLabel::general, static_cast<double>(i)});
    EXPECT_EQ(select_congruent(scored, config).size(), n * 3 / 4) << n;
  }
}

TEST(SelectCongruent, RejectsEmptyAndFakeSource) {
  EXPECT_THROW(select_congruent({}, {}), Error);
  std::vector<ScoredPair> scored = scores({{"a", 0.1}});
  scored.push_back({"z", "wnd", MediaLabel::fake, 0.9});
  EXPECT_THROW(select_congruent(scored, {}), Error);
}

std::vector<std::string> numbered_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

TEST(SplitPools, FractionSizes) {
  GenerationConfig config;
  const auto pools = split_pools(numbered_ids(8223), config);
  EXPECT_EQ(pools.train.size(), 6578u);
  EXPECT_EQ(pools.validation.size(), 822u);
  EXPECT_EQ(pools.test.size(), 823u);
}

TEST(SplitPools, ExactCountsOverrideFractions) {
  GenerationConfig config;
  config.pool_counts = std::array<std::size_t, 3>{6575, 824, 824};
  const auto pools = split_pools(numbered_ids(8223), config);
  EXPECT_EQ(pools.train.size(), 6575u);
  EXPECT_EQ(pools.validation.size(), 824u);
  EXPECT_EQ(pools.test.size(), 824u);
  config.pool_counts = std::array<std::size_t, 3>{1, 1, 1};
  EXPECT_THROW(split_pools(numbered_ids(4), config), Error);
}

TEST(SplitPools, DisjointCoveringAndSeeded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenerationConfig config;
    config.seed = seed;
    const auto ids = numbered_ids(57);
    const auto pools = split_pools(ids, config);
    std::multiset<std::string> all;
    for (Pool p : kAllPools) all.insert(pools[p].begin(), pools[p].end());
    EXPECT_EQ(all, std::multiset<std::string>(ids.begin(), ids.end()));
    EXPECT_EQ(split_pools(ids, config), pools);
    config.seed = seed + 100;
    EXPECT_NE(split_pools(ids, config), pools);
  }
}

TEST(SplitPools, RejectsDuplicatesAndBadFractions) {
  EXPECT_THROW(split_pools({"a", "b", "a"}, {}), Error);
  GenerationConfig config;
  config.pool_fractions = {0.5, 0.5, 0.5};
  EXPECT_THROW(split_pools({"a"}, config), Error);
}

TEST(GenerateSamples, FourRecordPoolIsFullyDetermined) {
  const std::vector<ArticleRecord> corpus = {record("a1", "A"), record("a2", "A"), record("b1", "B"),
                                             record("b2", "B")};
  const auto index = index_corpus(corpus);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto samples = generate_samples({"a1", "a2", "b1", "b2"}, index, seed, Pool::validation);
    ASSERT_EQ(samples.size(), 12u);
    for (const auto& s : samples) {
      EXPECT_EQ(s.pool, Pool::validation);
      EXPECT_EQ(s.sample_id, "validation/" + s.image_record_id + "/" + std::string(to_string(s.origin)));
      const std::string media = s.image_record_id.substr(0, 1);
      const std::string sibling = s.image_record_id == "a1"   ? "a2"
                                  : s.image_record_id == "a2" ? "a1"
                                  : s.image_record_id == "b1" ? "b2"
                                                              : "b1";
      switch (s.origin) {
        case Origin::original:
          EXPECT_EQ(s.title_record_id, s.image_record_id);
          EXPECT_EQ(s.label, Congruity::congruent);
          break;
        case Origin::same_media:
          EXPECT_EQ(s.title_record_id, sibling);
          EXPECT_EQ(s.label, Congruity::incongruent);
          break;
        case Origin::cross_media:
          EXPECT_NE(s.title_record_id.substr(0, 1), media);
          EXPECT_EQ(s.label, Congruity::incongruent);
          break;
      }
    }
  }
}

TEST(GenerateSamples, ThreeSamplesPerRecordWithDistinctIds) {
  std::vector<ArticleRecord> corpus;
  std::vector<std::string> ids;
  for (int i = 0; i < 60; ++i) {
    corpus.push_back(record("r" + std::to_string(i), "m" + std::to_string(i % 4)));
    ids.push_back(corpus.back().id);
  }
  const auto index = index_corpus(corpus);
  const auto samples = generate_samples(ids, index, 77);
  ASSERT_EQ(samples.size(), 180u);
  std::set<std::string> sample_ids;
  const std::set<std::string> pool(ids.begin(), ids.end());
  for (const auto& s : samples) {
    sample_ids.insert(s.sample_id);
    EXPECT_TRUE(pool.contains(s.title_record_id));
    const auto& img_media = index.at(s.image_record_id).media;
    const auto& title_media = index.at(s.title_record_id).media;
    if (s.origin == Origin::same_media) {
      EXPECT_EQ(img_media, title_media);
      EXPECT_NE(s.image_record_id, s.title_record_id);
    }
    if (s.origin == Origin::cross_media) {
      EXPECT_NE(img_media, title_media);
    }
  }
  EXPECT_EQ(sample_ids.size(), 180u);
  EXPECT_EQ(generate_samples(ids, index, 77), samples);
}

TEST(GenerateSamples, ReferenceSplitSampleCounts) {
  std::vector<ArticleRecord> corpus;
  std::vector<std::string> ids;
  for (int i = 0; i < 8223; ++i) {
    corpus.push_back(record("r" + std::to_string(i), "m" + std::to_string(i % 9)));
    ids.push_back(corpus.back().id);
  }
  GenerationConfig config;
  config.pool_counts = std::array<std::size_t, 3>{6575, 824, 824};
  const auto pools = split_pools(ids, config);
  const auto index = index_corpus(corpus);
  EXPECT_EQ(generate_samples(pools.train, index, 1, Pool::train).size(), 19725u);
  EXPECT_EQ(generate_samples(pools.validation, index, 2, Pool::validation).size(), 2472u);
  EXPECT_EQ(generate_samples(pools.test, index, 3, Pool::test).size(), 2472u);
}

TEST(GenerateSamples, RejectsImpossiblePools) {
  const auto index = index_corpus({record("a1", "A"), record("a2", "A"), record("b1", "B")});
  EXPECT_THROW(generate_samples({"a1", "a2"}, index, 0), Error);        // single media
  EXPECT_THROW(generate_samples({"a1", "a2", "b1"}, index, 0), Error);  // lone b1
  EXPECT_THROW(generate_samples({"a1", "zz"}, index, 0), Error);
  EXPECT_THROW(generate_samples({"a1", "a1"}, index, 0), Error);
  EXPECT_TRUE(generate_samples({}, index, 0).empty());
}

// Pearson chi-squared against a uniform distribution over the candidates.
double chi_squared(const std::map<std::string, int>& counts, std::size_t categories, int total) {
  const double expected = static_cast<double>(total) / static_cast<double>(categories);
  double stat = 0.0;
  for (const auto& [id, c] : counts) stat += (c - expected) * (c - expected) / expected;
  stat += static_cast<double>(categories - counts.size()) * expected;
  return stat;
}

TEST(GenerateSamples, DrawsAreUniformOverCandidates) {
  std::vector<ArticleRecord> corpus;
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) corpus.push_back(record("a" + std::to_string(i), "A"));
  for (int i = 0; i < 5; ++i) corpus.push_back(record("b" + std::to_string(i), "B"));
  for (const auto& r : corpus) ids.push_back(r.id);
  const auto index = index_corpus(corpus);

  std::map<std::string, int> same, cross;
  const int trials = 10000;
  for (int seed = 0; seed < trials; ++seed) {
    for (const auto& s : generate_samples(ids, index, static_cast<std::uint64_t>(seed))) {
      if (s.image_record_id != "a3") continue;
      if (s.origin == Origin::same_media) ++same[s.title_record_id];
      if (s.origin == Origin::cross_media) ++cross[s.title_record_id];
    }
  }
  EXPECT_FALSE(same.contains("a3"));
  EXPECT_EQ(same.size(), 9u);
  EXPECT_EQ(cross.size(), 5u);
  // chi2 quantile at 0.999 with 8 and 4 degrees of freedom.
  EXPECT_LT(chi_squared(same, 9, trials), 26.12448155837614);
  EXPECT_LT(chi_squared(cross, 5, trials), 18.46682695290317);
}

TEST(SampleIo, RoundTripAndConsistencyCheck) {
  testing::TempDir dir;
  const auto index = index_corpus({record("a1", "A"), record("a2", "A"), record("b1", "B"), record("b2", "B")});
  const auto samples = generate_samples({"a1", "a2", "b1", "b2"}, index, 5, Pool::test);
  write_samples(dir / "p.jsonl", samples);
  EXPECT_EQ(read_samples(dir / "p.jsonl"), samples);

  testing::write_text(dir / "bad.jsonl",
                      R"({"sample_id":"x","image_record_id":"a1","title_record_id":"a2","label":"congruent","origin":"same_media","pool":"test"})"
                      "\n");
  EXPECT_THROW(read_samples(dir / "bad.jsonl"), Error);
}

TEST(PoolsJson, RoundTrip) {
  Pools pools{{"a", "b"}, {"c"}, {"d"}};
  EXPECT_EQ(pools_from_json(pools_to_json(pools)), pools);
}

}  // namespace
}  // namespace congruity
