#include "congruity/ingestion.hpp"

#include <gtest/gtest.h>

#include "congruity/random.hpp"
#include "test_util.hpp"

namespace congruity {
namespace {

using testing::TempDir;
using testing::write_text;

const char* kLineA =
    R"({"id":"a","media":"reuters","media_label":"general","title":"Covid vaccine rollout","article_url":"https://r/a","published_at":"2021-03-01T10:00:00Z","has_face":false})";
const char* kLineB =
    R"({"id":"b","media":"wnd","media_label":"fake","title":"Stock market rally","article_url":"https://w/b","published_at":"2021-03-02","thumbnail_url":"https://w/b.jpg","extra":42})";

ArticleRecord make_record(std::string id, std::string title, std::optional<bool> has_face = false,
                          std::optional<std::string> body = std::nullopt) {
  ArticleRecord r;
  r.id = std::move(id);
  r.media = "m";
  r.title = std::move(title);
  r.article_url = "https://example.org/" + r.id;
  r.published_at = "2021-01-01T00:00:00Z";
  r.has_face = has_face;
  r.body = std::move(body);
  return r;
}

TEST(LoadCorpus, EmptyFileGivesEmptyList) {
  TempDir dir;
  write_text(dir / "c.jsonl", "");
  EXPECT_TRUE(load_corpus(dir / "c.jsonl").empty());
}

TEST(LoadCorpus, ReadsRecordsInFileOrderAndIgnoresUnknownFields) {
  TempDir dir;
  write_text(dir / "c.jsonl", std::string(kLineA) + "\n" + kLineB + "\n");
  const auto records = load_corpus(dir / "c.jsonl");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_EQ(records[0].media_label, MediaLabel::general);
  EXPECT_EQ(records[0].has_face, std::optional<bool>(false));
  EXPECT_EQ(records[1].id, "b");
  EXPECT_EQ(records[1].media_label, MediaLabel::fake);
  EXPECT_EQ(records[1].thumbnail_url, std::optional<std::string>("https://w/b.jpg"));
  EXPECT_FALSE(records[1].has_face.has_value());
}

TEST(LoadCorpus, MissingTitleNamesLineAndField) {
  TempDir dir;
  const std::string no_title =
      R"({"id":"x","media":"m","media_label":"general","article_url":"u","published_at":"2021-01-01"})";
  write_text(dir / "c.jsonl", std::string(kLineA) + "\n" + no_title + "\n" + kLineB + "\n");
  try {
    load_corpus(dir / "c.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 2"), std::string::npos) << what;
    EXPECT_NE(what.find("'title'"), std::string::npos) << what;
  }
}

TEST(LoadCorpus, DuplicateIdIsRejected) {
  TempDir dir;
  write_text(dir / "c.jsonl", std::string(kLineA) + "\n" + kLineA + "\n");
  try {
    load_corpus(dir / "c.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate id 'a'"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, MalformedLineNamesLine) {
  TempDir dir;
  write_text(dir / "c.jsonl", std::string(kLineA) + "\n{not json\n");
  try {
    load_corpus(dir / "c.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, RejectsInvalidFieldValues) {
  TempDir dir;
  const std::vector<std::string> bad = {
      R"({"id":"","media":"m","media_label":"general","title":"t","article_url":"u","published_at":"2021-01-01"})",
      R"({"id":"x","media":"m","media_label":"satire","title":"t","article_url":"u","published_at":"2021-01-01"})",
      R"({"id":"x","media":"m","media_label":"general","title":"   ","article_url":"u","published_at":"2021-01-01"})",
      R"({"id":"x","media":"m","media_label":"general","title":"t","article_url":"u","published_at":"yesterday"})",
      R"({"id":"x","media":"m","media_label":"general","title":"t","article_url":"u","published_at":"2021-01-01","has_face":"no"})",
  };
  for (const auto& line : bad) {
    write_text(dir / "c.jsonl", line + "\n");
    EXPECT_THROW(load_corpus(dir / "c.jsonl"), Error) << line;
  }
}

TEST(LoadCorpus, MissingFileIsDataError) {
  try {
    load_corpus("/nonexistent/corpus.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/corpus.jsonl"), std::string::npos);
  }
}

std::vector<ArticleRecord> random_records(Rng& rng, std::size_t n) {
  static const std::vector<std::string> words = {"covid", "Stock", "PANDEMIC", "rally",
                                                 "vaccine", "Corona", "weather", "\xC3\xA9t\xC3\xA9"};
  std::vector<ArticleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string title;
    for (std::size_t w = 0, k = 1 + rng.uniform_index(4); w < k; ++w)
      title += (w ? " " : "") + words[rng.uniform_index(words.size())];
    std::optional<bool> face;
    if (const auto f = rng.uniform_index(3); f < 2) face = f == 1;
    std::optional<std::string> body;
    if (rng.uniform_index(2)) body = words[rng.uniform_index(words.size())] + " body text";
    ArticleRecord r = make_record("id-" + std::to_string(i), title, face, body);
    r.media_label = rng.uniform_index(2) ? MediaLabel::general : MediaLabel::fake;
    if (rng.uniform_index(2)) r.thumbnail_url = "https://img/" + std::to_string(i) + ".jpg";
    if (rng.uniform_index(2)) r.thumbnail_path = "img/" + std::to_string(i) + ".jpg";
    out.push_back(std::move(r));
  }
  return out;
}

TEST(CorpusRoundTrip, SaveThenLoadIsIdentityOnRandomRecords) {
  TempDir dir;
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto records = random_records(rng, rng.uniform_index(30));
    save_corpus(dir / "c.jsonl", records);
    EXPECT_EQ(load_corpus(dir / "c.jsonl"), records);
  }
}

TEST(CorpusFilter, NormalizesKeywords) {
  const CorpusFilter filter(covid_keywords());
  EXPECT_EQ(filter.keywords().size(), 10u);  // "corona" listed twice upstream
  const CorpusFilter mixed({"COVID", "", "covid", "Pandemic"});
  EXPECT_EQ(mixed.keywords(), (std::vector<std::string>{"covid", "pandemic"}));
}

TEST(FilterByKeywords, CaseFoldedSubstringOnTitle) {
  const auto kept = filter_by_keywords({make_record("a", "Covid vaccine rollout")}, CorpusFilter({"covid"}));
  EXPECT_EQ(kept.size(), 1u);
}

TEST(FilterByKeywords, UnrelatedTitleDroppedAgainstFullList) {
  const auto kept =
      filter_by_keywords({make_record("a", "Stock market rally")}, CorpusFilter(covid_keywords()));
  EXPECT_TRUE(kept.empty());
}

TEST(FilterByKeywords, EmptyKeywordListMatchesNothing) {
  const auto kept = filter_by_keywords({make_record("a", "Covid vaccine rollout")}, CorpusFilter(std::vector<std::string>{}));
  EXPECT_TRUE(kept.empty());
}

TEST(FilterByKeywords, BodyIsSearchedToo) {
  const auto r = make_record("a", "Markets today", false, std::string("The SARS-CoV-2 variant spread"));
  EXPECT_EQ(filter_by_keywords({r}, CorpusFilter(covid_keywords())).size(), 1u);
}

TEST(FilterByKeywords, SubstringMatchesInsideLongerTokens) {
  EXPECT_EQ(filter_by_keywords({make_record("a", "#covid19 update")}, CorpusFilter({"covid"})).size(), 1u);
}

TEST(FilterByFace, KeepsOnlyExplicitlyFaceless) {
  const std::vector<ArticleRecord> records = {make_record("no", "t", false), make_record("yes", "t", true),
                                              make_record("unknown", "t", std::nullopt)};
  const auto kept = filter_by_face(records);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "no");
}

std::vector<std::string> ids_of(const std::vector<ArticleRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.id);
  return ids;
}

TEST(FilterProperties, IdempotentOrderPreservingAndCommutative) {
  Rng rng(11);
  const CorpusFilter keywords(covid_keywords());
  for (int trial = 0; trial < 50; ++trial) {
    const auto records = random_records(rng, 40);
    const auto by_kw = filter_by_keywords(records, keywords);
    const auto by_face = filter_by_face(records);
    EXPECT_EQ(filter_by_keywords(by_kw, keywords), by_kw);
    EXPECT_EQ(filter_by_face(by_face), by_face);
    EXPECT_EQ(filter_by_face(by_kw), filter_by_keywords(by_face, keywords));

    // Survivors keep their relative input order.
    for (const auto& filtered : {by_kw, by_face}) {
      std::size_t cursor = 0;
      for (const auto& id : ids_of(filtered)) {
        while (cursor < records.size() && records[cursor].id != id) ++cursor;
        ASSERT_LT(cursor, records.size());
      }
    }
  }
}

TEST(ApplyFilter, CombinesKeywordAndFaceFilters) {
  const std::vector<ArticleRecord> records = {make_record("a", "Covid news", false),
                                              make_record("b", "Covid news", true),
                                              make_record("c", "Sports", false)};
  EXPECT_EQ(ids_of(apply_filter(records, CorpusFilter(covid_keywords(), true))),
            std::vector<std::string>{"a"});
  EXPECT_EQ(ids_of(apply_filter(records, CorpusFilter(covid_keywords(), false))),
            (std::vector<std::string>{"a", "b"}));
}

}  // namespace
}  // namespace congruity
