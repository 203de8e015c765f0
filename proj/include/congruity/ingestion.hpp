#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <unordered_set>
#include <vector>

#include "congruity/error.hpp"
#include "congruity/labels.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

struct ArticleRecord {
  std::string id;
  std::string media;
  MediaLabel media_label = MediaLabel::general;
  std::string title;
  std::string article_url;
  std::optional<std::string> thumbnail_url;
  std::optional<std::string> thumbnail_path;
  std::string published_at;
  std::optional<bool> has_face;
  std::optional<std::string> body;

  bool operator==(const ArticleRecord&) const = default;
};

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

inline bool is_iso8601(const std::string& s) {
  static const std::regex pattern(
      R"(^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$)");
  return std::regex_match(s, pattern);
}

inline void validate(const ArticleRecord& r) {
  if (r.id.empty()) throw data_error("field 'id' must be non-empty");
  if (trim(r.title).empty())
    throw data_error("field 'title' is empty for record '" + r.id + "'");
  if (!is_iso8601(r.published_at))
    throw data_error("field 'published_at' is not an ISO-8601 timestamp: '" +
                     r.published_at + "'");
}

inline ArticleRecord record_from_json(const json& j) {
  ArticleRecord r;
  r.id = require_string(j, "id");
  r.media = require_string(j, "media");
  const std::string label = require_string(j, "media_label");
  auto media_label = parse_media_label(label);
  if (!media_label)
    throw data_error("field 'media_label' must be general or fake, got '" +
                     label + "'");
  r.media_label = *media_label;
  r.title = require_string(j, "title");
  r.article_url = require_string(j, "article_url");
  r.thumbnail_url = optional_string(j, "thumbnail_url");
  r.thumbnail_path = optional_string(j, "thumbnail_path");
  r.published_at = require_string(j, "published_at");
  if (auto it = j.find("has_face"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw data_error("field 'has_face' must be a boolean");
    r.has_face = it->get<bool>();
  }
  r.body = optional_string(j, "body");
  validate(r);
  return r;
}

inline json record_to_json(const ArticleRecord& r) {
  json j = {{"id", r.id},
            {"media", r.media},
            {"media_label", to_string(r.media_label)},
            {"title", r.title},
            {"article_url", r.article_url}};
  if (r.thumbnail_url) j["thumbnail_url"] = *r.thumbnail_url;
  if (r.thumbnail_path) j["thumbnail_path"] = *r.thumbnail_path;
  j["published_at"] = r.published_at;
  if (r.has_face) j["has_face"] = *r.has_face;
  if (r.body) j["body"] = *r.body;
  return j;
}

// Newline-delimited records, file order preserved. Unknown fields are ignored.
inline std::vector<ArticleRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<ArticleRecord> records;
  std::unordered_set<std::string> seen;
  ndjson::for_each(path, [&](const json& j, std::size_t) {
    ArticleRecord r = record_from_json(j);
    if (!seen.insert(r.id).second)
      throw data_error("duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  });
  return records;
}

inline void save_corpus(const std::filesystem::path& path,
                        const std::vector<ArticleRecord>& records) {
  ndjson::write(path, records, record_to_json);
}

class CorpusFilter {
 public:
  CorpusFilter() = default;

  // Keywords are lowercased, deduplicated (first occurrence kept) and empty
  // entries dropped.
  explicit CorpusFilter(const std::vector<std::string>& keywords,
                        bool require_no_face = false)
      : require_no_face_(require_no_face) {
    std::unordered_set<std::string> seen;
    for (const auto& raw : keywords) {
      std::string k = ascii_lower(raw);
      if (k.empty() || !seen.insert(k).second) continue;
      keywords_.push_back(std::move(k));
    }
  }

  const std::vector<std::string>& keywords() const { return keywords_; }
  bool require_no_face() const { return require_no_face_; }

 private:
  std::vector<std::string> keywords_;
  bool require_no_face_ = false;
};

// COVID-19 keyword list used to build the topic-restricted corpus. The
// upstream list repeats "corona"; CorpusFilter deduplicates it.
inline std::vector<std::string> covid_keywords() {
  return {"coronavirus", "corona",       "covid-19",      "corona virus",
          "covid",       "covid19",      "sars-cov-2",    "pandemic",
          "chinese virus", "chinesevirus", "corona"};
}

inline bool matches_keywords(const ArticleRecord& r,
                             const std::vector<std::string>& keywords) {
  if (keywords.empty()) return false;
  const std::string title = ascii_lower(r.title);
  const std::string body = r.body ? ascii_lower(*r.body) : std::string();
  for (const auto& k : keywords) {
    if (title.find(k) != std::string::npos) return true;
    if (!body.empty() && body.find(k) != std::string::npos) return true;
  }
  return false;
}

inline std::vector<ArticleRecord> filter_by_keywords(
    const std::vector<ArticleRecord>& records, const CorpusFilter& filter) {
  std::vector<ArticleRecord> kept;
  std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
               [&](const ArticleRecord& r) {
                 return matches_keywords(r, filter.keywords());
               });
  return kept;
}

// Unknown face flags are dropped along with positive ones.
inline std::vector<ArticleRecord> filter_by_face(
    const std::vector<ArticleRecord>& records) {
  std::vector<ArticleRecord> kept;
  std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
               [](const ArticleRecord& r) { return r.has_face == false; });
  return kept;
}

inline std::vector<ArticleRecord> apply_filter(
    const std::vector<ArticleRecord>& records, const CorpusFilter& filter) {
  auto kept = filter_by_keywords(records, filter);
  return filter.require_no_face() ? filter_by_face(kept) : kept;
}

}  // namespace congruity
