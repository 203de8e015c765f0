#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "congruity/detail/http.hpp"

#include "congruity/annotation/label_log.hpp"
#include "congruity/datagen.hpp"
#include "congruity/error.hpp"
#include "congruity/evaluation.hpp"
#include "congruity/ingestion.hpp"

namespace congruity {

struct QueueItem {
  std::string sample_id;
  std::string title;
  std::string image_url;
  double prediction_score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const QueueItem&) const = default;
};

struct NamedRanking {
  std::string name;
  std::vector<RankedItem> items;  // rank order
};

enum class AgreementRule { single, unanimous };

inline std::optional<AgreementRule> parse_agreement_rule(std::string_view s) {
  if (s == "single") return AgreementRule::single;
  if (s == "unanimous") return AgreementRule::unanimous;
  return std::nullopt;
}

struct PrecisionReport {
  PrecisionCurve curve;
  std::vector<std::string> flagged;  // annotators disagree; needs re-review
};

// Raised when the requested k reach records that are unlabeled or, under the
// unanimous rule, still disputed.
class InsufficientLabelsError : public Error {
 public:
  InsufficientLabelsError(std::vector<std::string> missing, std::vector<std::string> flagged)
      : Error(ErrorKind::data, "insufficient labels: " + std::to_string(missing.size()) +
                                   " unlabeled, " + std::to_string(flagged.size()) + " disputed"),
        missing_(std::move(missing)),
        flagged_(std::move(flagged)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }
  const std::vector<std::string>& flagged() const noexcept { return flagged_; }

 private:
  std::vector<std::string> missing_;
  std::vector<std::string> flagged_;
};

inline json to_json(const QueueItem& q) {
  return {{"sample_id", q.sample_id},
          {"title", q.title},
          {"image_url", q.image_url},
          {"prediction_score", q.prediction_score},
          {"rank", q.rank}};
}

// Highest-ranked items without a label from `annotator`, in queue order.
inline std::vector<QueueItem> next_unlabeled(const std::vector<QueueItem>& queue,
                                             const LabelIndex& labels,
                                             const std::string& annotator, std::size_t limit) {
  std::vector<QueueItem> out;
  for (const auto& item : queue) {
    if (out.size() >= limit) break;
    if (!labels.contains({item.sample_id, annotator})) out.push_back(item);
  }
  return out;
}

// Collapses per-annotator labels into one label per sample. Under `single`
// the most recent label counts; under `unanimous` disagreeing samples are
// left out and returned as flagged.
inline std::unordered_map<std::string, Congruity> resolve_labels(
    const LabelIndex& labels, AgreementRule rule, std::vector<std::string>* flagged) {
  std::map<std::string, std::vector<const AnnotationRecord*>> by_sample;
  for (const auto& [key, record] : labels) by_sample[key.first].push_back(&record);
  std::unordered_map<std::string, Congruity> resolved;
  for (const auto& [sample, records] : by_sample) {
    if (rule == AgreementRule::single) {
      const auto* latest = *std::max_element(
          records.begin(), records.end(),
          [](const auto* a, const auto* b) { return a->labeled_at < b->labeled_at; });
      resolved.emplace(sample, latest->label);
      continue;
    }
    const bool agree = std::all_of(records.begin(), records.end(),
                                   [&](const auto* r) { return r->label == records.front()->label; });
    if (agree) {
      resolved.emplace(sample, records.front()->label);
    } else if (flagged) {
      flagged->push_back(sample);
    }
  }
  return resolved;
}

// Curve computed by evaluation::top_k_precision on the resolved labels.
inline PrecisionReport precision_report(const std::vector<RankedItem>& ranking,
                                        const LabelIndex& labels, std::vector<std::size_t> ks,
                                        AgreementRule rule) {
  std::vector<std::string> flagged;
  const auto resolved = resolve_labels(labels, rule, &flagged);
  PrecisionReport report;
  // Only disputes that matter for this ranking.
  std::unordered_map<std::string, bool> in_ranking;
  for (const auto& item : ranking) in_ranking[item.record_id] = true;
  std::erase_if(flagged, [&](const std::string& id) { return !in_ranking.contains(id); });
  try {
    report.curve = top_k_precision(ranking, resolved, std::move(ks));
  } catch (const IdListError& e) {
    std::vector<std::string> missing, disputed;
    for (const auto& id : e.ids())
      (std::find(flagged.begin(), flagged.end(), id) != flagged.end() ? disputed : missing)
          .push_back(id);
    throw InsufficientLabelsError(std::move(missing), std::move(disputed));
  }
  report.flagged = std::move(flagged);
  return report;
}

// Serves the union of one or more rankings for annotation. The queue is
// ordered by each record's best rank across rankings (earlier rankings win
// ties); labels are shared across rankings.
class AnnotationService {
 public:
  AnnotationService(std::vector<NamedRanking> rankings, const std::vector<ArticleRecord>& corpus,
                    const std::filesystem::path& label_log_path,
                    std::optional<std::filesystem::path> ui_dir = std::nullopt)
      : rankings_(std::move(rankings)), log_(label_log_path), ui_dir_(std::move(ui_dir)) {
    if (rankings_.empty()) throw data_error("annotation service needs at least one ranking");
    for (const auto& r : corpus) corpus_.emplace(r.id, r);
    build_queue();
  }

  std::vector<QueueItem> queue(const std::string& annotator, std::size_t limit) const {
    std::shared_lock lock(mutex_);
    return next_unlabeled(queue_, log_.index(), annotator, limit);
  }

  const std::vector<QueueItem>& full_queue() const noexcept { return queue_; }

  AnnotationRecord submit(const std::string& sample_id, const std::string& annotator,
                          const std::string& label) {
    if (annotator.empty()) throw Error(ErrorKind::validation, "annotator must be non-empty");
    const Congruity parsed = congruity_or_throw(label);
    if (!queue_index_.contains(sample_id))
      throw Error(ErrorKind::not_found, "unknown sample_id '" + sample_id + "'");
    std::unique_lock lock(mutex_);
    return log_.append({sample_id, annotator, parsed, utc_now_iso8601()});
  }

  PrecisionReport precision(std::vector<std::size_t> ks, AgreementRule rule,
                            const std::string& ranking_name = {}) const {
    const NamedRanking& ranking = find_ranking(ranking_name);
    std::shared_lock lock(mutex_);
    return precision_report(ranking.items, log_.index(), std::move(ks), rule);
  }

  std::optional<json> sample_detail(const std::string& sample_id) const {
    auto it = queue_index_.find(sample_id);
    if (it == queue_index_.end()) return std::nullopt;
    json detail = to_json(queue_[it->second]);
    const ArticleRecord& r = corpus_.at(sample_id);
    detail["media"] = r.media;
    detail["media_label"] = to_string(r.media_label);
    detail["article_url"] = r.article_url;
    detail["published_at"] = r.published_at;
    if (r.thumbnail_url) detail["thumbnail_url"] = *r.thumbnail_url;
    json per_ranking = json::object();
    for (const auto& ranking : rankings_) {
      for (std::size_t i = 0; i < ranking.items.size(); ++i) {
        if (ranking.items[i].record_id == sample_id) {
          per_ranking[ranking.name] = {{"rank", i + 1},
                                       {"prediction_score", ranking.items[i].prediction_score}};
          break;
        }
      }
    }
    detail["rankings"] = per_ranking;
    json labels = json::array();
    std::shared_lock lock(mutex_);
    for (const auto& [key, record] : log_.index())
      if (key.first == sample_id) labels.push_back(annotation_to_json(record));
    detail["labels"] = labels;
    return detail;
  }

  std::size_t label_count() const {
    std::shared_lock lock(mutex_);
    return log_.index().size();
  }

  // Registers the HTTP API on `server`.
  void mount(httplib::Server& server) {
    server.Get("/api/queue", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string annotator = req.get_param_value("annotator");
      if (annotator.empty()) return send_error(res, 400, "query parameter 'annotator' is required");
      std::size_t limit = 20;
      if (req.has_param("limit")) {
        auto parsed = parse_count(req.get_param_value("limit"));
        if (!parsed || *parsed == 0) return send_error(res, 400, "limit must be a positive integer");
        limit = *parsed;
      }
      json body = json::array();
      for (const auto& item : queue(annotator, limit)) body.push_back(to_json(item));
      send_json(res, 200, body);
    });

    server.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
      auto field = [&](const char* key) {
        auto it = body.find(key);
        return it != body.end() && it->is_string() ? it->get<std::string>() : std::string();
      };
      try {
        const AnnotationRecord stored = submit(field("sample_id"), field("annotator"), field("label"));
        send_json(res, 201, annotation_to_json(stored));
      } catch (const Error& e) {
        send_error(res, e.kind() == ErrorKind::not_found ? 404 : e.kind() == ErrorKind::validation ? 400 : 500,
                   e.what());
      }
    });

    server.Get("/api/report/precision", [this](const httplib::Request& req, httplib::Response& res) {
      std::vector<std::size_t> ks;
      const std::string ks_text = req.get_param_value("ks");
      std::stringstream ss(ks_text);
      for (std::string part; std::getline(ss, part, ',');) {
        if (part.empty()) continue;
        auto k = parse_count(part);
        if (!k || *k == 0) return send_error(res, 400, "ks must be a comma-separated list of positive integers");
        ks.push_back(*k);
      }
      const std::string rule_text = req.has_param("rule") ? req.get_param_value("rule") : "single";
      const auto rule = parse_agreement_rule(rule_text);
      if (!rule) return send_error(res, 400, "rule must be single or unanimous");
      try {
        const PrecisionReport report = precision(std::move(ks), *rule, req.get_param_value("ranking"));
        json body = to_json(report.curve);
        body["flagged"] = report.flagged;
        body["rule"] = rule_text;
        send_json(res, 200, body);
      } catch (const InsufficientLabelsError& e) {
        send_json(res, 409, {{"error", e.what()}, {"missing_ids", e.missing()}, {"flagged_ids", e.flagged()}});
      } catch (const Error& e) {
        send_error(res, e.kind() == ErrorKind::not_found ? 404 : 400, e.what());
      }
    });

    server.Get(R"(/api/samples/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto detail = sample_detail(req.matches[1])) return send_json(res, 200, *detail);
      send_error(res, 404, "unknown sample_id");
    });

    server.Get(R"(/images/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto it = corpus_.find(req.matches[1]);
      if (it == corpus_.end() || !it->second.thumbnail_path) return send_error(res, 404, "no image");
      std::ifstream in(*it->second.thumbnail_path, std::ios::binary);
      if (!in) return send_error(res, 404, "image file not readable");
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      res.set_content(std::move(bytes), image_mime(*it->second.thumbnail_path));
    });

    if (ui_dir_) server.set_mount_point("/", ui_dir_->string());
  }

 private:
  const NamedRanking& find_ranking(const std::string& name) const {
    if (name.empty()) return rankings_.front();
    for (const auto& r : rankings_)
      if (r.name == name) return r;
    throw Error(ErrorKind::not_found, "unknown ranking '" + name + "'");
  }

  void build_queue() {
    struct Best {
      std::size_t rank;
      std::size_t ranking;
      double score;
    };
    std::unordered_map<std::string, Best> best;
    for (std::size_t r = 0; r < rankings_.size(); ++r) {
      const auto& items = rankings_[r].items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& id = items[i].record_id;
        if (!corpus_.contains(id)) throw data_error("ranked record '" + id + "' is not in the corpus");
        auto [it, inserted] = best.try_emplace(id, Best{i + 1, r, items[i].prediction_score});
        if (!inserted && i + 1 < it->second.rank) it->second = {i + 1, r, items[i].prediction_score};
      }
    }
    std::vector<std::pair<std::string, Best>> ordered(best.begin(), best.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second.rank != b.second.rank) return a.second.rank < b.second.rank;
      if (a.second.ranking != b.second.ranking) return a.second.ranking < b.second.ranking;
      return a.first < b.first;
    });
    for (const auto& [id, b] : ordered) {
      queue_index_.emplace(id, queue_.size());
      queue_.push_back({id, corpus_.at(id).title, "/images/" + id, b.score, b.rank});
    }
  }

  static std::optional<std::size_t> parse_count(const std::string& s) {
    if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), ::isdigit)) return std::nullopt;
    return static_cast<std::size_t>(std::stoul(s));
  }

  static std::string image_mime(const std::filesystem::path& path) {
    const std::string ext = ascii_lower(path.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "image/jpeg";
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
  }

  std::vector<NamedRanking> rankings_;
  std::unordered_map<std::string, ArticleRecord> corpus_;
  std::vector<QueueItem> queue_;
  std::unordered_map<std::string, std::size_t> queue_index_;
  LabelLog log_;
  std::optional<std::filesystem::path> ui_dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace congruity
