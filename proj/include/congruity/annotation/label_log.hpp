#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <utility>

#include "congruity/error.hpp"
#include "congruity/labels.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator;
  Congruity label = Congruity::congruent;
  std::string labeled_at;

  bool operator==(const AnnotationRecord&) const = default;
};

// Latest label per (sample_id, annotator).
using LabelIndex = std::map<std::pair<std::string, std::string>, AnnotationRecord>;

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

inline json annotation_to_json(const AnnotationRecord& r) {
  return {{"sample_id", r.sample_id},
          {"annotator", r.annotator},
          {"label", to_string(r.label)},
          {"labeled_at", r.labeled_at}};
}

inline AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.sample_id = require_string(j, "sample_id");
  r.annotator = require_string(j, "annotator");
  auto label = parse_congruity(require_string(j, "label"));
  if (!label) throw data_error("field 'label' must be congruent or incongruent");
  r.label = *label;
  r.labeled_at = require_string(j, "labeled_at");
  return r;
}

// Append-only newline-delimited label log. Every append is written and
// fsync'ed before it returns; opening replays the file, last write wins.
// A final line without its newline is an interrupted append that was never
// acknowledged: it is cut off on open.
class LabelLog {
 public:
  explicit LabelLog(std::filesystem::path path) : path_(std::move(path)) {
    replay();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0)
      throw data_error("cannot open label log " + path_.string() + ": " + std::strerror(errno));
  }

  LabelLog(const LabelLog&) = delete;
  LabelLog& operator=(const LabelLog&) = delete;

  ~LabelLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  const AnnotationRecord& append(const AnnotationRecord& record) {
    const std::string line = annotation_to_json(record).dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw data_error("label log write failed: " + std::string(std::strerror(errno)));
      }
      written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0)
      throw data_error("label log fsync failed: " + std::string(std::strerror(errno)));
    return index_.insert_or_assign({record.sample_id, record.annotator}, record).first->second;
  }

  const LabelIndex& index() const noexcept { return index_; }
  std::size_t replayed() const noexcept { return replayed_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void replay() {
    if (!std::filesystem::exists(path_)) return;
    std::string content;
    {
      std::ifstream in(path_, std::ios::binary);
      if (!in) throw data_error("cannot read label log " + path_.string());
      content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const auto complete = content.rfind('\n');
    const std::size_t keep = complete == std::string::npos ? 0 : complete + 1;
    if (keep != content.size()) {
      std::filesystem::resize_file(path_, keep);
      content.resize(keep);
    }
    std::size_t start = 0, line_no = 0;
    while (start < content.size()) {
      const auto end = content.find('\n', start);
      const std::string line = content.substr(start, end - start);
      start = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        AnnotationRecord r = annotation_from_json(json::parse(line));
        index_.insert_or_assign({r.sample_id, r.annotator}, std::move(r));
        ++replayed_;
      } catch (const std::exception& e) {
        throw data_error(path_.string() + ": line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::filesystem::path path_;
  int fd_ = -1;
  LabelIndex index_;
  std::size_t replayed_ = 0;
};

}  // namespace congruity
