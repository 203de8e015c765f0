#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace congruity {

enum class ErrorKind {
  usage,
  data,
  contract,
  service,
  service_unreachable,
  not_found,
  validation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error data_error(const std::string& what) {
  return Error(ErrorKind::data, what);
}

// Error that carries the list of offending ids (missing embeddings, missing
// labels, ...), so callers can act on them without parsing the message.
class IdListError : public Error {
 public:
  IdListError(ErrorKind kind, const std::string& prefix,
              std::vector<std::string> ids)
      : Error(kind, format(prefix, ids)), ids_(std::move(ids)) {}

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  static std::string format(const std::string& prefix,
                            const std::vector<std::string>& ids) {
    std::string out = prefix + " (" + std::to_string(ids.size()) + "):";
    for (const auto& id : ids) out += " " + id;
    return out;
  }

  std::vector<std::string> ids_;
};

}  // namespace congruity
