#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "congruity/error.hpp"

namespace congruity {

using json = nlohmann::json;

namespace ndjson {

// Calls `on_object(object, line_number)` for every non-blank line. Parse
// failures and exceptions thrown by the callback are rethrown prefixed with
// the path and 1-based line number.
inline void for_each(const std::filesystem::path& path,
                     const std::function<void(const json&, std::size_t)>& on_object) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error(path.string() + ": line " + std::to_string(line_no) +
                       ": malformed record: " + e.what());
    }
    try {
      on_object(object, line_no);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": line " +
                                std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw data_error(path.string() + ": line " + std::to_string(line_no) +
                       ": " + e.what());
    }
  }
}

template <typename T, typename Encode>
void write(const std::filesystem::path& path, const std::vector<T>& items,
           Encode&& encode) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  for (const auto& item : items) out << encode(item).dump() << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

}  // namespace ndjson

// Field accessors that name the missing or mistyped field.
inline const json& require_field(const json& object, const char* field) {
  if (!object.is_object()) throw data_error("record is not an object");
  auto it = object.find(field);
  if (it == object.end() || it->is_null())
    throw data_error(std::string("missing required field '") + field + "'");
  return *it;
}

inline std::string require_string(const json& object, const char* field) {
  const json& value = require_field(object, field);
  if (!value.is_string())
    throw data_error(std::string("field '") + field + "' must be a string");
  return value.get<std::string>();
}

inline double require_number(const json& object, const char* field) {
  const json& value = require_field(object, field);
  if (!value.is_number())
    throw data_error(std::string("field '") + field + "' must be a number");
  return value.get<double>();
}

inline std::optional<std::string> optional_string(const json& object,
                                                  const char* field) {
  auto it = object.find(field);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw data_error(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

}  // namespace congruity
