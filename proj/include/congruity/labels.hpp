#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "congruity/error.hpp"

namespace congruity {

enum class MediaLabel { general, fake };

// Positive class throughout the project is `incongruent`.
enum class Congruity { congruent, incongruent };

inline std::string_view to_string(MediaLabel label) {
  return label == MediaLabel::general ? "general" : "fake";
}

inline std::string_view to_string(Congruity label) {
  return label == Congruity::congruent ? "congruent" : "incongruent";
}

inline std::optional<MediaLabel> parse_media_label(std::string_view s) {
  if (s == "general") return MediaLabel::general;
  if (s == "fake") return MediaLabel::fake;
  return std::nullopt;
}

inline std::optional<Congruity> parse_congruity(std::string_view s) {
  if (s == "congruent") return Congruity::congruent;
  if (s == "incongruent") return Congruity::incongruent;
  return std::nullopt;
}

inline Congruity congruity_or_throw(std::string_view s) {
  if (auto label = parse_congruity(s)) return *label;
  throw Error(ErrorKind::validation,
              "invalid label '" + std::string(s) +
                  "' (expected congruent or incongruent)");
}

}  // namespace congruity
