#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "congruity/ingestion.hpp"

namespace congruity {

namespace html_detail {

struct Tag {
  std::string name;
  std::map<std::string, std::string> attributes;  // keys lowercased
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x110000) {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Decodes the handful of character references that show up in attribute
// values of real pages (&amp; in query strings mostly). Anything else is
// left verbatim.
inline std::string decode_entities(std::string_view s) {
  static const std::map<std::string_view, char> named = {
      {"amp", '&'}, {"quot", '"'}, {"apos", '\''}, {"lt", '<'}, {"gt", '>'}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i];
      continue;
    }
    const std::string_view ref = s.substr(i + 1, semi - i - 1);
    if (auto it = named.find(ref); it != named.end()) {
      out += it->second;
      i = semi;
    } else if (ref.size() > 1 && ref[0] == '#') {
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const std::string digits(ref.substr(hex ? 2 : 1));
      char* end = nullptr;
      const unsigned long cp = digits.empty() ? 0 : std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
      if (!digits.empty() && end && *end == '\0' && cp > 0 && cp < 0x110000) {
        append_utf8(out, static_cast<std::uint32_t>(cp));
        i = semi;
      } else {
        out += s[i];
      }
    } else {
      out += s[i];
    }
  }
  return out;
}

// Parses attributes starting at `pos` (just past the tag name) up to the
// closing '>'. Unterminated quotes run to end of input.
inline std::size_t parse_attributes(std::string_view html, std::size_t pos,
                                    Tag& tag) {
  const std::size_t n = html.size();
  while (pos < n) {
    while (pos < n && (is_space(html[pos]) || html[pos] == '/')) ++pos;
    if (pos >= n) break;
    if (html[pos] == '>') return pos + 1;
    const std::size_t name_start = pos;
    while (pos < n && !is_space(html[pos]) && html[pos] != '=' &&
           html[pos] != '>' && html[pos] != '/')
      ++pos;
    std::string name = ascii_lower(html.substr(name_start, pos - name_start));
    while (pos < n && is_space(html[pos])) ++pos;
    std::string value;
    if (pos < n && html[pos] == '=') {
      ++pos;
      while (pos < n && is_space(html[pos])) ++pos;
      if (pos < n && (html[pos] == '"' || html[pos] == '\'')) {
        const char quote = html[pos++];
        const std::size_t end = html.find(quote, pos);
        const std::size_t stop = end == std::string_view::npos ? n : end;
        value = std::string(html.substr(pos, stop - pos));
        pos = stop == n ? n : stop + 1;
      } else {
        const std::size_t value_start = pos;
        while (pos < n && !is_space(html[pos]) && html[pos] != '>') ++pos;
        value = std::string(html.substr(value_start, pos - value_start));
      }
    }
    if (!name.empty()) tag.attributes.emplace(std::move(name), decode_entities(value));
  }
  return n;
}

// Collects <meta> and <link> tags, skipping comments and the bodies of
// <script>/<style>.
inline std::vector<Tag> scan_head_tags(std::string_view html) {
  std::vector<Tag> tags;
  const std::size_t n = html.size();
  std::size_t pos = 0;
  while ((pos = html.find('<', pos)) != std::string_view::npos) {
    if (html.substr(pos, 4) == "<!--") {
      const auto end = html.find("-->", pos + 4);
      if (end == std::string_view::npos) break;
      pos = end + 3;
      continue;
    }
    std::size_t name_end = pos + 1;
    while (name_end < n && std::isalpha(static_cast<unsigned char>(html[name_end])))
      ++name_end;
    const std::string name = ascii_lower(html.substr(pos + 1, name_end - pos - 1));
    if (name.empty()) {
      ++pos;
      continue;
    }
    Tag tag{name, {}};
    pos = parse_attributes(html, name_end, tag);
    if (name == "script" || name == "style") {
      const std::string lower_rest = ascii_lower(html.substr(pos));
      const auto close = lower_rest.find("</" + name);
      pos = close == std::string::npos ? n : pos + close;
      continue;
    }
    if (name == "meta" || name == "link") tags.push_back(std::move(tag));
  }
  return tags;
}

inline std::optional<std::string> attribute(const Tag& tag, const std::string& key) {
  auto it = tag.attributes.find(key);
  if (it == tag.attributes.end()) return std::nullopt;
  return it->second;
}

inline bool has_rel_token(const std::string& rel, std::string_view token) {
  std::size_t pos = 0;
  const std::string lower = ascii_lower(rel);
  while (pos < lower.size()) {
    while (pos < lower.size() && is_space(lower[pos])) ++pos;
    std::size_t end = pos;
    while (end < lower.size() && !is_space(lower[end])) ++end;
    if (std::string_view(lower).substr(pos, end - pos) == token) return true;
    pos = end;
  }
  return false;
}

}  // namespace html_detail

// Thumbnail URL from article HTML, by priority: og:image, twitter:image,
// link rel=image_src. Relative URLs are returned unresolved.
inline std::optional<std::string> extract_thumbnail_url(std::string_view html) {
  using namespace html_detail;
  const std::vector<Tag> tags = scan_head_tags(html);

  auto first_meta = [&](const char* key, const char* wanted,
                        const char* value_attr) -> std::optional<std::string> {
    for (const auto& tag : tags) {
      if (tag.name != "meta") continue;
      auto k = attribute(tag, key);
      if (!k || ascii_lower(trim(*k)) != wanted) continue;
      if (auto v = attribute(tag, value_attr)) {
        std::string url = trim(*v);
        if (!url.empty()) return url;
      }
    }
    return std::nullopt;
  };

  if (auto url = first_meta("property", "og:image", "content")) return url;
  if (auto url = first_meta("name", "twitter:image", "content")) return url;
  for (const auto& tag : tags) {
    if (tag.name != "link") continue;
    auto rel = attribute(tag, "rel");
    if (!rel || !has_rel_token(*rel, "image_src")) continue;
    if (auto href = attribute(tag, "href")) {
      std::string url = trim(*href);
      if (!url.empty()) return url;
    }
  }
  return std::nullopt;
}

}  // namespace congruity
