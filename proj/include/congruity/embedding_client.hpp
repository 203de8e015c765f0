#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "congruity/detail/http.hpp"
#include "json.hpp"

#include "congruity/embedding.hpp"
#include "congruity/error.hpp"

namespace congruity {

struct ServiceInfo {
  std::string model;
  std::uint32_t dim = 0;
};

// Raised when the service rejects individual inputs (e.g. undecodable image
// bytes). Indices refer to positions in the caller's input list.
class ItemError : public Error {
 public:
  struct Item {
    std::size_t index;
    std::string message;
  };

  explicit ItemError(std::vector<Item> items)
      : Error(ErrorKind::service, format(items)), items_(std::move(items)) {}

  const std::vector<Item>& items() const noexcept { return items_; }

 private:
  static std::string format(const std::vector<Item>& items) {
    std::string out = "embedding service rejected " + std::to_string(items.size()) + " item(s):";
    for (const auto& item : items)
      out += " [" + std::to_string(item.index) + "] " + item.message + ";";
    return out;
  }

  std::vector<Item> items_;
};

inline std::string base64_encode(std::string_view bytes) {
  static constexpr char table[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t chunk = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                                (static_cast<std::uint8_t>(bytes[i + 1]) << 8) |
                                static_cast<std::uint8_t>(bytes[i + 2]);
    out += table[(chunk >> 18) & 63];
    out += table[(chunk >> 12) & 63];
    out += table[(chunk >> 6) & 63];
    out += table[chunk & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t chunk = static_cast<std::uint8_t>(bytes[i]) << 16;
    if (rest == 2) chunk |= static_cast<std::uint8_t>(bytes[i + 1]) << 8;
    out += table[(chunk >> 18) & 63];
    out += table[(chunk >> 12) & 63];
    out += rest == 2 ? table[(chunk >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

struct ClientOptions {
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  std::chrono::seconds timeout{60};
};

// Client for the embedding sidecar:
//   GET  /health       -> {model, dim}
//   POST /embed/text   {"texts": [...]}      -> {"embeddings": [[...]]}
//   POST /embed/image  {"images_b64": [...]} -> {"embeddings": [[...]]}
// Inputs are split into batches; up to max_in_flight batches are sent
// concurrently and results are reassembled in input order.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(std::string base_url, ClientOptions options = {})
      : base_url_(std::move(base_url)), options_(options) {
    if (options_.batch_size == 0) options_.batch_size = 1;
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  }

  ServiceInfo health() const {
    auto client = make_client();
    auto res = client.Get("/health");
    if (!res)
      throw Error(ErrorKind::service_unreachable,
                  "embedding service unreachable at " + base_url_ + ": " +
                      httplib::to_string(res.error()));
    if (res->status / 100 != 2)
      throw Error(ErrorKind::service, "GET /health returned status " +
                                          std::to_string(res->status));
    try {
      const auto body = nlohmann::json::parse(res->body);
      ServiceInfo info{body.at("model").get<std::string>(),
                       body.at("dim").get<std::uint32_t>()};
      if (info.dim == 0) throw Error(ErrorKind::contract, "/health reported dim 0");
      return info;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::contract, std::string("malformed /health body: ") + e.what());
    }
  }

  std::vector<Embedding> embed_texts(const std::vector<std::string>& texts) const {
    return embed("/embed/text", "texts", texts);
  }

  // Raw image file bytes; base64-encoded on the wire.
  std::vector<Embedding> embed_images(const std::vector<std::string>& images) const {
    std::vector<std::string> encoded;
    encoded.reserve(images.size());
    for (const auto& bytes : images) encoded.push_back(base64_encode(bytes));
    return embed("/embed/image", "images_b64", encoded);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    return client;
  }

  std::vector<Embedding> embed(const std::string& route, const char* field,
                               const std::vector<std::string>& payloads) const {
    if (payloads.empty()) return {};
    const std::uint32_t dim = health().dim;

    const std::size_t n_batches =
        (payloads.size() + options_.batch_size - 1) / options_.batch_size;
    std::vector<std::vector<Embedding>> results(n_batches);
    std::vector<std::exception_ptr> failures(n_batches);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
      auto client = make_client();
      for (std::size_t b = next++; b < n_batches; b = next++) {
        try {
          const std::size_t begin = b * options_.batch_size;
          const std::size_t end = std::min(payloads.size(), begin + options_.batch_size);
          results[b] = send_batch(client, route, field, payloads, begin, end, dim);
        } catch (...) {
          failures[b] = std::current_exception();
        }
      }
    };

    const std::size_t n_workers = std::min(options_.max_in_flight, n_batches);
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }

    std::vector<ItemError::Item> item_failures;
    for (const auto& failure : failures) {
      if (!failure) continue;
      try {
        std::rethrow_exception(failure);
      } catch (const ItemError& e) {
        item_failures.insert(item_failures.end(), e.items().begin(), e.items().end());
      }
    }
    if (!item_failures.empty()) throw ItemError(std::move(item_failures));

    std::vector<Embedding> out;
    out.reserve(payloads.size());
    for (auto& batch : results)
      for (auto& e : batch) out.push_back(std::move(e));
    return out;
  }

  static std::vector<Embedding> send_batch(httplib::Client& client,
                                           const std::string& route,
                                           const char* field,
                                           const std::vector<std::string>& payloads,
                                           std::size_t begin, std::size_t end,
                                           std::uint32_t dim) {
    nlohmann::json request;
    request[field] = std::vector<std::string>(payloads.begin() + begin, payloads.begin() + end);
    auto res = client.Post(route, request.dump(), "application/json");
    if (!res)
      throw Error(ErrorKind::service_unreachable,
                  "POST " + route + " failed: " + httplib::to_string(res.error()));
    if (res->status == 422) {
      if (auto items = parse_item_errors(res->body, begin)) throw ItemError(std::move(*items));
    }
    if (res->status / 100 != 2)
      throw Error(ErrorKind::service,
                  "POST " + route + " returned status " + std::to_string(res->status));

    std::vector<Embedding> out;
    try {
      const auto body = nlohmann::json::parse(res->body);
      const auto& embeddings = body.at("embeddings");
      if (!embeddings.is_array() || embeddings.size() != end - begin)
        throw Error(ErrorKind::contract,
                    "POST " + route + " returned " + std::to_string(embeddings.size()) +
                        " embeddings for " + std::to_string(end - begin) + " inputs");
      for (std::size_t i = 0; i < embeddings.size(); ++i) {
        auto values = embeddings[i].get<std::vector<float>>();
        if (values.size() != dim)
          throw Error(ErrorKind::contract,
                      "embedding " + std::to_string(begin + i) + " has dim " +
                          std::to_string(values.size()) + " but /health reports " +
                          std::to_string(dim));
        try {
          out.emplace_back(std::move(values));
        } catch (const Error& e) {
          throw Error(ErrorKind::contract, "embedding " + std::to_string(begin + i) + ": " + e.what());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::contract, "malformed response from " + route + ": " + e.what());
    }
    return out;
  }

  // Accepts {"detail": [{"index": i, "error"|"message"|"msg": "..."}, ...]}.
  static std::optional<std::vector<ItemError::Item>> parse_item_errors(
      const std::string& body, std::size_t offset) {
    auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
    auto it = parsed.find("detail");
    if (it == parsed.end() || !it->is_array()) return std::nullopt;
    std::vector<ItemError::Item> items;
    for (const auto& entry : *it) {
      if (!entry.is_object() || !entry.contains("index") || !entry["index"].is_number_integer())
        return std::nullopt;
      std::string message = "rejected";
      for (const char* key : {"error", "message", "msg"}) {
        if (entry.contains(key) && entry[key].is_string()) {
          message = entry[key].get<std::string>();
          break;
        }
      }
      items.push_back({offset + entry["index"].get<std::size_t>(), std::move(message)});
    }
    if (items.empty()) return std::nullopt;
    return items;
  }

  std::string base_url_;
  ClientOptions options_;
};

}  // namespace congruity
