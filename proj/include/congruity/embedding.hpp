#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "congruity/error.hpp"

namespace congruity {

// Fixed-length single-precision vector with finite entries. Stored exactly as
// produced by the encoder; normalization happens at scoring time.
class Embedding {
 public:
  Embedding() = default;

  explicit Embedding(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) throw data_error("embedding must have positive dimension");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw data_error("embedding entry " + std::to_string(i) + " is not finite");
    }
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<float> values_;
};

inline std::string title_key(const std::string& record_id) { return record_id + ":title"; }
inline std::string thumb_key(const std::string& record_id) { return record_id + ":thumb"; }

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::uint32_t dim = 512) : dim_(dim) {
    if (dim == 0) throw data_error("embedding store dimension must be positive");
  }

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  // Inserts or replaces.
  void put(const std::string& id, Embedding embedding) {
    if (embedding.dim() != dim_)
      throw data_error("embedding '" + id + "' has dim " +
                       std::to_string(embedding.dim()) + ", store dim is " +
                       std::to_string(dim_));
    entries_.insert_or_assign(id, std::move(embedding));
  }

  const Embedding* find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool contains(const std::string& id) const { return entries_.contains(id); }

  const Embedding& at(const std::string& id) const {
    if (const Embedding* e = find(id)) return *e;
    throw data_error("no embedding for '" + id + "'");
  }

  // Sorted by id.
  const std::map<std::string, Embedding>& entries() const noexcept { return entries_; }

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::uint32_t dim_;
  std::map<std::string, Embedding> entries_;
};

// Binary layout, little-endian:
//   "EMB1" | u32 version | u32 dim | u64 count |
//   count x { u32 id_len | id bytes | dim x f32 }
namespace store_format {

inline constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  const U bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float value) {
  put_le(out, std::bit_cast<std::uint32_t>(value));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::make_unsigned_t<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::make_unsigned_t<T>>(bytes_[offset_ + i]) << (8 * i);
    offset_ += sizeof(T);
    return static_cast<T>(bits);
  }

  float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

  std::string get_string(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), len);
    offset_ += len;
    return s;
  }

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - offset_ < n)
      throw data_error("truncated embedding file: need " + std::to_string(n) +
                       " bytes at byte offset " + std::to_string(offset_) +
                       ", file has " + std::to_string(bytes_.size()));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

}  // namespace store_format

inline std::vector<std::uint8_t> encode_store(const EmbeddingStore& store) {
  using namespace store_format;
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + store.size() * (8 + 4 * std::size_t{store.dim()}));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le(out, kVersion);
  put_le(out, store.dim());
  put_le(out, static_cast<std::uint64_t>(store.size()));
  for (const auto& [id, embedding] : store.entries()) {
    put_le(out, static_cast<std::uint32_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
    for (float v : embedding.values()) put_f32(out, v);
  }
  return out;
}

inline EmbeddingStore decode_store(std::span<const std::uint8_t> bytes) {
  using namespace store_format;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw data_error("not an embedding file (bad magic)");
  Reader reader(bytes);
  reader.get_string(4);
  const auto version = reader.get_le<std::uint32_t>();
  if (version != kVersion)
    throw data_error("unsupported embedding file version " + std::to_string(version));
  const auto dim = reader.get_le<std::uint32_t>();
  if (dim == 0) throw data_error("embedding file declares dim 0");
  const auto count = reader.get_le<std::uint64_t>();
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t record_offset = reader.offset();
    const auto id_len = reader.get_le<std::uint32_t>();
    std::string id = reader.get_string(id_len);
    std::vector<float> values(dim);
    for (auto& v : values) v = reader.get_f32();
    for (float v : values) {
      if (!std::isfinite(v))
        throw data_error("non-finite value in embedding '" + id + "'");
    }
    if (store.contains(id))
      throw data_error("duplicate embedding id '" + id + "' at byte offset " +
                       std::to_string(record_offset));
    store.put(id, Embedding(std::move(values)));
  }
  if (reader.remaining() != 0)
    throw data_error("trailing bytes after " + std::to_string(count) +
                     " records at byte offset " + std::to_string(reader.offset()));
  return store;
}

inline void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write embedding file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("write failed: " + path.string());
}

inline EmbeddingStore read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open embedding file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_store(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace congruity
