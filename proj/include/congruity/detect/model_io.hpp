#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "congruity/detect/mlp.hpp"
#include "congruity/detect/trainer.hpp"
#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/ndjson.hpp"

namespace congruity {

// Classifier file, little-endian:
//   "MLP1" | u32 version | u32 header_len | header JSON (UTF-8) |
//   u64 param_count | param_count x f32
// Header: {layer_dims, activations, parameter_layout, train_config, seed}.
namespace model_format {
inline constexpr char kMagic[4] = {'M', 'L', 'P', '1'};
inline constexpr std::uint32_t kVersion = 1;
}  // namespace model_format

struct StoredMlp {
  MlpModel model;
  json header;
};

inline std::vector<std::uint8_t> encode_mlp(const MlpModel& model, const TrainConfig& config) {
  using namespace model_format;
  std::vector<std::string> activations(model.layer_count(), "relu");
  activations.back() = "sigmoid";
  const json header = {{"layer_dims", model.layer_dims()},
                       {"activations", activations},
                       {"parameter_layout", "per layer: weights (out x in, column-major), bias"},
                       {"train_config", to_json(config)},
                       {"seed", config.seed}};
  const std::string header_text = header.dump();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  store_format::put_le(out, kVersion);
  store_format::put_le(out, static_cast<std::uint32_t>(header_text.size()));
  out.insert(out.end(), header_text.begin(), header_text.end());
  const auto& params = model.parameters();
  store_format::put_le(out, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i)
    store_format::put_f32(out, static_cast<float>(params(i)));
  return out;
}

inline StoredMlp decode_mlp(std::span<const std::uint8_t> bytes) {
  using namespace model_format;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw data_error("not a classifier model file (bad magic)");
  store_format::Reader reader(bytes);
  reader.get_string(4);
  const auto version = reader.get_le<std::uint32_t>();
  if (version != kVersion) throw data_error("unsupported model version " + std::to_string(version));
  const auto header_len = reader.get_le<std::uint32_t>();
  StoredMlp stored;
  try {
    stored.header = json::parse(reader.get_string(header_len));
    stored.model = MlpModel(stored.header.at("layer_dims").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed model header: ") + e.what());
  }
  const auto count = reader.get_le<std::uint64_t>();
  auto& params = stored.model.parameters();
  if (count != static_cast<std::uint64_t>(params.size()))
    throw data_error("model declares " + std::to_string(count) + " parameters, layer dims imply " +
                     std::to_string(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const float v = reader.get_f32();
    if (!std::isfinite(v)) throw data_error("non-finite parameter at index " + std::to_string(i));
    params(i) = v;
  }
  if (reader.remaining() != 0) throw data_error("trailing bytes in model file");
  return stored;
}

inline void write_mlp(const std::filesystem::path& path, const MlpModel& model,
                      const TrainConfig& config) {
  const auto bytes = encode_mlp(model, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error("write failed: " + path.string());
}

inline StoredMlp read_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_mlp(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

inline bool is_mlp_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in && std::memcmp(magic, model_format::kMagic, 4) == 0;
}

}  // namespace congruity
