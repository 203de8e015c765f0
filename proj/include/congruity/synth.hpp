#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/ingestion.hpp"
#include "congruity/random.hpp"

namespace congruity {

struct SynthOptions {
  std::size_t n = 1000;
  std::uint32_t dim = 512;
  // Noise vector has expected norm sigma (per-component sd sigma / sqrt(dim)),
  // so the expected congruent similarity is about 1 / sqrt(1 + sigma^2).
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  std::size_t media_count = 5;
  // The last `fake_media` media ids are labeled fake and use fake_sigma.
  std::size_t fake_media = 0;
  double fake_sigma = 2.0;
};

struct SynthCorpus {
  std::vector<ArticleRecord> records;
  EmbeddingStore store;
};

// Random unit text embeddings; image = normalize(text + noise). Media ids are
// assigned round-robin.
inline SynthCorpus synth_corpus(const SynthOptions& options) {
  if (options.n == 0) throw data_error("synth: n must be at least 1");
  if (options.dim < 2) throw data_error("synth: dim must be at least 2");
  if (!(options.noise_sigma >= 0.0) || !(options.fake_sigma >= 0.0))
    throw data_error("synth: sigma must be nonnegative");
  if (options.media_count == 0) throw data_error("synth: media_count must be positive");
  if (options.fake_media > options.media_count)
    throw data_error("synth: fake_media exceeds media_count");

  Rng rng(options.seed);
  SynthCorpus out{{}, EmbeddingStore(options.dim)};
  const std::size_t d = options.dim;
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> text(d), image(d);

  auto normalized = [](const std::vector<double>& v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
  };

  for (std::size_t i = 0; i < options.n; ++i) {
    const std::size_t media = i % options.media_count;
    const bool fake = media >= options.media_count - options.fake_media;
    const double sigma = fake ? options.fake_sigma : options.noise_sigma;

    for (auto& x : text) x = rng.normal();
    const std::vector<float> text_unit = normalized(text);
    for (std::size_t k = 0; k < d; ++k) image[k] = text_unit[k] + sigma * inv_sqrt_dim * rng.normal();

    ArticleRecord r;
    r.id = "synth-" + std::to_string(i);
    r.media = "media-" + std::to_string(media);
    r.media_label = fake ? MediaLabel::fake : MediaLabel::general;
    r.title = "Synthetic COVID-19 report " + std::to_string(i);
    r.article_url = "https://example.org/" + r.media + "/" + std::to_string(i);
    r.published_at = "2021-01-01T00:00:00Z";
    r.has_face = false;
    out.store.put(title_key(r.id), Embedding(text_unit));
    out.store.put(thumb_key(r.id), Embedding(normalized(image)));
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace congruity
