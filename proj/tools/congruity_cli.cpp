// Command-line front end: one subcommand per pipeline stage.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 embedding service unreachable.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "congruity/congruity.hpp"

namespace fs = std::filesystem;
using namespace congruity;

namespace {

struct GlobalOptions {
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output_dir;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig config = load_pipeline_config(g.config_path);
  if (g.seed) config.seed = *g.seed;
  if (g.output_dir) config.output_dir = *g.output_dir;
  return config;
}

fs::path prepare_output(const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw data_error("cannot create output dir " + config.output_dir.string() + ": " + ec.message());
  return config.output_dir;
}

fs::path or_default(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

void write_json_file(const fs::path& path, const json& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << body.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw data_error(path.string() + ": not valid JSON");
  return j;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Either detector, loaded by sniffing the file.
struct Detector {
  std::optional<ThresholdModel> threshold;
  std::optional<MlpModel> mlp;
};

Detector load_detector(const fs::path& path) {
  Detector d;
  if (is_mlp_file(path)) {
    d.mlp = read_mlp(path).model;
  } else {
    d.threshold = read_threshold(path);
  }
  return d;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::service_unreachable: return 3;
    default: return 2;
  }
}

httplib::Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Title/thumbnail congruity pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::string config_flag, output_flag;
  std::uint64_t seed_flag = 0;
  app.add_option("--config", config_flag, "Pipeline config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "Override the pipeline seed");
  app.add_option("--output", output_flag, "Output directory");

  std::function<void(const PipelineConfig&)> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and embedding store");
  SynthOptions synth_opts;
  synth->add_option("--n", synth_opts.n, "Number of articles")->capture_default_str();
  synth->add_option("--dim", synth_opts.dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--sigma", synth_opts.noise_sigma, "Image noise scale")->capture_default_str();
  synth->add_option("--media", synth_opts.media_count, "Number of media outlets")->capture_default_str();
  synth->add_option("--fake-media", synth_opts.fake_media, "Outlets labeled fake")->capture_default_str();
  synth->add_option("--fake-sigma", synth_opts.fake_sigma, "Noise scale for fake outlets")->capture_default_str();
  synth->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      synth_opts.seed = stage_seed(config.seed, Stage::synth);
      const SynthCorpus corpus = synth_corpus(synth_opts);
      save_corpus(out / "corpus.jsonl", corpus.records);
      write_store(corpus.store, out / "embeddings.emb");
      std::cerr << "wrote " << corpus.records.size() << " records to " << (out / "corpus.jsonl") << " and "
                << corpus.store.size() << " embeddings to " << (out / "embeddings.emb") << '\n';
    };
  });

  // extract-meta
  auto* extract = app.add_subcommand("extract-meta", "Extract thumbnail URLs from article HTML");
  std::vector<std::string> html_files;
  std::string extract_corpus, html_dir;
  extract->add_option("html", html_files, "HTML files (prints {file, thumbnail_url} lines)");
  extract->add_option("--corpus", extract_corpus, "Corpus to fill thumbnail_url into");
  extract->add_option("--html-dir", html_dir, "Directory with <id>.html pages");
  extract->callback([&] {
    action = [&](const PipelineConfig& config) {
      for (const auto& file : html_files) {
        const auto url = extract_thumbnail_url(read_file(file));
        std::cout << json{{"file", file}, {"thumbnail_url", url ? json(*url) : json(nullptr)}}.dump() << '\n';
      }
      if (html_dir.empty()) {
        if (html_files.empty()) throw Error(ErrorKind::usage, "give HTML files or --html-dir");
        return;
      }
      const fs::path out = prepare_output(config);
      auto records = load_corpus(or_default(extract_corpus, config.corpus_path));
      std::size_t filled = 0;
      for (auto& r : records) {
        const fs::path page = fs::path(html_dir) / (r.id + ".html");
        if (r.thumbnail_url || !fs::exists(page)) continue;
        if ((r.thumbnail_url = extract_thumbnail_url(read_file(page)))) ++filled;
      }
      save_corpus(out / "corpus.meta.jsonl", records);
      std::cerr << "filled " << filled << " thumbnail URLs; wrote " << (out / "corpus.meta.jsonl") << '\n';
    };
  });

  // filter
  auto* filter = app.add_subcommand("filter", "Keyword and face filtering");
  std::string filter_corpus;
  bool use_keywords = false, no_faces = false;
  filter->add_option("--corpus", filter_corpus, "Input corpus");
  filter->add_flag("--keywords", use_keywords, "Keep records matching the configured keyword list");
  filter->add_flag("--no-faces", no_faces, "Keep only records with has_face == false");
  filter->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      auto records = load_corpus(or_default(filter_corpus, config.corpus_path));
      const std::size_t before = records.size();
      if (use_keywords) records = filter_by_keywords(records, CorpusFilter(config.keyword_list));
      if (no_faces) records = filter_by_face(records);
      save_corpus(out / "corpus.filtered.jsonl", records);
      std::cerr << "kept " << records.size() << " of " << before << " records\n";
    };
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Fetch title and thumbnail embeddings from the service");
  std::string embed_corpus, embed_service, embed_store;
  ClientOptions client_opts;
  embed->add_option("--corpus", embed_corpus, "Input corpus");
  embed->add_option("--service", embed_service, "Embedding service base URL");
  embed->add_option("--store", embed_store, "Output store (default <output>/embeddings.emb)");
  embed->add_option("--in-flight", client_opts.max_in_flight, "Concurrent requests")->capture_default_str();
  embed->add_option("--batch", client_opts.batch_size, "Items per request")->capture_default_str();
  embed->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const fs::path corpus_path = or_default(embed_corpus, config.corpus_path);
      const auto records = load_corpus(corpus_path);
      std::string url = embed_service;
      if (url.empty() && config.embedding_service_url) url = *config.embedding_service_url;
      if (url.empty()) throw Error(ErrorKind::usage, "no embedding service URL (--service or config)");
      EmbeddingClient client(url, client_opts);
      const ServiceInfo info = client.health();

      std::vector<std::string> titles, images;
      for (const auto& r : records) {
        if (!r.thumbnail_path) throw data_error("record '" + r.id + "' has no thumbnail_path");
        fs::path image = *r.thumbnail_path;
        if (image.is_relative()) image = corpus_path.parent_path() / image;
        titles.push_back(r.title);
        images.push_back(read_file(image));
      }
      const auto text_embeddings = client.embed_texts(titles);
      const auto image_embeddings = client.embed_images(images);
      EmbeddingStore store(info.dim);
      for (std::size_t i = 0; i < records.size(); ++i) {
        store.put(title_key(records[i].id), text_embeddings[i]);
        store.put(thumb_key(records[i].id), image_embeddings[i]);
      }
      const fs::path store_path = or_default(embed_store, out / "embeddings.emb");
      write_store(store, store_path);
      std::cerr << "wrote " << store.size() << " embeddings (" << info.model << ", dim " << info.dim
                << ") to " << store_path << '\n';
    };
  });

  // score
  auto* score = app.add_subcommand("score", "Title/thumbnail similarity per record");
  std::string score_input, score_store;
  bool score_stdout = false;
  score->add_option("--corpus", score_input, "Input corpus");
  score->add_option("--store", score_store, "Embedding store");
  score->add_flag("--stdout", score_stdout, "Also print scored pairs to stdout");
  score->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto records = load_corpus(or_default(score_input, config.corpus_path));
      const auto store = read_store(or_default(score_store, config.embedding_store_path));
      const auto scored = score_corpus(records, store);
      write_scored(out / "scores.jsonl", scored);
      if (score_stdout)
        for (const auto& s : scored) std::cout << scored_to_json(s).dump() << '\n';
    };
  });

  // stats
  auto* stats = app.add_subcommand("stats", "General vs fake score distributions");
  std::string stats_scores;
  bool stats_csv = false;
  stats->add_option("--scores", stats_scores, "Scored pairs (default <output>/scores.jsonl)");
  stats->add_flag("--csv", stats_csv, "Also write CDF points to <output>/cdf.csv");
  stats->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto report = media_report(read_scored(or_default(stats_scores, out / "scores.jsonl")));
      write_json_file(out / "stats.json", to_json(report));
      if (stats_csv) {
        std::ofstream csv(out / "cdf.csv", std::ios::trunc);
        write_cdf_csv(csv, report);
      }
      std::cout << to_json(report.comparison).dump(2) << '\n';
    };
  });

  // split
  auto* split = app.add_subcommand("split", "Select congruent pairs and split into pools");
  std::string split_scores;
  split->add_option("--scores", split_scores, "Scored pairs (default <output>/scores.jsonl)");
  split->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      std::vector<ScoredPair> general;
      for (auto& s : read_scored(or_default(split_scores, out / "scores.jsonl")))
        if (s.media_label == MediaLabel::general) general.push_back(std::move(s));
      GenerationConfig gen = config.generation;
      gen.seed = stage_seed(config.seed, Stage::split);
      const Pools pools = split_pools(select_congruent(std::move(general), gen), gen);
      write_json_file(out / "pools.json", pools_to_json(pools));
      std::cerr << "pools: " << pools.train.size() << " / " << pools.validation.size() << " / "
                << pools.test.size() << '\n';
    };
  });

  // gen-pairs
  auto* gen_pairs = app.add_subcommand("gen-pairs", "Generate congruent/incongruent samples per pool");
  std::string gen_corpus, gen_pools, gen_scores;
  gen_pairs->add_option("--corpus", gen_corpus, "Input corpus");
  gen_pairs->add_option("--pools", gen_pools, "Pools file (default <output>/pools.json)");
  gen_pairs->add_option("--scores", gen_scores, "Scored pairs, used to split when no pools file exists");
  gen_pairs->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto records = load_corpus(or_default(gen_corpus, config.corpus_path));
      const fs::path pools_path = or_default(gen_pools, out / "pools.json");
      Pools pools;
      if (fs::exists(pools_path)) {
        pools = pools_from_json(read_json_file(pools_path));
      } else {
        if (!gen_pools.empty()) throw data_error("cannot open " + pools_path.string());
        const Dataset dataset = build_dataset(read_scored(or_default(gen_scores, out / "scores.jsonl")),
                                              records, config.generation, config.seed);
        pools = dataset.pools;
        write_json_file(pools_path, pools_to_json(pools));
      }
      const auto samples = generate_pool_samples(pools, index_corpus(records), config.seed);
      for (Pool p : kAllPools) {
        const auto& s = samples[static_cast<std::size_t>(p)];
        write_samples(out / ("pairs." + std::string(to_string(p)) + ".jsonl"), s);
        std::cerr << to_string(p) << ": " << s.size() << " samples\n";
      }
    };
  });

  // derive-threshold
  auto* derive = app.add_subcommand("derive-threshold", "Zero-shot threshold from validation pairs");
  std::string derive_store, derive_pairs;
  derive->add_option("--store", derive_store, "Embedding store");
  derive->add_option("--pairs", derive_pairs, "Validation pairs (default <output>/pairs.validation.jsonl)");
  derive->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto store = read_store(or_default(derive_store, config.embedding_store_path));
      const auto samples = read_samples(or_default(derive_pairs, out / "pairs.validation.jsonl"));
      const ThresholdModel model = derive_threshold(sample_similarities(samples, store));
      write_threshold(out / "threshold.json", model);
      std::cout << json{{"threshold", model.threshold}}.dump() << '\n';
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the embedding-pair classifier");
  std::string train_store, train_pairs, validation_pairs;
  train->add_option("--store", train_store, "Embedding store");
  train->add_option("--train", train_pairs, "Training pairs (default <output>/pairs.train.jsonl)");
  train->add_option("--validation", validation_pairs,
                    "Validation pairs (default <output>/pairs.validation.jsonl)");
  train->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto store = read_store(or_default(train_store, config.embedding_store_path));
      TrainConfig tc = config.train;
      tc.seed = stage_seed(config.seed, Stage::train);
      const TrainResult result =
          train_mlp(read_samples(or_default(train_pairs, out / "pairs.train.jsonl")),
                    read_samples(or_default(validation_pairs, out / "pairs.validation.jsonl")), store, tc);
      write_mlp(out / "mlp.model", result.model, tc);
      ndjson::write(out / "train_log.jsonl", result.log, [](const EpochLog& e) { return to_json(e); });
      std::cerr << "best epoch " << result.best_epoch << " (validation loss " << result.best_validation_loss
                << ") after " << result.log.size() << " epochs\n";
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy and AUROC on a pair split");
  std::string eval_model, eval_store, eval_pairs, eval_split = "test";
  evaluate->add_option("--model", eval_model, "threshold.json or mlp.model")->required();
  evaluate->add_option("--store", eval_store, "Embedding store");
  evaluate->add_option("--pairs", eval_pairs, "Pairs (default <output>/pairs.<split>.jsonl)");
  evaluate->add_option("--split", eval_split, "Split name")->capture_default_str();
  evaluate->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      const auto store = read_store(or_default(eval_store, config.embedding_store_path));
      const auto samples = read_samples(or_default(eval_pairs, out / ("pairs." + eval_split + ".jsonl")));
      const Detector detector = load_detector(eval_model);
      const EvalReport report = detector.mlp ? evaluate_mlp(*detector.mlp, samples, store, eval_split)
                                             : evaluate_threshold(*detector.threshold, samples, store, eval_split);
      const fs::path report_path = out / ("eval." + fs::path(eval_model).stem().string() + "." + eval_split + ".json");
      write_json_file(report_path, to_json(report));
      std::cout << to_json(report).dump() << '\n';
    };
  });

  // rank
  auto* rank = app.add_subcommand("rank", "Rank articles by predicted incongruity");
  std::string rank_model, rank_corpus, rank_store, rank_media = "fake";
  rank->add_option("--model", rank_model, "threshold.json or mlp.model")->required();
  rank->add_option("--corpus", rank_corpus, "Input corpus");
  rank->add_option("--store", rank_store, "Embedding store");
  rank->add_option("--media-label", rank_media, "general, fake or all")->capture_default_str();
  rank->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      auto records = load_corpus(or_default(rank_corpus, config.corpus_path));
      if (rank_media != "all") {
        auto wanted = parse_media_label(rank_media);
        if (!wanted) throw Error(ErrorKind::usage, "--media-label must be general, fake or all");
        std::erase_if(records, [&](const ArticleRecord& r) { return r.media_label != *wanted; });
      }
      const auto store = read_store(or_default(rank_store, config.embedding_store_path));
      const Detector detector = load_detector(rank_model);
      std::vector<RankedItem> items;
      for (const auto& r : records) {
        const Embedding& text = store.at(title_key(r.id));
        const Embedding& image = store.at(thumb_key(r.id));
        const double s = detector.mlp ? mlp_forward(*detector.mlp, text, image)
                                      : threshold_predict(*detector.threshold, clip_score(text, image)).prediction_score;
        items.push_back({r.id, s});
      }
      const fs::path path = out / ("ranking." + fs::path(rank_model).stem().string() + ".jsonl");
      write_ranking(path, rank_articles(std::move(items)));
      std::cerr << "wrote " << records.size() << " ranked records to " << path << '\n';
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Annotation service");
  std::string serve_corpus, serve_labels, serve_ui, host = "127.0.0.1";
  std::vector<std::string> ranking_specs;
  int port = 8080;
  serve->add_option("--corpus", serve_corpus, "Corpus with titles and thumbnail paths");
  serve->add_option("--ranking", ranking_specs, "Ranking file, optionally NAME=PATH (repeatable)")->required();
  serve->add_option("--labels", serve_labels, "Label log (default <output>/labels.jsonl)");
  serve->add_option("--ui-dir", serve_ui, "Static UI assets");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->callback([&] {
    action = [&](const PipelineConfig& config) {
      const fs::path out = prepare_output(config);
      std::vector<NamedRanking> rankings;
      for (const auto& spec : ranking_specs) {
        const auto eq = spec.find('=');
        const fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
        const std::string name = eq == std::string::npos ? path.stem().string() : spec.substr(0, eq);
        rankings.push_back({name, read_ranking(path)});
      }
      std::optional<fs::path> ui;
      if (!serve_ui.empty()) ui = serve_ui;
      AnnotationService service(std::move(rankings), load_corpus(or_default(serve_corpus, config.corpus_path)),
                                or_default(serve_labels, out / "labels.jsonl"), ui);
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw data_error("cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on http://" << host << ":" << bound << " (" << service.label_count()
                << " labels replayed)" << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_flag.empty()) global.config_path = config_flag;
    if (seed_opt->count() > 0) global.seed = seed_flag;
    if (!output_flag.empty()) global.output_dir = output_flag;
    action(resolve_config(global));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
