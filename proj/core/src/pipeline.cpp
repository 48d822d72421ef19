#include "lmi/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lmi/corpus.hpp"
#include "lmi/error.hpp"
#include "lmi/mathutil.hpp"
#include "lmi/parallel.hpp"
#include "lmi/report.hpp"
#include "lmi/spectral.hpp"

namespace fs = std::filesystem;

namespace lmi {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + tmp);
    out << bytes;
    if (!out) throw Error("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

class Manifest {
 public:
  Manifest(const PipelineConfig& config, const std::string& path) : path_(path) {
    if (fs::exists(path)) {
      try {
        doc_ = nlohmann::json::parse(slurp(path));
      } catch (const std::exception&) {
        doc_ = nlohmann::json::object();
      }
    }
    doc_["version"] = 1;
    doc_["base_seed"] = config.base_seed;
    doc_["config"] = nlohmann::json::parse(pipeline_config_json(config));
    doc_["config_digest"] = fnv1a64_hex(pipeline_config_json(config));
    if (!doc_.contains("inputs")) doc_["inputs"] = nlohmann::json::object();
    if (!doc_.contains("stages")) doc_["stages"] = nlohmann::json::object();
  }

  void record_input(const std::string& name, const std::string& digest) { doc_["inputs"][name] = digest; }

  void record_stage(const std::string& stage, double wall_ms, const std::vector<std::string>& outputs,
                    const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json entry;
    entry["wall_ms"] = wall_ms;
    entry["outputs"] = nlohmann::json::object();
    for (const auto& f : outputs) entry["outputs"][fs::path(f).filename().string()] = fnv1a64_file_hex(f);
    for (auto it = extra.begin(); it != extra.end(); ++it) entry[it.key()] = it.value();
    doc_["stages"][stage] = entry;
    write_file_atomic(path_, doc_.dump(2) + "\n");
  }

 private:
  std::string path_;
  nlohmann::json doc_;
};

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string art(const PipelineConfig& config, const char* name) {
  return (fs::path(config.out_dir) / name).string();
}

void require_artifact(const PipelineConfig& config, const char* name, const std::string& producer) {
  if (!fs::exists(art(config, name))) {
    throw Error(std::string("missing ") + name + " in " + config.out_dir + "; run \"" + producer + "\" first");
  }
}

Eigen::MatrixXd spectral_init_beta(const DocTermMatrix& dtm, const std::vector<int>& doc_freq,
                                   int K, int candidate_min_df) {
  const CooccurrenceMatrix coocc = build_cooccurrence(dtm);
  const AnchorSet anchors = select_anchors(coocc, K, doc_freq, candidate_min_df);
  return recover_l2(coocc, anchors).beta;
}

void stage_ingest(const PipelineConfig& config, Manifest& manifest) {
  if (config.corpus_path.empty()) throw Error("ingest: corpus path is not set");
  StageTimer timer;
  const Corpus corpus = load_corpus(config.corpus_path, corpus_format_from_string(config.corpus_format));
  manifest.record_input(config.corpus_path, fnv1a64_file_hex(config.corpus_path));
  const std::string out = art(config, artifact::kCorpus);
  save_corpus(corpus, out + ".tmp", CorpusFormat::kJsonl);
  fs::rename(out + ".tmp", out);
  nlohmann::json extra;
  extra["documents"] = corpus.documents.size();
  extra["sectors"] = corpus.sector_set.size();
  manifest.record_stage("ingest", timer.ms(), {out}, extra);
}

void stage_prep(const PipelineConfig& config, Manifest& manifest) {
  require_artifact(config, artifact::kCorpus, "ingest");
  StageTimer timer;
  const Corpus corpus = load_corpus(art(config, artifact::kCorpus), CorpusFormat::kJsonl);
  const auto [vocab, dtm] = preprocess_corpus(corpus, config.preprocess);

  const std::string vocab_path = art(config, artifact::kVocab);
  const std::string dtm_path = art(config, artifact::kDtm);
  const std::string empty_path = art(config, artifact::kEmptyDocs);
  write_vocab_file(vocab, vocab_path + ".tmp");
  fs::rename(vocab_path + ".tmp", vocab_path);
  write_matrix_market(dtm, dtm_path + ".tmp");
  fs::rename(dtm_path + ".tmp", dtm_path);
  {
    std::ostringstream flagged;
    for (int d : dtm.empty_docs) flagged << corpus.documents[static_cast<std::size_t>(d)].id << "\n";
    write_file_atomic(empty_path, flagged.str());
  }
  nlohmann::json extra;
  extra["vocabulary"] = vocab.size();
  extra["tokens"] = dtm.total_tokens();
  extra["empty_documents"] = dtm.empty_docs.size();
  manifest.record_stage("prep", timer.ms(), {vocab_path, dtm_path, empty_path}, extra);
}

std::pair<DocTermMatrix, Vocabulary> load_prep(const PipelineConfig& config) {
  require_artifact(config, artifact::kDtm, "prep");
  require_artifact(config, artifact::kVocab, "prep");
  DocTermMatrix dtm = read_matrix_market(art(config, artifact::kDtm));
  Vocabulary vocab = read_vocab_file(art(config, artifact::kVocab), dtm);
  return {std::move(dtm), std::move(vocab)};
}

void fit_and_save(const PipelineConfig& config, const DocTermMatrix& dtm, const Vocabulary& vocab,
                  int K, std::uint64_t seed, Manifest& manifest, double extra_ms,
                  const nlohmann::json& merge_extra) {
  StageTimer timer;
  FitConfig fit = config.fit;
  fit.seed = seed;
  std::optional<Eigen::MatrixXd> init;
  if (fit.init == FitConfig::Init::kSpectral) {
    init = spectral_init_beta(dtm, vocab.doc_freq, K, config.sweep.candidate_min_df);
  }
  const TopicModel model = vem_fit(dtm, K, fit, init);
  const std::string model_dir = art(config, artifact::kModelDir);
  save_model(model, model_dir);

  nlohmann::json extra = merge_extra;
  extra["K"] = model.K;
  extra["converged"] = model.converged;
  extra["em_iterations"] = model.elbo_trace.size();
  extra["final_elbo"] = model.elbo_trace.empty() ? 0.0 : model.elbo_trace.back();
  extra["init"] = model.init;
  manifest.record_stage("fit", extra_ms + timer.ms(),
                        {model_dir + "/beta.csv", model_dir + "/theta.csv", model_dir + "/meta.json"}, extra);
}

void stage_fit(const PipelineConfig& config, Manifest& manifest) {
  if (!config.fixed_k) throw Error("fit: config must set a fixed K (use sweep for k_list / k_range)");
  const auto [dtm, vocab] = load_prep(config);
  fit_and_save(config, dtm, vocab, *config.fixed_k, config.base_seed, manifest, 0.0,
               nlohmann::json::object());
}

void stage_sweep(const PipelineConfig& config, Manifest& manifest) {
  if (config.fixed_k) throw Error("sweep: config sets a fixed K; use fit, or configure k_list / k_range");
  const auto [dtm, vocab] = load_prep(config);
  StageTimer timer;
  FitConfig fit = config.fit;
  fit.seed = config.base_seed;
  SweepResult sweep;
  if (config.k_list) {
    sweep = sweep_k(dtm, vocab, *config.k_list, fit, config.sweep);
  } else {
    const auto [k_min, k_max] = config.k_range.value_or(std::make_pair(10, 50));
    sweep = sweep_k_refined(dtm, vocab, k_min, k_max, fit, config.sweep);
  }
  const std::string sweep_path = art(config, artifact::kSweep);
  write_sweep_csv(sweep, sweep_path + ".tmp");
  fs::rename(sweep_path + ".tmp", sweep_path);

  const int used_k = config.force_k.value_or(sweep.selected_K);
  nlohmann::json extra;
  extra["selected_K"] = sweep.selected_K;
  if (config.force_k) extra["forced_K"] = *config.force_k;
  manifest.record_stage("sweep", timer.ms(), {sweep_path}, extra);

  // Refit on the full corpus at the chosen K; the sweep itself fits on the
  // training split only.
  fit_and_save(config, dtm, vocab, used_k, config.base_seed + static_cast<std::uint64_t>(used_k),
               manifest, 0.0, nlohmann::json{{"from_sweep", true}});
}

void stage_embed(const PipelineConfig& config, Manifest& manifest) {
  require_artifact(config, artifact::kCorpus, "ingest");
  if (!fs::exists(art(config, artifact::kModelDir) + "/meta.json")) {
    throw Error("missing model in " + config.out_dir + "; run \"fit\" or \"sweep\" first");
  }
  StageTimer timer;
  const TopicModel model = load_model(art(config, artifact::kModelDir));
  const Corpus corpus = load_corpus(art(config, artifact::kCorpus), CorpusFormat::kJsonl);
  if (static_cast<Eigen::Index>(corpus.documents.size()) != model.theta.rows()) {
    throw Error("embed: corpus size does not match the fitted model");
  }
  TsneConfig tsne_config = config.tsne;
  tsne_config.seed = config.base_seed;
  const Embedding embedding = tsne(model.theta, tsne_config);

  std::vector<std::string> ids;
  ids.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) ids.push_back(doc.id);
  const std::string path = art(config, artifact::kEmbedding);
  write_embedding_csv(embedding, ids, model.theta, path + ".tmp");
  fs::rename(path + ".tmp", path);

  nlohmann::json extra;
  extra["final_kl"] = embedding.kl_trace.empty() ? 0.0 : embedding.kl_trace.back();
  extra["perplexity"] = tsne_config.perplexity;
  extra["iters"] = tsne_config.iters;
  extra["metric"] = tsne_config.metric == TsneConfig::Metric::kHellinger ? "hellinger" : "euclidean";
  manifest.record_stage("embed", timer.ms(), {path}, extra);
}

void stage_report(const PipelineConfig& config, Manifest& manifest) {
  require_artifact(config, artifact::kCorpus, "ingest");
  require_artifact(config, artifact::kVocab, "prep");
  require_artifact(config, artifact::kDtm, "prep");
  if (!fs::exists(art(config, artifact::kModelDir) + "/meta.json")) {
    throw Error("missing model in " + config.out_dir + "; run \"fit\" or \"sweep\" first");
  }
  require_artifact(config, artifact::kEmbedding, "embed");
  StageTimer timer;

  const TopicModel model = load_model(art(config, artifact::kModelDir));
  const Corpus corpus = load_corpus(art(config, artifact::kCorpus), CorpusFormat::kJsonl);
  const DocTermMatrix dtm = read_matrix_market(art(config, artifact::kDtm));
  const Vocabulary vocab = read_vocab_file(art(config, artifact::kVocab), dtm);

  std::vector<TopicReport> reports = prevalence_table(model, vocab, config.sweep.top_words, config.sweep.frex_omega);
  if (config.labels_path) apply_labels(reports, load_labels_file(*config.labels_path));

  std::vector<std::string> outputs;
  const std::string report_path = art(config, artifact::kReport);
  const WordRanking ranking = model.K >= 2 ? word_ranking_from_string(config.word_ranking) : WordRanking::kProb;
  write_report_csv(reports, report_path + ".tmp", ranking, config.report_sort);
  fs::rename(report_path + ".tmp", report_path);
  outputs.push_back(report_path);

  for (int k = 0; k < model.K; ++k) {
    const auto weights = wordcloud_export(model, vocab, k, std::min(50, vocab.size()));
    const std::string cloud_path = (fs::path(config.out_dir) / ("wordcloud_" + std::to_string(k) + ".csv")).string();
    write_wordcloud_csv(weights, cloud_path + ".tmp");
    fs::rename(cloud_path + ".tmp", cloud_path);
    outputs.push_back(cloud_path);
  }

  const EmbeddingCsv embedding = read_embedding_csv(art(config, artifact::kEmbedding));
  const std::string scatter_path = art(config, artifact::kScatter);
  scatter_svg(embedding.embedding, scatter_path + ".tmp");
  fs::rename(scatter_path + ".tmp", scatter_path);
  outputs.push_back(scatter_path);

  const std::string sectors_path = art(config, artifact::kSectors);
  write_sectors_csv(sector_summary(corpus), sectors_path + ".tmp");
  fs::rename(sectors_path + ".tmp", sectors_path);
  outputs.push_back(sectors_path);

  manifest.record_stage("report", timer.ms(), outputs);
}

}  // namespace

void PipelineConfig::validate() const {
  int set = 0;
  if (fixed_k) ++set;
  if (k_list) ++set;
  if (k_range) ++set;
  if (set > 1) throw Error("config: set exactly one of k, k_list, k_range");
  if (fixed_k && *fixed_k < 1) throw Error("config: k must be >= 1");
  if (k_list && k_list->empty()) throw Error("config: k_list must be non-empty");
  if (k_range && (k_range->first < 1 || k_range->second < k_range->first)) {
    throw Error("config: k_range must satisfy 1 <= min <= max");
  }
  if (out_dir.empty()) throw Error("config: out_dir is not set");
  preprocess.validate();
  if (word_ranking != "prob" && word_ranking != "frex") throw Error("config: word_ranking must be prob or frex");
  if (report_sort != "topic" && report_sort != "prevalence") throw Error("config: report sort must be topic or prevalence");
}

PipelineConfig load_pipeline_config(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(slurp(path));
  } catch (const std::exception& e) {
    throw Error("config: cannot parse " + path + ": " + e.what());
  }
  PipelineConfig config;
  if (doc.contains("corpus")) {
    config.corpus_path = doc["corpus"].value("path", "");
    config.corpus_format = doc["corpus"].value("format", "jsonl");
  }
  config.out_dir = doc.value("out_dir", "");
  config.base_seed = doc.value("seed", std::uint64_t{1});
  config.threads = doc.value("threads", 0);
  if (doc.contains("preprocess")) {
    const auto& p = doc["preprocess"];
    config.preprocess.min_word_len = p.value("min_word_len", 3);
    config.preprocess.stopwords_builtin = p.value("stopwords_builtin", true);
    if (p.contains("stopwords_custom") && !p["stopwords_custom"].is_null()) {
      config.preprocess.stopwords_custom_path = p["stopwords_custom"].get<std::string>();
    }
    config.preprocess.min_doc_freq = p.value("min_doc_freq", 5);
    config.preprocess.max_doc_fraction = p.value("max_doc_fraction", 0.5);
  }
  if (doc.contains("fit")) {
    const auto& f = doc["fit"];
    config.fit.alpha = f.value("alpha", 0.0);
    config.fit.max_em_iters = f.value("max_em_iters", 200);
    config.fit.em_tol = f.value("em_tol", 1e-5);
    const std::string init = f.value("init", "spectral");
    if (init == "spectral") config.fit.init = FitConfig::Init::kSpectral;
    else if (init == "random") config.fit.init = FitConfig::Init::kRandom;
    else throw Error("config: fit.init must be spectral or random");
  }
  if (doc.contains("k")) config.fixed_k = doc["k"].get<int>();
  if (doc.contains("k_list")) config.k_list = doc["k_list"].get<std::vector<int>>();
  if (doc.contains("k_range")) {
    config.k_range = std::make_pair(doc["k_range"].value("min", 10), doc["k_range"].value("max", 50));
  }
  if (doc.contains("force_k")) config.force_k = doc["force_k"].get<int>();
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    config.sweep.top_words = s.value("top_words", 10);
    config.sweep.frex_omega = s.value("frex_omega", 0.7);
    config.sweep.candidate_min_df = s.value("candidate_min_df", 10);
    config.sweep.holdout_fraction = s.value("holdout_fraction", 0.1);
  }
  if (doc.contains("tsne")) {
    const auto& t = doc["tsne"];
    config.tsne.perplexity = t.value("perplexity", 30.0);
    config.tsne.iters = t.value("iters", 1000);
    config.tsne.learning_rate = t.value("learning_rate", 200.0);
    const std::string metric = t.value("metric", "euclidean");
    if (metric == "euclidean") config.tsne.metric = TsneConfig::Metric::kEuclidean;
    else if (metric == "hellinger") config.tsne.metric = TsneConfig::Metric::kHellinger;
    else throw Error("config: tsne.metric must be euclidean or hellinger");
  }
  if (doc.contains("report")) {
    const auto& r = doc["report"];
    if (r.contains("labels") && !r["labels"].is_null()) config.labels_path = r["labels"].get<std::string>();
    config.word_ranking = r.value("word_ranking", "frex");
    config.report_sort = r.value("sort", "topic");
  }
  return config;
}

std::string pipeline_config_json(const PipelineConfig& config) {
  nlohmann::json doc;
  doc["corpus"] = {{"path", config.corpus_path}, {"format", config.corpus_format}};
  doc["out_dir"] = config.out_dir;
  doc["seed"] = config.base_seed;
  doc["threads"] = config.threads;
  doc["preprocess"] = {{"min_word_len", config.preprocess.min_word_len},
                       {"stopwords_builtin", config.preprocess.stopwords_builtin},
                       {"stopwords_custom", config.preprocess.stopwords_custom_path
                                                ? nlohmann::json(*config.preprocess.stopwords_custom_path)
                                                : nlohmann::json(nullptr)},
                       {"min_doc_freq", config.preprocess.min_doc_freq},
                       {"max_doc_fraction", config.preprocess.max_doc_fraction}};
  doc["fit"] = {{"alpha", config.fit.alpha},
                {"max_em_iters", config.fit.max_em_iters},
                {"em_tol", config.fit.em_tol},
                {"init", config.fit.init == FitConfig::Init::kSpectral ? "spectral" : "random"}};
  if (config.fixed_k) doc["k"] = *config.fixed_k;
  if (config.k_list) doc["k_list"] = *config.k_list;
  if (config.k_range) doc["k_range"] = {{"min", config.k_range->first}, {"max", config.k_range->second}};
  if (config.force_k) doc["force_k"] = *config.force_k;
  doc["sweep"] = {{"top_words", config.sweep.top_words},
                  {"frex_omega", config.sweep.frex_omega},
                  {"candidate_min_df", config.sweep.candidate_min_df},
                  {"holdout_fraction", config.sweep.holdout_fraction}};
  doc["tsne"] = {{"perplexity", config.tsne.perplexity},
                 {"iters", config.tsne.iters},
                 {"learning_rate", config.tsne.learning_rate},
                 {"metric", config.tsne.metric == TsneConfig::Metric::kHellinger ? "hellinger" : "euclidean"}};
  doc["report"] = {{"labels", config.labels_path ? nlohmann::json(*config.labels_path) : nlohmann::json(nullptr)},
                   {"word_ranking", config.word_ranking},
                   {"sort", config.report_sort}};
  return doc.dump();
}

Stage stage_from_string(const std::string& name) {
  if (name == "ingest") return Stage::kIngest;
  if (name == "prep") return Stage::kPrep;
  if (name == "fit") return Stage::kFit;
  if (name == "sweep") return Stage::kSweep;
  if (name == "embed") return Stage::kEmbed;
  if (name == "report") return Stage::kReport;
  if (name == "all") return Stage::kAll;
  throw Error("unknown stage \"" + name + "\"");
}

void run_stage(Stage stage, const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  {
    // Fail fast if the output directory is not writable.
    const std::string probe = (fs::path(config.out_dir) / ".write_probe").string();
    std::ofstream out(probe, std::ios::binary);
    if (!out) throw Error("output directory is not writable: " + config.out_dir);
    out.close();
    fs::remove(probe);
  }
  set_thread_count(config.threads);
  Manifest manifest(config, art(config, artifact::kManifest));

  switch (stage) {
    case Stage::kIngest:
      stage_ingest(config, manifest);
      break;
    case Stage::kPrep:
      stage_prep(config, manifest);
      break;
    case Stage::kFit:
      stage_fit(config, manifest);
      break;
    case Stage::kSweep:
      stage_sweep(config, manifest);
      break;
    case Stage::kEmbed:
      stage_embed(config, manifest);
      break;
    case Stage::kReport:
      stage_report(config, manifest);
      break;
    case Stage::kAll:
      stage_ingest(config, manifest);
      stage_prep(config, manifest);
      if (config.wants_sweep()) stage_sweep(config, manifest);
      else stage_fit(config, manifest);
      stage_embed(config, manifest);
      stage_report(config, manifest);
      break;
  }
}

void write_embedding_csv(const Embedding& embedding, const std::vector<std::string>& doc_ids,
                         const Eigen::MatrixXd& theta, const std::string& path) {
  if (static_cast<Eigen::Index>(doc_ids.size()) != embedding.coords.rows() ||
      theta.rows() != embedding.coords.rows()) {
    throw Error("write_embedding_csv: size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "doc_id,x,y,dominant_topic,max_theta\n";
  for (Eigen::Index i = 0; i < embedding.coords.rows(); ++i) {
    out << doc_ids[static_cast<std::size_t>(i)] << ',' << fmt17(embedding.coords(i, 0)) << ','
        << fmt17(embedding.coords(i, 1)) << ',' << embedding.dominant_topic[static_cast<std::size_t>(i)]
        << ',' << fmt17(theta.row(i).maxCoeff()) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

EmbeddingCsv read_embedding_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("doc_id,", 0) != 0) {
    throw Error("bad embedding header in " + path);
  }
  EmbeddingCsv out;
  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, x, y, topic, mt;
    if (!std::getline(ss, id, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ',') ||
        !std::getline(ss, topic, ',') || !std::getline(ss, mt, ',')) {
      throw Error("bad embedding row in " + path);
    }
    out.doc_ids.push_back(id);
    xs.push_back(std::stod(x));
    ys.push_back(std::stod(y));
    out.embedding.dominant_topic.push_back(std::stoi(topic));
  }
  out.embedding.coords.resize(static_cast<Eigen::Index>(xs.size()), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.embedding.coords(static_cast<Eigen::Index>(i), 0) = xs[i];
    out.embedding.coords(static_cast<Eigen::Index>(i), 1) = ys[i];
  }
  return out;
}

}  // namespace lmi
