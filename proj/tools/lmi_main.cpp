// lmi: topic-based classification of job-posting corpora.
//
// Pipeline stages communicate through files in the output directory, so any
// stage can be rerun in isolation:
//   lmi all --corpus data/sample/corpus.jsonl --out runs/sample --k-list 3,4,5

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmi/error.hpp"
#include "lmi/pipeline.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::string corpus;
  std::string format;
  std::string out;
  std::uint64_t seed = 0;
  int threads = -1;
  int k = 0;
  std::string k_list;
  int k_min = 0, k_max = 0;
  int force_k = 0;
  std::string labels;
  std::string stopwords;
  int min_word_len = 0;
  int min_doc_freq = 0;
  double max_doc_fraction = 0.0;
  double alpha = -1.0;
  int em_iters = 0;
  double em_tol = 0.0;
  std::string init;
  double perplexity = 0.0;
  int tsne_iters = 0;
  double learning_rate = 0.0;
  std::string metric;
  std::string word_ranking;
  std::string sort;
  int top_words = 0;
  double frex_omega = -1.0;
  int candidate_min_df = 0;
  double holdout_fraction = -1.0;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stoi(item));
  }
  if (values.empty()) throw lmi::Error("--k-list: no values parsed from \"" + text + "\"");
  return values;
}

lmi::PipelineConfig resolve_config(const CLI::App& app, const Flags& flags) {
  lmi::PipelineConfig config;
  if (!flags.config_path.empty()) config = lmi::load_pipeline_config(flags.config_path);

  auto passed = [&](const std::string& name) { return app.count(name) > 0; };
  if (passed("--corpus")) config.corpus_path = flags.corpus;
  if (passed("--format")) config.corpus_format = flags.format;
  if (passed("--out")) config.out_dir = flags.out;
  if (passed("--seed")) config.base_seed = flags.seed;
  if (passed("--threads")) {
    config.threads = flags.threads;
  } else if (const char* env = std::getenv("LMI_THREADS"); env != nullptr && *env != '\0') {
    config.threads = std::atoi(env);
  }
  if (passed("--k")) config.fixed_k = flags.k;
  if (passed("--k-list")) config.k_list = parse_int_list(flags.k_list);
  if (passed("--k-min") || passed("--k-max")) {
    const int lo = passed("--k-min") ? flags.k_min : 10;
    const int hi = passed("--k-max") ? flags.k_max : 50;
    config.k_range = std::make_pair(lo, hi);
  }
  if (passed("--force-k")) config.force_k = flags.force_k;
  if (passed("--labels")) config.labels_path = flags.labels;
  if (passed("--stopwords")) config.preprocess.stopwords_custom_path = flags.stopwords;
  if (passed("--min-word-len")) config.preprocess.min_word_len = flags.min_word_len;
  if (passed("--min-doc-freq")) config.preprocess.min_doc_freq = flags.min_doc_freq;
  if (passed("--max-doc-fraction")) config.preprocess.max_doc_fraction = flags.max_doc_fraction;
  if (passed("--alpha")) config.fit.alpha = flags.alpha;
  if (passed("--em-iters")) config.fit.max_em_iters = flags.em_iters;
  if (passed("--em-tol")) config.fit.em_tol = flags.em_tol;
  if (passed("--init")) {
    if (flags.init == "spectral") config.fit.init = lmi::FitConfig::Init::kSpectral;
    else if (flags.init == "random") config.fit.init = lmi::FitConfig::Init::kRandom;
    else throw lmi::Error("--init must be spectral or random");
  }
  if (passed("--perplexity")) config.tsne.perplexity = flags.perplexity;
  if (passed("--tsne-iters")) config.tsne.iters = flags.tsne_iters;
  if (passed("--learning-rate")) config.tsne.learning_rate = flags.learning_rate;
  if (passed("--metric")) {
    if (flags.metric == "euclidean") config.tsne.metric = lmi::TsneConfig::Metric::kEuclidean;
    else if (flags.metric == "hellinger") config.tsne.metric = lmi::TsneConfig::Metric::kHellinger;
    else throw lmi::Error("--metric must be euclidean or hellinger");
  }
  if (passed("--word-ranking")) config.word_ranking = flags.word_ranking;
  if (passed("--sort")) config.report_sort = flags.sort;
  if (passed("--top-words")) config.sweep.top_words = flags.top_words;
  if (passed("--frex-omega")) config.sweep.frex_omega = flags.frex_omega;
  if (passed("--candidate-min-df")) config.sweep.candidate_min_df = flags.candidate_min_df;
  if (passed("--holdout-fraction")) config.sweep.holdout_fraction = flags.holdout_fraction;
  return config;
}

void print_stage_summary(const lmi::PipelineConfig& config, const std::string& stage) {
  const std::string manifest_path = config.out_dir + "/manifest.json";
  std::ifstream in(manifest_path);
  if (!in) return;
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (...) {
    return;
  }
  if (!manifest.contains("stages")) return;
  const auto& stages = manifest["stages"];
  if ((stage == "sweep" || stage == "all") && stages.contains("sweep")) {
    std::cout << "selected_K=" << stages["sweep"].value("selected_K", 0);
    if (stages["sweep"].contains("forced_K")) std::cout << " (forced_K=" << stages["sweep"]["forced_K"].get<int>() << ")";
    std::cout << "\n";
  }
  if (stages.contains(stage) && stages[stage].contains("wall_ms")) {
    std::fprintf(stdout, "%s finished in %.0f ms\n", stage.c_str(), stages[stage]["wall_ms"].get<double>());
  }
}

// Table-style prevalence printout, one decimal place.
void print_report(const lmi::PipelineConfig& config) {
  std::ifstream in(config.out_dir + "/report.csv");
  if (!in) return;
  std::string line;
  std::getline(in, line);  // header
  std::cout << "topic  prevalence  label / top words\n";
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string id, label, prev, words;
    std::getline(ss, id, ',');
    std::getline(ss, label, ',');
    std::getline(ss, prev, ',');
    std::getline(ss, words);
    std::fprintf(stdout, "%5s  %9.1f%%  %s%s%s\n", id.c_str(), std::stod(prev), label.c_str(),
                 label.empty() ? "" : " — ", words.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmi: topic-based classification of online job-vacancy corpora"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config_path, "JSON pipeline config; flags override file values");
  app.add_option("--corpus", flags.corpus, "corpus file path");
  app.add_option("--format", flags.format, "corpus format: jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
  app.add_option("--out", flags.out, "output directory for stage artifacts");
  app.add_option("--seed", flags.seed, "base RNG seed");
  app.add_option("--threads", flags.threads, "worker threads (0 = all cores; env LMI_THREADS is the fallback)");
  app.add_option("--k", flags.k, "fixed topic count (fit)");
  app.add_option("--k-list", flags.k_list, "comma-separated K values to sweep");
  app.add_option("--k-min", flags.k_min, "sweep range lower bound");
  app.add_option("--k-max", flags.k_max, "sweep range upper bound");
  app.add_option("--force-k", flags.force_k, "override the sweep's selected K");
  app.add_option("--labels", flags.labels, "topic labels file (topic_id<TAB>label)");
  app.add_option("--stopwords", flags.stopwords, "custom stopword file");
  app.add_option("--min-word-len", flags.min_word_len, "minimum token length");
  app.add_option("--min-doc-freq", flags.min_doc_freq, "vocabulary document-frequency floor");
  app.add_option("--max-doc-fraction", flags.max_doc_fraction, "vocabulary document-fraction cap");
  app.add_option("--alpha", flags.alpha, "Dirichlet prior (0 = 50/K)");
  app.add_option("--em-iters", flags.em_iters, "max EM iterations");
  app.add_option("--em-tol", flags.em_tol, "relative ELBO tolerance");
  app.add_option("--init", flags.init, "fit initialization: spectral or random");
  app.add_option("--perplexity", flags.perplexity, "t-SNE perplexity");
  app.add_option("--tsne-iters", flags.tsne_iters, "t-SNE iterations");
  app.add_option("--learning-rate", flags.learning_rate, "t-SNE learning rate");
  app.add_option("--metric", flags.metric, "t-SNE input metric: euclidean or hellinger");
  app.add_option("--word-ranking", flags.word_ranking, "report word ranking: prob or frex");
  app.add_option("--sort", flags.sort, "report order: topic or prevalence");
  app.add_option("--top-words", flags.top_words, "top words per topic in reports/metrics");
  app.add_option("--frex-omega", flags.frex_omega, "FREX exclusivity weight");
  app.add_option("--candidate-min-df", flags.candidate_min_df, "anchor candidate document-frequency floor");
  app.add_option("--holdout-fraction", flags.holdout_fraction, "sweep held-out tail fraction");

  for (const char* name : {"ingest", "prep", "fit", "sweep", "embed", "report", "all"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("ingest")->description("load and canonicalize the corpus");
  app.get_subcommand("prep")->description("normalize text, build vocabulary and DTM");
  app.get_subcommand("fit")->description("fit a topic model at a fixed K");
  app.get_subcommand("sweep")->description("fit across K values, select, refit");
  app.get_subcommand("embed")->description("t-SNE embedding of document-topic rows");
  app.get_subcommand("report")->description("prevalence table, word lists, scatter SVG");
  app.get_subcommand("all")->description("run every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string stage_name = app.get_subcommands().front()->get_name();
    const lmi::PipelineConfig config = resolve_config(app, flags);
    lmi::run_stage(lmi::stage_from_string(stage_name), config);
    print_stage_summary(config, stage_name);
    if (stage_name == "report" || stage_name == "all") print_report(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
