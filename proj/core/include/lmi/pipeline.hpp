#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmi/embed.hpp"
#include "lmi/inference.hpp"
#include "lmi/metrics.hpp"
#include "lmi/preprocess.hpp"

namespace lmi {

/// Declarative end-to-end configuration. Exactly one of fixed_k, k_list,
/// k_range may be set; when none is, the default 10..50 refined sweep is
/// assumed. The resolved form is recorded in the run manifest.
struct PipelineConfig {
  std::string corpus_path;
  std::string corpus_format = "jsonl";
  std::string out_dir;
  std::uint64_t base_seed = 1;
  int threads = 0;

  PreprocessConfig preprocess;
  FitConfig fit;
  SweepOptions sweep;
  TsneConfig tsne;

  std::optional<int> fixed_k;
  std::optional<std::vector<int>> k_list;
  std::optional<std::pair<int, int>> k_range;
  std::optional<int> force_k;

  std::optional<std::string> labels_path;
  std::string word_ranking = "frex";
  std::string report_sort = "topic";

  void validate() const;
  bool wants_sweep() const { return !fixed_k.has_value(); }
};

/// Reads a JSON config file (all keys optional except corpus.path for
/// corpus-consuming stages).
PipelineConfig load_pipeline_config(const std::string& path);

/// Canonical JSON rendering of the resolved config (manifest payload).
std::string pipeline_config_json(const PipelineConfig& config);

enum class Stage { kIngest, kPrep, kFit, kSweep, kEmbed, kReport, kAll };
Stage stage_from_string(const std::string& name);

/// Runs one stage (or "all"). Stages communicate only through files in
/// config.out_dir, written atomically; manifest.json records the resolved
/// config, seeds, input digests, and per-stage wall time. Missing upstream
/// artifacts raise errors naming the stage to run first.
void run_stage(Stage stage, const PipelineConfig& config);

/// Artifact names within the output directory.
namespace artifact {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kVocab = "vocab.txt";
inline constexpr const char* kDtm = "dtm.mtx";
inline constexpr const char* kEmptyDocs = "empty_docs.txt";
inline constexpr const char* kModelDir = "model";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kEmbedding = "embedding.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kScatter = "scatter.svg";
inline constexpr const char* kSectors = "sectors.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

/// Embedding CSV (doc_id, x, y, dominant_topic, max_theta) I/O.
void write_embedding_csv(const Embedding& embedding, const std::vector<std::string>& doc_ids,
                         const Eigen::MatrixXd& theta, const std::string& path);
struct EmbeddingCsv {
  std::vector<std::string> doc_ids;
  Embedding embedding;
};
EmbeddingCsv read_embedding_csv(const std::string& path);

}  // namespace lmi
