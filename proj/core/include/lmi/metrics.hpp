#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lmi/inference.hpp"
#include "lmi/preprocess.hpp"

namespace lmi {

/// Document-frequency index over a DTM: D(v) and co-document counts D(v,w).
class DocFreqIndex {
 public:
  explicit DocFreqIndex(const DocTermMatrix& dtm);

  int doc_freq(int term) const;
  int co_doc_freq(int a, int b) const;
  int n_terms() const { return static_cast<int>(docs_.size()); }

 private:
  std::vector<std::vector<int>> docs_;  // per term, sorted doc ids
};

/// Mimno-style semantic coherence of one topic: over the top-M words by
/// beta (ties to the lower index), sum of log((D(v_m, v_l) + 1) / D(v_l))
/// for l < m. M=1 gives 0.
double semantic_coherence(const Eigen::VectorXd& beta_row, const DocFreqIndex& index, int M);

/// Per-word FREX scores for topic k: harmonic mean (weight omega) of the
/// within-topic ECDF ranks of column share and word probability. Values
/// lie in (0, 1]. Requires K >= 2.
Eigen::VectorXd frex_scores(const Eigen::MatrixXd& beta, int k, double omega = 0.7);

/// FREX averaged over the topic's top-M words by beta. Requires K >= 2.
double exclusivity_frex(const Eigen::MatrixXd& beta, int k, int M, double omega = 0.7);

struct ModelMetrics {
  int K = 0;
  std::vector<double> per_topic_coherence;
  std::vector<double> per_topic_exclusivity;
  double mean_coherence = 0.0;
  double mean_exclusivity = 0.0;
  std::optional<double> heldout_ll;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<ModelMetrics> records;  // ordered by K
  int selected_K = 0;
};

struct SweepOptions {
  int top_words = 10;
  double frex_omega = 0.7;
  int candidate_min_df = 10;
  double holdout_fraction = 0.1;
};

/// Fits one model per K (spectral anchor init unless the config says
/// random; per-K seed = config.seed + K), records coherence/exclusivity
/// and fold-in held-out log-likelihood on a deterministic tail split.
/// Single-K failures become failed records; the sweep continues.
SweepResult sweep_k(const DocTermMatrix& dtm, const Vocabulary& vocab,
                    const std::vector<int>& k_list, const FitConfig& config,
                    const SweepOptions& options = {});

/// Coarse stride-5 pass over [k_min, k_max] followed by a stride-1
/// re-sweep within +-4 of the coarse winner; records are merged before the
/// final selection.
SweepResult sweep_k_refined(const DocTermMatrix& dtm, const Vocabulary& vocab,
                            int k_min, int k_max, const FitConfig& config,
                            const SweepOptions& options = {});

/// Min-max normalizes mean coherence and exclusivity across records to
/// [0,1] and picks the K maximizing their sum; ties go to the smaller K.
int select_k(const std::vector<ModelMetrics>& records);

struct TopicAlignment {
  std::vector<int> permutation;   // row k of a matches row permutation[k] of b
  std::vector<double> distances;  // TV distance of each matched pair
  double total_cost = 0.0;
};

/// Minimum-total-cost perfect matching between topic rows under total
/// variation distance (Hungarian algorithm).
TopicAlignment align_topics(const Eigen::MatrixXd& beta_a, const Eigen::MatrixXd& beta_b);

/// Sweep trace rows: K, mean_coherence, mean_exclusivity, heldout_ll,
/// selected (0/1). Failed entries keep their K with empty metric cells.
void write_sweep_csv(const SweepResult& sweep, const std::string& path);

/// Extracts a contiguous document range [lo, hi) as its own DTM.
DocTermMatrix dtm_slice(const DocTermMatrix& dtm, int lo, int hi);

}  // namespace lmi
