#include "lmi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "lmi/error.hpp"
#include "lmi/mathutil.hpp"
#include "lmi/parallel.hpp"
#include "lmi/spectral.hpp"

namespace lmi {

namespace {

// Indices of the top-M entries, descending by value, ties to lower index.
std::vector<int> top_indices(const Eigen::VectorXd& values, int M) {
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values(a) > values(b); });
  order.resize(static_cast<std::size_t>(M));
  return order;
}

}  // namespace

DocFreqIndex::DocFreqIndex(const DocTermMatrix& dtm) : docs_(static_cast<std::size_t>(dtm.n_terms)) {
  for (const auto& e : dtm.entries) docs_[static_cast<std::size_t>(e.term)].push_back(e.doc);
  // entries are (doc, term)-sorted, so each term list is already ascending
}

int DocFreqIndex::doc_freq(int term) const {
  return static_cast<int>(docs_[static_cast<std::size_t>(term)].size());
}

int DocFreqIndex::co_doc_freq(int a, int b) const {
  const auto& da = docs_[static_cast<std::size_t>(a)];
  const auto& db = docs_[static_cast<std::size_t>(b)];
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < da.size() && j < db.size()) {
    if (da[i] < db[j]) ++i;
    else if (db[j] < da[i]) ++j;
    else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

double semantic_coherence(const Eigen::VectorXd& beta_row, const DocFreqIndex& index, int M) {
  if (M < 1) throw Error("semantic_coherence: M must be >= 1");
  if (M > index.n_terms()) throw Error("semantic_coherence: M exceeds vocabulary size");
  if (beta_row.size() != index.n_terms()) throw Error("semantic_coherence: beta row length mismatch");
  const auto top = top_indices(beta_row, M);
  double score = 0.0;
  for (int m = 1; m < M; ++m) {
    for (int l = 0; l < m; ++l) {
      const int df = index.doc_freq(top[static_cast<std::size_t>(l)]);
      if (df == 0) {
        throw Error("semantic_coherence: top word with zero document frequency (index " +
                    std::to_string(top[static_cast<std::size_t>(l)]) + ")");
      }
      const int co = index.co_doc_freq(top[static_cast<std::size_t>(m)], top[static_cast<std::size_t>(l)]);
      score += std::log((static_cast<double>(co) + 1.0) / static_cast<double>(df));
    }
  }
  return score;
}

Eigen::VectorXd frex_scores(const Eigen::MatrixXd& beta, int k, double omega) {
  const int K = static_cast<int>(beta.rows());
  const int V = static_cast<int>(beta.cols());
  if (K < 2) throw Error("exclusivity_frex: undefined for K=1");
  if (k < 0 || k >= K) throw Error("exclusivity_frex: topic index out of range");
  if (omega < 0.0 || omega > 1.0) throw Error("exclusivity_frex: omega must be in [0,1]");

  const Eigen::VectorXd freq = beta.row(k).transpose();
  Eigen::VectorXd excl(V);
  for (int v = 0; v < V; ++v) {
    const double col = beta.col(v).sum();
    excl(v) = col > 0.0 ? beta(k, v) / col : 0.0;
  }

  auto ecdf_ranks = [V](const Eigen::VectorXd& values) {
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    Eigen::VectorXd ranks(values.size());
    for (Eigen::Index v = 0; v < values.size(); ++v) {
      const auto ub = std::upper_bound(sorted.begin(), sorted.end(), values(v));
      ranks(v) = static_cast<double>(ub - sorted.begin()) / static_cast<double>(V);
    }
    return ranks;
  };
  const Eigen::VectorXd ecdf_excl = ecdf_ranks(excl);
  const Eigen::VectorXd ecdf_freq = ecdf_ranks(freq);

  Eigen::VectorXd scores(V);
  for (int v = 0; v < V; ++v) {
    scores(v) = 1.0 / (omega / ecdf_excl(v) + (1.0 - omega) / ecdf_freq(v));
  }
  return scores;
}

double exclusivity_frex(const Eigen::MatrixXd& beta, int k, int M, double omega) {
  const int V = static_cast<int>(beta.cols());
  if (M < 1 || M > V) throw Error("exclusivity_frex: M out of range");
  const Eigen::VectorXd scores = frex_scores(beta, k, omega);
  const auto top = top_indices(beta.row(k).transpose(), M);
  double total = 0.0;
  for (int v : top) total += scores(v);
  return total / static_cast<double>(M);
}

int select_k(const std::vector<ModelMetrics>& records) {
  std::vector<const ModelMetrics*> valid;
  for (const auto& r : records) {
    if (!r.failed) valid.push_back(&r);
  }
  if (valid.empty()) throw Error("select_k: no valid records");

  double cmin = valid.front()->mean_coherence, cmax = cmin;
  double emin = valid.front()->mean_exclusivity, emax = emin;
  for (const auto* r : valid) {
    cmin = std::min(cmin, r->mean_coherence);
    cmax = std::max(cmax, r->mean_coherence);
    emin = std::min(emin, r->mean_exclusivity);
    emax = std::max(emax, r->mean_exclusivity);
  }
  auto norm = [](double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.5; };

  int best_k = valid.front()->K;
  double best_score = -1.0;
  for (const auto* r : valid) {
    const double score = norm(r->mean_coherence, cmin, cmax) + norm(r->mean_exclusivity, emin, emax);
    if (score > best_score + 1e-12 || (std::abs(score - best_score) <= 1e-12 && r->K < best_k)) {
      best_score = score;
      best_k = r->K;
    }
  }
  return best_k;
}

DocTermMatrix dtm_slice(const DocTermMatrix& dtm, int lo, int hi) {
  if (lo < 0 || hi > dtm.n_docs || lo > hi) throw Error("dtm_slice: bad range");
  DocTermMatrix out;
  out.n_docs = hi - lo;
  out.n_terms = dtm.n_terms;
  out.doc_totals.assign(static_cast<std::size_t>(out.n_docs), 0);
  for (const auto& e : dtm.entries) {
    if (e.doc >= lo && e.doc < hi) out.entries.push_back({e.doc - lo, e.term, e.count});
  }
  for (const auto& e : out.entries) out.doc_totals[static_cast<std::size_t>(e.doc)] += e.count;
  for (int d = 0; d < out.n_docs; ++d) {
    if (out.doc_totals[static_cast<std::size_t>(d)] == 0) out.empty_docs.push_back(d);
  }
  return out;
}

namespace {

ModelMetrics metrics_for_model(const TopicModel& model, const DocFreqIndex& index,
                               const std::vector<SparseDoc>& heldout_docs, const SweepOptions& options) {
  ModelMetrics m;
  m.K = model.K;
  const int M = std::min(options.top_words, static_cast<int>(model.beta.cols()));
  for (int k = 0; k < model.K; ++k) {
    m.per_topic_coherence.push_back(semantic_coherence(model.beta.row(k).transpose(), index, M));
    m.per_topic_exclusivity.push_back(exclusivity_frex(model.beta, k, M, options.frex_omega));
  }
  m.mean_coherence = std::accumulate(m.per_topic_coherence.begin(), m.per_topic_coherence.end(), 0.0) /
                     static_cast<double>(model.K);
  m.mean_exclusivity = std::accumulate(m.per_topic_exclusivity.begin(), m.per_topic_exclusivity.end(), 0.0) /
                       static_cast<double>(model.K);
  bool any_heldout_tokens = false;
  for (const auto& d : heldout_docs) {
    if (!d.empty()) any_heldout_tokens = true;
  }
  if (any_heldout_tokens) m.heldout_ll = heldout_loglik(model, heldout_docs);
  return m;
}

}  // namespace

SweepResult sweep_k(const DocTermMatrix& dtm, const Vocabulary& vocab,
                    const std::vector<int>& k_list, const FitConfig& config,
                    const SweepOptions& options) {
  if (k_list.empty()) throw Error("sweep_k: k_list is empty");
  std::vector<int> ks = k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const int n_holdout = static_cast<int>(options.holdout_fraction * dtm.n_docs);
  const int n_train = dtm.n_docs - n_holdout;
  if (n_train < 1) throw Error("sweep_k: holdout fraction leaves no training documents");
  const DocTermMatrix train = n_holdout > 0 ? dtm_slice(dtm, 0, n_train) : dtm;
  const std::vector<SparseDoc> heldout =
      n_holdout > 0 ? dtm_rows(dtm_slice(dtm, n_train, dtm.n_docs)) : std::vector<SparseDoc>{};

  const DocFreqIndex index(train);
  const bool spectral = config.init == FitConfig::Init::kSpectral;
  CooccurrenceMatrix coocc;
  if (spectral) coocc = build_cooccurrence(train);

  SweepResult sweep;
  sweep.records.assign(ks.size(), ModelMetrics{});
  parallel_for(ks.size(), [&](std::size_t i) {
    const int K = ks[i];
    ModelMetrics& rec = sweep.records[i];
    rec.K = K;
    try {
      FitConfig fit = config;
      fit.seed = config.seed + static_cast<std::uint64_t>(K);
      std::optional<Eigen::MatrixXd> init;
      if (spectral) {
        const AnchorSet anchors = select_anchors(coocc, K, vocab.doc_freq, options.candidate_min_df);
        init = recover_l2(coocc, anchors).beta;
      }
      const TopicModel model = vem_fit(train, K, fit, init);
      rec = metrics_for_model(model, index, heldout, options);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  });

  bool any_ok = false;
  for (const auto& r : sweep.records) {
    if (!r.failed) any_ok = true;
  }
  if (!any_ok) throw Error("sweep_k: every K failed; first error: " + sweep.records.front().error);
  sweep.selected_K = select_k(sweep.records);
  return sweep;
}

SweepResult sweep_k_refined(const DocTermMatrix& dtm, const Vocabulary& vocab,
                            int k_min, int k_max, const FitConfig& config,
                            const SweepOptions& options) {
  if (k_min < 1 || k_max < k_min) throw Error("sweep_k_refined: bad K range");
  std::vector<int> coarse;
  for (int k = k_min; k <= k_max; k += 5) coarse.push_back(k);
  if (coarse.back() != k_max) coarse.push_back(k_max);
  SweepResult pass1 = sweep_k(dtm, vocab, coarse, config, options);

  std::vector<int> fine;
  for (int k = pass1.selected_K - 4; k <= pass1.selected_K + 4; ++k) {
    if (k < std::max(1, k_min) || k > k_max) continue;
    if (std::find(coarse.begin(), coarse.end(), k) != coarse.end()) continue;
    fine.push_back(k);
  }
  if (fine.empty()) return pass1;

  SweepResult pass2 = sweep_k(dtm, vocab, fine, config, options);
  SweepResult merged;
  merged.records = pass1.records;
  merged.records.insert(merged.records.end(), pass2.records.begin(), pass2.records.end());
  std::sort(merged.records.begin(), merged.records.end(),
            [](const ModelMetrics& a, const ModelMetrics& b) { return a.K < b.K; });
  merged.selected_K = select_k(merged.records);
  return merged;
}

TopicAlignment align_topics(const Eigen::MatrixXd& beta_a, const Eigen::MatrixXd& beta_b) {
  if (beta_a.rows() != beta_b.rows() || beta_a.cols() != beta_b.cols()) {
    throw Error("align_topics: shape mismatch");
  }
  const int K = static_cast<int>(beta_a.rows());
  Eigen::MatrixXd cost(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      cost(i, j) = tv_distance(beta_a.row(i).transpose(), beta_b.row(j).transpose());
    }
  }
  TopicAlignment out;
  out.permutation = hungarian(cost);
  for (int i = 0; i < K; ++i) {
    out.distances.push_back(cost(i, out.permutation[static_cast<std::size_t>(i)]));
    out.total_cost += out.distances.back();
  }
  return out;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "K,mean_coherence,mean_exclusivity,heldout_ll,selected\n";
  char buf[40];
  for (const auto& r : sweep.records) {
    out << r.K << ',';
    if (!r.failed) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.mean_coherence);
      out << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", r.mean_exclusivity);
      out << buf << ',';
      if (r.heldout_ll) {
        std::snprintf(buf, sizeof(buf), "%.17g", *r.heldout_ll);
        out << buf;
      }
    } else {
      out << ",,";
    }
    out << ',' << (!r.failed && r.K == sweep.selected_K ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace lmi
