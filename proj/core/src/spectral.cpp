#include "lmi/spectral.hpp"

#include <cmath>
#include <limits>

#include "lmi/error.hpp"
#include "lmi/parallel.hpp"

namespace lmi {

namespace {
constexpr int kDenseVocabLimit = 50000;
constexpr double kRankTol = 1e-12;
}  // namespace

CooccurrenceMatrix build_cooccurrence(const DocTermMatrix& dtm) {
  if (dtm.n_terms > kDenseVocabLimit) {
    throw Error("build_cooccurrence: vocabulary of " + std::to_string(dtm.n_terms) +
                " terms exceeds the dense limit of " + std::to_string(kDenseVocabLimit) +
                "; prune harder");
  }
  CooccurrenceMatrix out;
  out.Q = Eigen::MatrixXd::Zero(dtm.n_terms, dtm.n_terms);

  std::size_t row_begin = 0;
  const auto& entries = dtm.entries;
  for (int d = 0; d < dtm.n_docs; ++d) {
    std::size_t row_end = row_begin;
    while (row_end < entries.size() && entries[row_end].doc == d) ++row_end;
    const long n = dtm.doc_totals[static_cast<std::size_t>(d)];
    if (n < 2) {
      if (n >= 0) ++out.docs_skipped;
      row_begin = row_end;
      continue;
    }
    ++out.docs_used;
    const double w = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (std::size_t a = row_begin; a < row_end; ++a) {
      const double ca = entries[a].count;
      for (std::size_t b = row_begin; b < row_end; ++b) {
        const double cb = entries[b].count;
        const double pair = a == b ? ca * (ca - 1.0) : ca * cb;
        if (pair > 0.0) out.Q(entries[a].term, entries[b].term) += pair * w;
      }
    }
    row_begin = row_end;
  }
  if (out.docs_used == 0) throw Error("build_cooccurrence: no document has >= 2 tokens");
  out.Q /= static_cast<double>(out.docs_used);
  out.word_prob = out.Q.rowwise().sum();
  return out;
}

AnchorSet select_anchors(const CooccurrenceMatrix& coocc, int K,
                         const std::vector<int>& doc_freq, int candidate_min_df) {
  if (K < 1) throw Error("select_anchors: K must be >= 1");
  const int V = static_cast<int>(coocc.Q.rows());
  if (static_cast<int>(doc_freq.size()) != V) throw Error("select_anchors: doc_freq size mismatch");

  std::vector<int> candidates;
  for (int v = 0; v < V; ++v) {
    if (doc_freq[static_cast<std::size_t>(v)] >= candidate_min_df && coocc.word_prob(v) > 0.0) {
      candidates.push_back(v);
    }
  }
  const int C = static_cast<int>(candidates.size());
  if (C < K) {
    throw Error("select_anchors: only " + std::to_string(C) + " candidate words with doc_freq >= " +
                std::to_string(candidate_min_df) + " but K=" + std::to_string(K));
  }

  // Row-normalized profiles, centered on the candidate centroid.
  Eigen::MatrixXd residual(C, V);
  for (int i = 0; i < C; ++i) {
    const int v = candidates[static_cast<std::size_t>(i)];
    residual.row(i) = coocc.Q.row(v) / coocc.word_prob(v);
  }
  const Eigen::RowVectorXd centroid = residual.colwise().mean();
  residual.rowwise() -= centroid;

  AnchorSet out;
  out.anchors.reserve(static_cast<std::size_t>(K));
  out.residuals.reserve(static_cast<std::size_t>(K));
  for (int pick = 0; pick < K; ++pick) {
    int best = -1;
    double best_sq = -1.0;
    for (int i = 0; i < C; ++i) {
      const double sq = residual.row(i).squaredNorm();
      if (sq > best_sq) {  // ascending scan + strict > keeps the lowest index on ties
        best_sq = sq;
        best = i;
      }
    }
    const double norm = std::sqrt(std::max(best_sq, 0.0));
    if (norm <= kRankTol) {
      throw Error("select_anchors: rank deficiency, zero residual after " + std::to_string(pick) +
                  " of " + std::to_string(K) + " picks");
    }
    out.anchors.push_back(candidates[static_cast<std::size_t>(best)]);
    out.residuals.push_back(norm);
    const Eigen::RowVectorXd basis = residual.row(best) / norm;
    residual -= (residual * basis.transpose()) * basis;
  }
  return out;
}

RecoverResult recover_l2(const CooccurrenceMatrix& coocc, const AnchorSet& anchors,
                         const RecoverOptions& options) {
  const int V = static_cast<int>(coocc.Q.rows());
  const int K = static_cast<int>(anchors.anchors.size());
  if (K < 1) throw Error("recover_l2: empty anchor set");
  for (int a : anchors.anchors) {
    if (a < 0 || a >= V) throw Error("recover_l2: anchor index out of range");
    if (coocc.word_prob(a) <= 0.0) throw Error("recover_l2: anchor word has zero probability");
  }

  // Anchor profiles and their Gram matrix; per-word work is then O(K^2).
  Eigen::MatrixXd profiles(K, V);
  for (int k = 0; k < K; ++k) {
    const int a = anchors.anchors[static_cast<std::size_t>(k)];
    profiles.row(k) = coocc.Q.row(a) / coocc.word_prob(a);
  }
  const Eigen::MatrixXd gram = profiles * profiles.transpose();

  std::vector<int> anchor_of_word(static_cast<std::size_t>(V), -1);
  for (int k = 0; k < K; ++k) anchor_of_word[static_cast<std::size_t>(anchors.anchors[static_cast<std::size_t>(k)])] = k;

  RecoverResult out;
  out.weights = Eigen::MatrixXd::Zero(V, K);
  out.converged.assign(static_cast<std::size_t>(V), 1);
  std::vector<std::uint8_t> monotone(static_cast<std::size_t>(V), 1);

  parallel_for(static_cast<std::size_t>(V), [&](std::size_t vi) {
    const int v = static_cast<int>(vi);
    const int own = anchor_of_word[vi];
    if (own >= 0) {
      out.weights(v, own) = 1.0;  // exact vertex, objective 0
      return;
    }
    Eigen::VectorXd target = Eigen::VectorXd::Zero(K);
    if (coocc.word_prob(v) > 0.0) {
      target = profiles * (coocc.Q.row(v) / coocc.word_prob(v)).transpose();
    }

    Eigen::VectorXd logits = Eigen::VectorXd::Zero(K);
    auto to_simplex = [&](const Eigen::VectorXd& l) {
      Eigen::VectorXd c = (l.array() - l.maxCoeff()).exp();
      return Eigen::VectorXd(c / c.sum());
    };
    Eigen::VectorXd c = to_simplex(logits);
    // Constant term of the objective is dropped; only differences matter.
    auto objective = [&](const Eigen::VectorXd& x) { return x.dot(gram * x) - 2.0 * x.dot(target); };
    double f = objective(c);

    bool converged = false;
    for (int iter = 0; iter < options.max_iters; ++iter) {
      const Eigen::VectorXd grad = 2.0 * (gram * c - target);
      double step = options.initial_step;
      Eigen::VectorXd trial_logits, trial_c;
      double trial_f = 0.0;
      bool accepted = false;
      while (step > 1e-14) {
        trial_logits = logits - step * grad;
        trial_c = to_simplex(trial_logits);
        trial_f = objective(trial_c);
        if (trial_f <= f) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        converged = true;  // no feasible descent direction at machine scale
        break;
      }
      if (trial_f > f + 1e-12 * std::abs(f)) monotone[vi] = 0;
      // KL(new || old) over the simplex as the stop criterion.
      double kl = 0.0;
      for (int k = 0; k < K; ++k) {
        const double pn = trial_c(k), po = c(k);
        if (pn > 0.0) kl += po > 0.0 ? pn * std::log(pn / po) : std::numeric_limits<double>::infinity();
      }
      logits = trial_logits;
      c = trial_c;
      f = trial_f;
      if (kl < options.kl_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) out.converged[vi] = 0;
    out.weights.row(v) = c.transpose();
  });

  for (std::uint8_t flag : out.converged) {
    if (!flag) ++out.n_nonconverged;
  }
  for (std::uint8_t flag : monotone) {
    if (!flag) out.objective_monotone = false;
  }

  out.beta = Eigen::MatrixXd::Zero(K, V);
  for (int v = 0; v < V; ++v) {
    out.beta.col(v) = out.weights.row(v).transpose() * coocc.word_prob(v);
  }
  for (int k = 0; k < K; ++k) {
    const double sum = out.beta.row(k).sum();
    if (sum <= 0.0) throw Error("recover_l2: topic row " + std::to_string(k) + " has zero mass");
    out.beta.row(k) /= sum;
  }
  return out;
}

}  // namespace lmi
