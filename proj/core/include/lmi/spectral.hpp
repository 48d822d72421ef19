#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lmi/preprocess.hpp"

namespace lmi {

/// Word co-occurrence probability estimate. Q is symmetric, entrywise
/// nonnegative and sums to 1; word_prob holds its row sums.
struct CooccurrenceMatrix {
  Eigen::MatrixXd Q;
  Eigen::VectorXd word_prob;
  int docs_used = 0;
  int docs_skipped = 0;
};

/// Unbiased per-document co-occurrence estimator over documents with at
/// least two tokens: Q[i,j] = mean_d (c_di*c_dj - [i==j]*c_di) / (n_d*(n_d-1)).
/// Documents with fewer than two tokens are skipped and counted.
CooccurrenceMatrix build_cooccurrence(const DocTermMatrix& dtm);

/// Anchor words with the residual norm recorded at each greedy pick.
/// Residual norms are strictly positive and non-increasing.
struct AnchorSet {
  std::vector<int> anchors;
  std::vector<double> residuals;
};

/// Greedy farthest-point anchor selection on row-normalized Q. The pivot
/// set is seeded with the candidate centroid, so each pick maximizes the
/// Euclidean distance to the affine span of the centroid plus all previous
/// picks (computed by repeated orthogonal projection). Candidates are words
/// with doc_freq >= candidate_min_df; ties break to the lower word index.
AnchorSet select_anchors(const CooccurrenceMatrix& coocc, int K,
                         const std::vector<int>& doc_freq, int candidate_min_df);

struct RecoverOptions {
  double initial_step = 50.0;
  double kl_tol = 1e-7;
  int max_iters = 500;
};

struct RecoverResult {
  Eigen::MatrixXd beta;                  // K x V, rows sum to 1
  Eigen::MatrixXd weights;               // V x K simplex rows c_v
  std::vector<std::uint8_t> converged;   // per word
  int n_nonconverged = 0;
  bool objective_monotone = true;        // no per-iteration objective increase observed
};

/// Recovers the topic-word matrix from anchors: for every word the convex
/// coefficients over anchor co-occurrence profiles are fit by exponentiated
/// gradient with backtracking (objective never increases), then Bayes' rule
/// converts them to topic rows. Anchor words get their exact unit vector.
RecoverResult recover_l2(const CooccurrenceMatrix& coocc, const AnchorSet& anchors,
                         const RecoverOptions& options = {});

}  // namespace lmi
