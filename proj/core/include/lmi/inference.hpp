#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmi/corpus.hpp"
#include "lmi/preprocess.hpp"

namespace lmi {

/// Sparse document row: (term index, count) pairs, term-sorted.
using SparseDoc = std::vector<std::pair<int, int>>;

/// Extracts per-document rows from a DTM.
std::vector<SparseDoc> dtm_rows(const DocTermMatrix& dtm);

struct TopicModel {
  int K = 0;
  Eigen::MatrixXd beta;   // K x V, rows sum to 1
  Eigen::MatrixXd theta;  // D x K, rows sum to 1
  double alpha = 0.0;
  bool converged = false;
  std::vector<double> elbo_trace;
  std::string init = "random";
  std::uint64_t seed = 0;
};

struct FitConfig {
  double alpha = 0.0;  // <= 0 selects the 50/K default
  int max_em_iters = 200;
  double em_tol = 1e-5;  // relative ELBO change
  enum class Init { kSpectral, kRandom } init = Init::kSpectral;
  std::uint64_t seed = 1;

  double resolved_alpha(int K) const { return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(K); }
};

/// Variational EM for LDA. E-steps run per document (parallel, reduced in
/// fixed block order); the M-step floors sufficient statistics at 1e-10
/// before row normalization. The ELBO trace is non-decreasing up to 1e-6
/// relative tolerance, and theta always comes from an E-step against the
/// final beta so fold-in reproduces it. When init_beta is absent, beta is
/// initialized from seeded Dirichlet draws.
TopicModel vem_fit(const DocTermMatrix& dtm, int K, const FitConfig& config,
                   const std::optional<Eigen::MatrixXd>& init_beta = std::nullopt);

/// Collapsed Gibbs sampler: p(z=k | rest) ~ (n_dk + alpha) * (n_kw + eta) /
/// (n_k + V*eta). beta and theta are posterior means over post-burn-in
/// sweeps. Single-threaded; fixed seed gives an identical sample path.
TopicModel gibbs_fit(const DocTermMatrix& dtm, int K, double alpha, double eta,
                     int iters, int burn_in, std::uint64_t seed);

/// Fold-in: E-step only with beta frozen. Rows sum to 1; empty docs get
/// the uniform 1/K row. Unknown term indices raise an error.
Eigen::MatrixXd infer_theta(const TopicModel& model, const std::vector<SparseDoc>& docs);

/// Per-token log p(w) = sum log sum_k theta_dk * beta_kw over folded-in
/// theta. A token whose beta column is entirely below 1e-12 is an error.
double heldout_loglik(const TopicModel& model, const std::vector<SparseDoc>& docs);

struct CovariateLevel {
  std::string level;
  int n_docs = 0;
  Eigen::VectorXd mean_theta;  // length K
  Eigen::VectorXd difference;  // mean_theta - grand_mean
};

struct CovariateTable {
  std::string covariate;
  Eigen::VectorXd grand_mean;  // length K
  std::vector<CovariateLevel> levels;
};

/// Post-hoc mean-difference association between a categorical metadata key
/// ("sector", "company", or an extra key) and document-topic proportions.
CovariateTable covariate_association(const TopicModel& model, const Corpus& corpus,
                                     const std::string& covariate);

/// CSV bundle (beta.csv, theta.csv, meta.json) under dir; full-precision
/// round trip.
void save_model(const TopicModel& model, const std::string& dir);
TopicModel load_model(const std::string& dir);

}  // namespace lmi
