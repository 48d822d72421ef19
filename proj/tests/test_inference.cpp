#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "lmi/corpus.hpp"
#include "lmi/error.hpp"
#include "lmi/inference.hpp"
#include "lmi/metrics.hpp"
#include "lmi/preprocess.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lmi;

namespace {

DocTermMatrix dtm_of(int n_terms, const std::vector<std::vector<std::pair<int, int>>>& docs) {
  DocTermMatrix dtm;
  dtm.n_docs = static_cast<int>(docs.size());
  dtm.n_terms = n_terms;
  dtm.doc_totals.assign(docs.size(), 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    long total = 0;
    for (const auto& [term, count] : docs[d]) {
      dtm.entries.push_back({static_cast<int>(d), term, count});
      total += count;
    }
    dtm.doc_totals[d] = total;
    if (total == 0) dtm.empty_docs.push_back(static_cast<int>(d));
  }
  return dtm;
}

bool elbo_trace_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] < trace[i - 1] - 1e-6 * std::abs(trace[i - 1])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("vem_fit with K=1 recovers empirical term frequencies") {
  const auto dtm = dtm_of(3, {
                                 {{0, 2}, {1, 1}},
                                 {{1, 3}, {2, 2}},
                                 {{0, 1}, {2, 1}},
                             });
  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  const TopicModel model = vem_fit(dtm, 1, config);
  const double total = 10.0;
  CHECK(model.beta(0, 0) == doctest::Approx(3.0 / total).epsilon(1e-9));
  CHECK(model.beta(0, 1) == doctest::Approx(4.0 / total).epsilon(1e-9));
  CHECK(model.beta(0, 2) == doctest::Approx(3.0 / total).epsilon(1e-9));
  for (int d = 0; d < 3; ++d) CHECK(model.theta(d, 0) == doctest::Approx(1.0));
  CHECK(elbo_trace_monotone(model.elbo_trace));
}

TEST_CASE("vem_fit gives empty documents the uniform prior row") {
  const auto dtm = dtm_of(2, {
                                 {{0, 2}},
                                 {},
                                 {{1, 2}},
                             });
  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  config.seed = 5;
  const TopicModel model = vem_fit(dtm, 2, config);
  CHECK(model.theta(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(model.theta(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("vem_fit simplex preservation and ELBO monotonicity on synthetic data") {
  SyntheticSpec spec;
  spec.K_true = 3;
  spec.V = 60;
  spec.D = 120;
  spec.doc_len_mean = 30.0;
  spec.seed = 42;
  const auto synth = synthesize_corpus(spec);
  PreprocessConfig pconfig;
  pconfig.min_doc_freq = 1;
  pconfig.max_doc_fraction = 1.0;
  const auto [vocab, dtm] = preprocess_corpus(synth.corpus, pconfig);

  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  config.seed = 9;
  config.max_em_iters = 60;
  const TopicModel model = vem_fit(dtm, 3, config);
  for (int k = 0; k < 3; ++k) {
    CHECK(model.beta.row(k).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.beta.row(k).minCoeff() >= 0.0);
  }
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d) {
    CHECK(model.theta.row(d).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.theta.row(d).minCoeff() >= 0.0);
  }
  CHECK(elbo_trace_monotone(model.elbo_trace));
  CHECK(model.elbo_trace.size() >= 2);
}

TEST_CASE("vem_fit label-switching covariance under permuted init") {
  const auto dtm = dtm_of(4, {
                                 {{0, 5}, {1, 1}},
                                 {{1, 4}, {2, 2}},
                                 {{2, 5}, {3, 1}},
                                 {{3, 4}, {0, 1}},
                                 {{0, 3}, {2, 3}},
                                 {{1, 2}, {3, 2}},
                             });
  Eigen::MatrixXd init(3, 4);
  init.row(0) << 0.7, 0.1, 0.1, 0.1;
  init.row(1) << 0.1, 0.7, 0.1, 0.1;
  init.row(2) << 0.1, 0.1, 0.4, 0.4;
  FitConfig config;
  config.alpha = 0.5;
  config.max_em_iters = 40;

  const TopicModel a = vem_fit(dtm, 3, config, init);
  // cyclic permutation of init rows: row k of b_init = row perm[k] of init
  const std::vector<int> perm = {2, 0, 1};
  Eigen::MatrixXd permuted(3, 4);
  for (int k = 0; k < 3; ++k) permuted.row(k) = init.row(perm[static_cast<std::size_t>(k)]);
  const TopicModel b = vem_fit(dtm, 3, config, permuted);

  const TopicAlignment alignment = align_topics(b.beta, a.beta);
  CHECK(alignment.permutation == perm);
  for (double d : alignment.distances) CHECK(d < 1e-6);
}

TEST_CASE("vem_fit errors: K above non-empty docs, shape mismatch") {
  const auto dtm = dtm_of(2, {{{0, 1}, {1, 1}}, {}});
  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  CHECK_THROWS_WITH_AS(vem_fit(dtm, 2, config), doctest::Contains("non-empty"), Error);
  Eigen::MatrixXd bad(1, 3);
  bad.setConstant(1.0 / 3.0);
  CHECK_THROWS_AS(vem_fit(dtm, 1, config, bad), Error);
}

TEST_CASE("gibbs sampler matches exhaustive enumeration on the asymmetric 4-token instance") {
  // docs {a a} and {a b}
  const std::vector<std::vector<int>> docs = {{0, 0}, {0, 1}};
  const double alpha = 1.0, eta = 0.5;
  const Eigen::MatrixXd expected = lmi_test::enumerate_posterior_beta(docs, 2, 2, alpha, eta);

  const auto dtm = dtm_of(2, {{{0, 2}}, {{0, 1}, {1, 1}}});
  const TopicModel model = gibbs_fit(dtm, 2, alpha, eta, 21000, 1000, 99);
  CHECK((model.beta - expected).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("gibbs sampler matches enumeration on the symmetric instance") {
  // docs {a a} and {b b}: posterior-mean beta is exactly uniform by symmetry
  const std::vector<std::vector<int>> docs = {{0, 0}, {1, 1}};
  const Eigen::MatrixXd expected = lmi_test::enumerate_posterior_beta(docs, 2, 2, 1.0, 0.5);
  CHECK(expected(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(expected(1, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const auto dtm = dtm_of(2, {{{0, 2}}, {{1, 2}}});
  const TopicModel model = gibbs_fit(dtm, 2, 1.0, 0.5, 21000, 1000, 7);
  CHECK((model.beta - expected).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("gibbs prior domination: huge alpha forces uniform theta") {
  const auto dtm = dtm_of(3, {{{0, 4}, {1, 2}}, {{2, 6}}});
  const TopicModel model = gibbs_fit(dtm, 3, 1e6, 1.0, 1200, 200, 3);
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d) {
    for (int k = 0; k < 3; ++k) {
      CHECK(model.theta(d, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("gibbs determinism and burn-in validation") {
  const auto dtm = dtm_of(2, {{{0, 2}}, {{0, 1}, {1, 1}}});
  const TopicModel a = gibbs_fit(dtm, 2, 1.0, 0.5, 500, 100, 11);
  const TopicModel b = gibbs_fit(dtm, 2, 1.0, 0.5, 500, 100, 11);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(gibbs_fit(dtm, 2, 1.0, 0.5, 100, 100, 1), Error);
}

TEST_CASE("vem agrees with enumeration on the symmetric oracle instance") {
  const std::vector<std::vector<int>> docs = {{0, 0}, {1, 1}};
  const Eigen::MatrixXd expected = lmi_test::enumerate_posterior_beta(docs, 2, 2, 1.0, 0.5);

  const auto dtm = dtm_of(2, {{{0, 2}}, {{1, 2}}});
  Eigen::MatrixXd uniform_init = Eigen::MatrixXd::Constant(2, 2, 0.5);
  FitConfig config;
  config.alpha = 1.0;
  const TopicModel model = vem_fit(dtm, 2, config, uniform_init);
  const TopicAlignment alignment = align_topics(model.beta, expected);
  for (double d : alignment.distances) CHECK(d < 0.05);
}

TEST_CASE("infer_theta reproduces training rows and handles empty docs") {
  const auto dtm = dtm_of(3, {
                                 {{0, 4}, {1, 1}},
                                 {{1, 3}, {2, 2}},
                                 {{0, 1}, {2, 4}},
                             });
  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  config.seed = 2;
  const TopicModel model = vem_fit(dtm, 2, config);

  const auto rows = dtm_rows(dtm);
  const Eigen::MatrixXd refolded = infer_theta(model, rows);
  CHECK((refolded - model.theta).cwiseAbs().maxCoeff() < 1e-6);

  const Eigen::MatrixXd empty = infer_theta(model, {SparseDoc{}});
  CHECK(empty(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(infer_theta(model, {SparseDoc{{7, 1}}}), doctest::Contains("unknown term"), Error);
}

TEST_CASE("infer_theta concentrates on the anchored topic") {
  TopicModel model;
  model.K = 2;
  model.alpha = 0.1;
  model.beta.resize(2, 3);
  model.beta.row(0) << 0.90, 0.05, 0.05;
  model.beta.row(1) << 0.05, 0.05, 0.90;
  const Eigen::MatrixXd theta = infer_theta(model, {SparseDoc{{0, 20}}});
  CHECK(theta(0, 0) > 0.9);
}

TEST_CASE("heldout log-likelihood: certain event, unigram reduction, model ordering") {
  // V=1: every token is certain
  {
    const auto dtm = dtm_of(1, {{{0, 3}}, {{0, 2}}});
    FitConfig config;
    config.init = FitConfig::Init::kRandom;
    const TopicModel model = vem_fit(dtm, 1, config);
    CHECK(heldout_loglik(model, dtm_rows(dtm)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  // K=1 equals the unigram model exactly
  {
    const auto dtm = dtm_of(3, {{{0, 2}, {1, 1}}, {{1, 3}, {2, 2}}, {{0, 1}, {2, 1}}});
    FitConfig config;
    config.init = FitConfig::Init::kRandom;
    const TopicModel model = vem_fit(dtm, 1, config);
    const double ll = heldout_loglik(model, dtm_rows(dtm));
    // independent unigram computation
    const double total = 10.0;
    const double unigram =
        (3.0 * std::log(3.0 / total) + 4.0 * std::log(4.0 / total) + 3.0 * std::log(3.0 / total)) / total;
    CHECK(ll == doctest::Approx(unigram).epsilon(1e-9));
  }
  // true model beats a row-permuted (mismatched) model on data from the truth
  {
    SyntheticSpec spec;
    spec.K_true = 4;
    spec.V = 80;
    spec.D = 300;
    spec.doc_len_mean = 50.0;
    spec.alpha_true = 0.1;
    spec.anchor_fraction = 0.1;
    spec.seed = 123;
    const auto synth = synthesize_corpus(spec);
    PreprocessConfig pconfig;
    pconfig.min_doc_freq = 1;
    pconfig.max_doc_fraction = 1.0;
    const auto [vocab, dtm] = preprocess_corpus(synth.corpus, pconfig);
    REQUIRE(vocab.size() == spec.V);

    TopicModel truth;
    truth.K = spec.K_true;
    truth.alpha = spec.alpha_true;
    truth.beta = synth.beta_true.cwiseMax(1e-10);
    for (int k = 0; k < truth.K; ++k) truth.beta.row(k) /= truth.beta.row(k).sum();

    TopicModel shuffled = truth;
    // derange columns: word v's probabilities move to word (v+1) mod V
    Eigen::MatrixXd rolled(truth.K, spec.V);
    for (int v = 0; v < spec.V; ++v) rolled.col((v + 1) % spec.V) = truth.beta.col(v);
    shuffled.beta = rolled;

    const auto rows = dtm_rows(dtm);
    CHECK(heldout_loglik(truth, rows) > heldout_loglik(shuffled, rows));
  }
}

TEST_CASE("covariate_association: independence, single docs, symmetry") {
  Rng rng(55);
  const int D = 5000, K = 3;
  TopicModel model;
  model.K = K;
  model.alpha = 1.0;
  model.beta = Eigen::MatrixXd::Constant(K, 2, 0.5);
  model.theta.resize(D, K);
  Corpus corpus;
  corpus.sector_set = {"left", "right"};
  for (int d = 0; d < D; ++d) {
    const auto row = rng.dirichlet(0.5, K);
    for (int k = 0; k < K; ++k) model.theta(d, k) = row[static_cast<std::size_t>(k)];
    // labels independent of theta by construction
    corpus.documents.push_back({"d" + std::to_string(d), "", "", d % 2 == 0 ? "left" : "right", {}});
  }
  const CovariateTable table = covariate_association(model, corpus, "sector");
  REQUIRE(table.levels.size() == 2);
  for (const auto& level : table.levels) {
    CHECK(level.difference.cwiseAbs().maxCoeff() < 0.02);
  }

  // one doc per level: the mean is that document's theta row
  TopicModel tiny;
  tiny.K = 2;
  tiny.alpha = 1.0;
  tiny.beta = Eigen::MatrixXd::Constant(2, 2, 0.5);
  tiny.theta.resize(2, 2);
  tiny.theta << 0.9, 0.1, 0.2, 0.8;
  Corpus two;
  two.sector_set = {"a", "b"};
  two.documents.push_back({"x", "", "", "a", {}});
  two.documents.push_back({"y", "", "", "b", {}});
  const CovariateTable t2 = covariate_association(tiny, two, "sector");
  CHECK(t2.levels[0].mean_theta(0) == doctest::Approx(0.9));
  CHECK(t2.levels[1].mean_theta(1) == doctest::Approx(0.8));

  // identical per-level theta rows give zero differences
  TopicModel sym;
  sym.K = 2;
  sym.alpha = 1.0;
  sym.beta = Eigen::MatrixXd::Constant(2, 2, 0.5);
  sym.theta.resize(4, 2);
  sym.theta << 0.7, 0.3, 0.4, 0.6, 0.7, 0.3, 0.4, 0.6;
  Corpus four;
  four.sector_set = {"a", "b"};
  four.documents.push_back({"1", "", "", "a", {}});
  four.documents.push_back({"2", "", "", "a", {}});
  four.documents.push_back({"3", "", "", "b", {}});
  four.documents.push_back({"4", "", "", "b", {}});
  const CovariateTable t3 = covariate_association(sym, four, "sector");
  for (const auto& level : t3.levels) {
    CHECK(level.difference.cwiseAbs().maxCoeff() < 1e-15);
  }

  // single-level covariate errors
  Corpus mono;
  mono.sector_set = {"a"};
  mono.documents.push_back({"1", "", "", "a", {}});
  mono.documents.push_back({"2", "", "", "a", {}});
  TopicModel m2 = tiny;
  CHECK_THROWS_AS(covariate_association(m2, mono, "sector"), Error);
}

TEST_CASE("model save and load round-trips exactly") {
  const auto dtm = dtm_of(3, {{{0, 2}, {1, 1}}, {{1, 1}, {2, 2}}});
  FitConfig config;
  config.init = FitConfig::Init::kRandom;
  config.seed = 77;
  const TopicModel model = vem_fit(dtm, 2, config);

  lmi_test::TempDir tmp("model");
  save_model(model, tmp.file("m"));
  const TopicModel back = load_model(tmp.file("m"));
  CHECK(back.K == model.K);
  CHECK(back.alpha == model.alpha);
  CHECK(back.seed == model.seed);
  CHECK(back.converged == model.converged);
  CHECK(back.init == model.init);
  CHECK((back.beta - model.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.theta - model.theta).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.elbo_trace.size() == model.elbo_trace.size());
  for (std::size_t i = 0; i < model.elbo_trace.size(); ++i) {
    CHECK(back.elbo_trace[i] == model.elbo_trace[i]);
  }
}
