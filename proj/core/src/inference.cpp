#include "lmi/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lmi/error.hpp"
#include "lmi/mathutil.hpp"
#include "lmi/parallel.hpp"
#include "lmi/rng.hpp"

namespace lmi {

namespace {

constexpr double kBetaFloor = 1e-10;
constexpr int kDocMaxIters = 100;

Eigen::MatrixXd floored_rows(Eigen::MatrixXd m) {
  m = m.cwiseMax(kBetaFloor);
  for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) /= m.row(k).sum();
  return m;
}

struct DocResult {
  Eigen::VectorXd gamma;
  double elbo = 0.0;
};

// One-document coordinate ascent on (phi, gamma) given log beta. When ss is
// non-null the converged phi statistics are accumulated into it.
DocResult doc_estep(const SparseDoc& doc, const Eigen::MatrixXd& log_beta, double alpha,
                    Eigen::MatrixXd* ss) {
  const int K = static_cast<int>(log_beta.rows());
  double n_d = 0.0;
  for (const auto& [v, c] : doc) n_d += c;

  DocResult out;
  out.gamma = Eigen::VectorXd::Constant(K, alpha + n_d / K);
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(doc.size()), K);
  Eigen::VectorXd dig(K);

  const double gamma_tol = 1e-8 * (1.0 + n_d);
  for (int it = 0; it < kDocMaxIters; ++it) {
    for (int k = 0; k < K; ++k) dig(k) = digamma(out.gamma(k));
    Eigen::VectorXd gamma_new = Eigen::VectorXd::Constant(K, alpha);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const auto& [v, c] = doc[i];
      Eigen::VectorXd lp = dig + log_beta.col(v);
      const double mx = lp.maxCoeff();
      Eigen::VectorXd w = (lp.array() - mx).exp();
      w /= w.sum();
      phi.row(static_cast<Eigen::Index>(i)) = w.transpose();
      gamma_new += c * w;
    }
    const double delta = (gamma_new - out.gamma).cwiseAbs().maxCoeff();
    out.gamma = gamma_new;
    if (delta < gamma_tol) break;
  }

  // Variational bound for this document.
  const double gamma_sum = out.gamma.sum();
  const double dig_sum = digamma(gamma_sum);
  for (int k = 0; k < K; ++k) dig(k) = digamma(out.gamma(k)) - dig_sum;
  double elbo = std::lgamma(K * alpha) - K * std::lgamma(alpha);
  elbo -= std::lgamma(gamma_sum);
  for (int k = 0; k < K; ++k) {
    elbo += (alpha - 1.0) * dig(k);
    elbo += std::lgamma(out.gamma(k));
    elbo -= (out.gamma(k) - 1.0) * dig(k);
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& [v, c] = doc[i];
    for (int k = 0; k < K; ++k) {
      const double p = phi(static_cast<Eigen::Index>(i), k);
      if (p <= 0.0) continue;
      elbo += c * p * (dig(k) + log_beta(k, v) - std::log(p));
    }
  }
  out.elbo = elbo;

  if (ss != nullptr) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const auto& [v, c] = doc[i];
      ss->col(v) += c * phi.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }
  return out;
}

struct EstepResult {
  Eigen::MatrixXd gamma;  // D x K
  Eigen::MatrixXd ss;     // K x V
  double elbo = 0.0;
};

EstepResult corpus_estep(const std::vector<SparseDoc>& docs, const Eigen::MatrixXd& log_beta, double alpha) {
  const int K = static_cast<int>(log_beta.rows());
  const int V = static_cast<int>(log_beta.cols());
  const std::size_t D = docs.size();

  EstepResult out;
  out.gamma.resize(static_cast<Eigen::Index>(D), K);

  // Fixed 16-way blocking: partial sufficient statistics are reduced in
  // block order so results do not depend on the worker count.
  const std::size_t kBlocks = 16;
  std::vector<Eigen::MatrixXd> part_ss;
  std::vector<double> part_elbo;
  part_ss.assign(kBlocks, Eigen::MatrixXd());
  part_elbo.assign(kBlocks, 0.0);
  const std::size_t nblocks = blocked_partition(D, kBlocks, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(K, V);
    double elbo = 0.0;
    for (std::size_t d = lo; d < hi; ++d) {
      DocResult r = doc_estep(docs[d], log_beta, alpha, &ss);
      out.gamma.row(static_cast<Eigen::Index>(d)) = r.gamma.transpose();
      elbo += r.elbo;
    }
    part_ss[b] = std::move(ss);
    part_elbo[b] = elbo;
  });

  out.ss = Eigen::MatrixXd::Zero(K, V);
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (part_ss[b].size() > 0) out.ss += part_ss[b];
    out.elbo += part_elbo[b];
  }
  return out;
}

Eigen::MatrixXd theta_from_gamma(const Eigen::MatrixXd& gamma) {
  Eigen::MatrixXd theta = gamma;
  for (Eigen::Index d = 0; d < theta.rows(); ++d) theta.row(d) /= theta.row(d).sum();
  return theta;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("ragged matrix csv: " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty matrix csv: " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace

std::vector<SparseDoc> dtm_rows(const DocTermMatrix& dtm) {
  std::vector<SparseDoc> docs(static_cast<std::size_t>(dtm.n_docs));
  for (const auto& e : dtm.entries) docs[static_cast<std::size_t>(e.doc)].emplace_back(e.term, e.count);
  return docs;
}

TopicModel vem_fit(const DocTermMatrix& dtm, int K, const FitConfig& config,
                   const std::optional<Eigen::MatrixXd>& init_beta) {
  if (K < 1) throw Error("vem_fit: K must be >= 1");
  const int V = dtm.n_terms;
  const auto docs = dtm_rows(dtm);
  int non_empty = 0;
  for (const auto& d : docs) {
    if (!d.empty()) ++non_empty;
  }
  if (K > non_empty) {
    throw Error("vem_fit: K=" + std::to_string(K) + " exceeds the " + std::to_string(non_empty) + " non-empty documents");
  }

  TopicModel model;
  model.K = K;
  model.alpha = config.resolved_alpha(K);
  model.seed = config.seed;

  Eigen::MatrixXd beta;
  if (init_beta.has_value()) {
    if (init_beta->rows() != K || init_beta->cols() != V) throw Error("vem_fit: init_beta shape mismatch");
    beta = floored_rows(*init_beta);
    model.init = config.init == FitConfig::Init::kSpectral ? "spectral" : "custom";
  } else {
    Rng rng(config.seed);
    beta.resize(K, V);
    for (int k = 0; k < K; ++k) {
      const auto row = rng.dirichlet(1.0, V);
      for (int v = 0; v < V; ++v) beta(k, v) = row[static_cast<std::size_t>(v)];
    }
    beta = floored_rows(beta);
    model.init = "random";
  }

  double prev_elbo = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= config.max_em_iters; ++iter) {
    const Eigen::MatrixXd log_beta = beta.array().log();
    EstepResult e = corpus_estep(docs, log_beta, model.alpha);
    if (std::isnan(e.elbo)) throw Error("vem_fit: NaN in ELBO at iteration " + std::to_string(iter));
    model.elbo_trace.push_back(e.elbo);
    if (iter > 0) {
      const double rel = std::abs(e.elbo - prev_elbo) / std::abs(prev_elbo);
      if (rel < config.em_tol) {
        model.converged = true;
        model.theta = theta_from_gamma(e.gamma);
        break;
      }
    }
    prev_elbo = e.elbo;
    if (iter == config.max_em_iters) {
      model.theta = theta_from_gamma(e.gamma);
      break;
    }
    beta = floored_rows(e.ss);
  }
  model.beta = beta;
  return model;
}

TopicModel gibbs_fit(const DocTermMatrix& dtm, int K, double alpha, double eta,
                     int iters, int burn_in, std::uint64_t seed) {
  if (K < 1) throw Error("gibbs_fit: K must be >= 1");
  if (alpha <= 0.0 || eta <= 0.0) throw Error("gibbs_fit: alpha and eta must be positive");
  if (iters <= burn_in) throw Error("gibbs_fit: iters must exceed burn_in");
  const int V = dtm.n_terms;
  const int D = dtm.n_docs;

  // Flat token stream in (doc, term) order.
  std::vector<int> tok_doc, tok_word;
  for (const auto& e : dtm.entries) {
    for (int c = 0; c < e.count; ++c) {
      tok_doc.push_back(e.doc);
      tok_word.push_back(e.term);
    }
  }
  const std::size_t N = tok_doc.size();

  Rng rng(seed);
  std::vector<int> z(N);
  Eigen::MatrixXd n_dk = Eigen::MatrixXd::Zero(D, K);
  Eigen::MatrixXd n_kv = Eigen::MatrixXd::Zero(K, V);
  Eigen::VectorXd n_k = Eigen::VectorXd::Zero(K);
  for (std::size_t i = 0; i < N; ++i) {
    const int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(K)));
    z[i] = k;
    n_dk(tok_doc[i], k) += 1.0;
    n_kv(k, tok_word[i]) += 1.0;
    n_k(k) += 1.0;
  }

  Eigen::MatrixXd beta_acc = Eigen::MatrixXd::Zero(K, V);
  Eigen::MatrixXd theta_acc = Eigen::MatrixXd::Zero(D, K);
  std::vector<double> weights(static_cast<std::size_t>(K));
  int samples = 0;

  for (int sweep = 0; sweep < iters; ++sweep) {
    for (std::size_t i = 0; i < N; ++i) {
      const int d = tok_doc[i], v = tok_word[i], old = z[i];
      n_dk(d, old) -= 1.0;
      n_kv(old, v) -= 1.0;
      n_k(old) -= 1.0;
      for (int k = 0; k < K; ++k) {
        weights[static_cast<std::size_t>(k)] = (n_dk(d, k) + alpha) * (n_kv(k, v) + eta) / (n_k(k) + V * eta);
      }
      const int knew = rng.categorical(weights);
      z[i] = knew;
      n_dk(d, knew) += 1.0;
      n_kv(knew, v) += 1.0;
      n_k(knew) += 1.0;
    }
    if (sweep >= burn_in) {
      for (int k = 0; k < K; ++k) {
        beta_acc.row(k) += (n_kv.row(k).array() + eta).matrix() / (n_k(k) + V * eta);
      }
      for (int d = 0; d < D; ++d) {
        const double total = n_dk.row(d).sum() + K * alpha;
        theta_acc.row(d) += (n_dk.row(d).array() + alpha).matrix() / total;
      }
      ++samples;
    }
  }

  TopicModel model;
  model.K = K;
  model.alpha = alpha;
  model.seed = seed;
  model.init = "gibbs";
  model.converged = true;
  model.beta = beta_acc / static_cast<double>(samples);
  model.theta = theta_acc / static_cast<double>(samples);
  return model;
}

Eigen::MatrixXd infer_theta(const TopicModel& model, const std::vector<SparseDoc>& docs) {
  const int V = static_cast<int>(model.beta.cols());
  for (const auto& doc : docs) {
    for (const auto& [v, c] : doc) {
      if (v < 0 || v >= V) throw Error("infer_theta: unknown term index " + std::to_string(v));
      if (c < 1) throw Error("infer_theta: counts must be >= 1");
    }
  }
  const Eigen::MatrixXd log_beta = model.beta.array().log();
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(docs.size()), model.K);
  parallel_for(docs.size(), [&](std::size_t d) {
    DocResult r = doc_estep(docs[d], log_beta, model.alpha, nullptr);
    theta.row(static_cast<Eigen::Index>(d)) = (r.gamma / r.gamma.sum()).transpose();
  });
  return theta;
}

double heldout_loglik(const TopicModel& model, const std::vector<SparseDoc>& docs) {
  const int V = static_cast<int>(model.beta.cols());
  for (const auto& doc : docs) {
    for (const auto& [v, c] : doc) {
      if (v < 0 || v >= V) throw Error("heldout_loglik: unknown term index " + std::to_string(v));
      if (model.beta.col(v).maxCoeff() < 1e-12) {
        throw Error("heldout_loglik: term " + std::to_string(v) + " has zero probability in every topic");
      }
    }
  }
  const Eigen::MatrixXd theta = infer_theta(model, docs);
  double ll = 0.0;
  long tokens = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& [v, c] : docs[d]) {
      const double p = theta.row(static_cast<Eigen::Index>(d)).dot(model.beta.col(v).transpose());
      ll += c * std::log(p);
      tokens += c;
    }
  }
  if (tokens == 0) throw Error("heldout_loglik: no tokens in the given documents");
  return ll / static_cast<double>(tokens);
}

CovariateTable covariate_association(const TopicModel& model, const Corpus& corpus,
                                     const std::string& covariate) {
  if (static_cast<Eigen::Index>(corpus.documents.size()) != model.theta.rows()) {
    throw Error("covariate_association: corpus size does not match model theta rows");
  }
  auto level_of = [&](const Document& doc) -> std::string {
    if (covariate == "sector") return doc.sector;
    if (covariate == "company") return doc.company;
    auto it = doc.extra.find(covariate);
    return it == doc.extra.end() ? std::string("unknown") : it->second;
  };

  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    groups[level_of(corpus.documents[d])].push_back(static_cast<Eigen::Index>(d));
  }
  if (groups.size() < 2) {
    throw Error("covariate_association: covariate \"" + covariate + "\" has fewer than 2 observed levels");
  }

  CovariateTable table;
  table.covariate = covariate;
  table.grand_mean = model.theta.colwise().mean().transpose();
  for (const auto& [level, docs] : groups) {
    CovariateLevel row;
    row.level = level;
    row.n_docs = static_cast<int>(docs.size());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.K);
    for (Eigen::Index d : docs) sum += model.theta.row(d).transpose();
    row.mean_theta = sum / static_cast<double>(docs.size());
    row.difference = row.mean_theta - table.grand_mean;
    table.levels.push_back(std::move(row));
  }
  return table;
}

void save_model(const TopicModel& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(model.beta, dir + "/beta.csv");
  write_matrix_csv(model.theta, dir + "/theta.csv");
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["K"] = model.K;
  meta["alpha"] = model.alpha;
  meta["seed"] = model.seed;
  meta["init"] = model.init;
  meta["converged"] = model.converged;
  meta["elbo_trace"] = model.elbo_trace;
  std::ofstream out(dir + "/meta.json", std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + dir + "/meta.json");
  out << meta.dump(2) << "\n";
}

TopicModel load_model(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw Error("cannot open model metadata: " + dir + "/meta.json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad model metadata in " + dir + ": " + e.what());
  }
  if (meta.value("format_version", 0) != 1) throw Error("unsupported model format_version in " + dir);
  TopicModel model;
  model.K = meta.at("K").get<int>();
  model.alpha = meta.at("alpha").get<double>();
  model.seed = meta.at("seed").get<std::uint64_t>();
  model.init = meta.value("init", "unknown");
  model.converged = meta.value("converged", false);
  model.elbo_trace = meta.value("elbo_trace", std::vector<double>{});
  model.beta = read_matrix_csv(dir + "/beta.csv");
  model.theta = read_matrix_csv(dir + "/theta.csv");
  if (model.beta.rows() != model.K || model.theta.cols() != model.K) {
    throw Error("model matrices in " + dir + " do not match K=" + std::to_string(model.K));
  }
  return model;
}

}  // namespace lmi
