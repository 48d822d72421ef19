#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lmi {

/// One job posting. `text` is the raw body; `sector` is either a member of
/// the owning corpus' sector set or the sentinel "unknown".
struct Document {
  std::string id;
  std::string text;
  std::string company;
  std::string sector = "unknown";
  std::map<std::string, std::string> extra;
};

struct Corpus {
  std::vector<Document> documents;
  std::set<std::string> sector_set;

  std::size_t size() const { return documents.size(); }

  /// Checks id uniqueness and sector membership; throws on violation.
  void validate() const;
};

enum class CorpusFormat { kJsonl, kCsv };

CorpusFormat corpus_format_from_string(const std::string& name);

/// Loads a corpus preserving file order. Missing sector becomes "unknown".
/// Malformed records and duplicate ids raise errors naming line numbers.
Corpus load_corpus(const std::string& path, CorpusFormat format);

/// Writes a corpus; load_corpus of the result round-trips id/text/sector.
void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format);

struct SectorShare {
  std::string sector;
  std::size_t count = 0;
  double share = 0.0;
};

/// Per-sector counts and shares, sorted by count descending then name.
std::vector<SectorShare> sector_summary(const Corpus& corpus);

/// Parameters of the generative topic-model test corpus.
struct SyntheticSpec {
  int K_true = 5;
  int V = 200;
  int D = 1000;
  double doc_len_mean = 100.0;
  double alpha_true = 0.1;
  double anchor_fraction = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  Eigen::MatrixXd beta_true;   // K_true x V, rows sum to 1
  Eigen::MatrixXd theta_true;  // D x K_true, rows sum to 1
};

/// Draws a corpus from the standard topic-model generative process:
/// theta_d ~ Dirichlet(alpha), length ~ Poisson clamped >= 1, each token a
/// topic draw followed by a word draw. With anchor_fraction > 0,
/// floor(anchor_fraction * V / K_true) words per topic appear only in that
/// topic's row. Identical seeds give byte-identical corpora.
SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec);

/// Rendering of vocabulary index v as an alphabetic token (length >= 5),
/// used by the synthetic generator.
std::string synthetic_token(int v);

}  // namespace lmi
