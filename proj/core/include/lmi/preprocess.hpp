#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lmi/corpus.hpp"

namespace lmi {

struct PreprocessConfig {
  int min_word_len = 3;
  bool stopwords_builtin = true;
  std::optional<std::string> stopwords_custom_path;
  int min_doc_freq = 5;
  double max_doc_fraction = 0.5;

  void validate() const;
};

/// Pruned term list. Term index is the DTM column id; terms are sorted
/// ascending. doc_freq[v] is D(v), the number of documents containing v.
struct Vocabulary {
  std::vector<std::string> terms;
  std::vector<int> doc_freq;
  std::vector<long> total_freq;

  int size() const { return static_cast<int>(terms.size()); }
  /// Index of a term, or -1 when absent.
  int index_of(const std::string& term) const;
};

struct DtmEntry {
  int doc = 0;
  int term = 0;
  int count = 0;
};

/// Sparse doc x term counts. Entries are sorted by (doc, term) with no
/// duplicates; documents with no retained tokens keep their row and are
/// listed in empty_docs.
struct DocTermMatrix {
  int n_docs = 0;
  int n_terms = 0;
  std::vector<DtmEntry> entries;
  std::vector<long> doc_totals;
  std::vector<int> empty_docs;

  long total_tokens() const;
  void validate() const;
};

/// Version tag of the bundled English stopword list.
extern const int kBuiltinStopwordsVersion;

/// Bundled English stopword list (~180 words, lowercase).
const std::set<std::string>& builtin_stopwords();

/// Newline-delimited lowercase tokens; '#' starts a comment. Throws if the
/// file cannot be read.
std::set<std::string> load_stopword_file(const std::string& path);

/// Resolved stopword lists for a config (reads the custom file once).
struct StopwordLists {
  std::set<std::string> builtin;
  std::set<std::string> custom;
};
StopwordLists load_stopwords(const PreprocessConfig& config);

/// Lowercases, splits on every non-alphabetic byte, and drops tokens
/// shorter than min_word_len. Empty output is valid.
std::vector<std::string> normalize_text(const std::string& text, const PreprocessConfig& config);

/// Order-preserving filter removing tokens in builtin or custom.
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const std::set<std::string>& builtin,
                                          const std::set<std::string>& custom);

/// Per-document normalized and stopword-filtered tokens, in corpus order.
/// Parallel across documents; output independent of thread count.
std::vector<std::vector<std::string>> tokenize_corpus(const Corpus& corpus, const PreprocessConfig& config);

/// Terms with min_doc_freq <= D(v) <= max_doc_fraction * D, sorted.
/// Throws when pruning leaves nothing, advising threshold relaxation.
Vocabulary build_vocabulary(const Corpus& corpus, const PreprocessConfig& config);

/// Counts of retained vocabulary terms per document.
DocTermMatrix build_dtm(const Corpus& corpus, const Vocabulary& vocab, const PreprocessConfig& config);

/// Single-tokenization path producing both vocabulary and DTM.
std::pair<Vocabulary, DocTermMatrix> preprocess_corpus(const Corpus& corpus, const PreprocessConfig& config);

/// MatrixMarket coordinate export (1-based indices) and reload.
void write_matrix_market(const DocTermMatrix& dtm, const std::string& path);
DocTermMatrix read_matrix_market(const std::string& path);

/// Sidecar vocabulary file: one term per line, line number = column index.
void write_vocab_file(const Vocabulary& vocab, const std::string& path);
/// Reloads terms and reconstructs frequencies from the DTM.
Vocabulary read_vocab_file(const std::string& path, const DocTermMatrix& dtm);

}  // namespace lmi
