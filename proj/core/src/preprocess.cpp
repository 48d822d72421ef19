#include "lmi/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "lmi/error.hpp"
#include "lmi/parallel.hpp"

namespace lmi {

void PreprocessConfig::validate() const {
  if (min_word_len < 1) throw Error("preprocess config: min_word_len must be >= 1");
  if (min_doc_freq < 1) throw Error("preprocess config: min_doc_freq must be >= 1");
  if (max_doc_fraction <= 0.0 || max_doc_fraction > 1.0) {
    throw Error("preprocess config: max_doc_fraction must be in (0, 1]");
  }
}

int Vocabulary::index_of(const std::string& term) const {
  auto it = std::lower_bound(terms.begin(), terms.end(), term);
  if (it == terms.end() || *it != term) return -1;
  return static_cast<int>(it - terms.begin());
}

long DocTermMatrix::total_tokens() const {
  long total = 0;
  for (long t : doc_totals) total += t;
  return total;
}

void DocTermMatrix::validate() const {
  std::vector<long> row_sums(static_cast<std::size_t>(n_docs), 0);
  int prev_doc = -1, prev_term = -1;
  for (const auto& e : entries) {
    if (e.doc < 0 || e.doc >= n_docs || e.term < 0 || e.term >= n_terms) {
      throw Error("dtm: entry index out of range");
    }
    if (e.count < 1) throw Error("dtm: entry count must be >= 1");
    if (e.doc < prev_doc || (e.doc == prev_doc && e.term <= prev_term)) {
      throw Error("dtm: entries must be sorted by (doc, term) without duplicates");
    }
    prev_doc = e.doc;
    prev_term = e.term;
    row_sums[static_cast<std::size_t>(e.doc)] += e.count;
  }
  if (doc_totals.size() != static_cast<std::size_t>(n_docs)) throw Error("dtm: doc_totals size mismatch");
  for (int d = 0; d < n_docs; ++d) {
    if (row_sums[static_cast<std::size_t>(d)] != doc_totals[static_cast<std::size_t>(d)]) {
      throw Error("dtm: doc_totals[" + std::to_string(d) + "] does not match entry sum");
    }
  }
}

std::set<std::string> load_stopword_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read stopword file: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.insert(line.substr(first, last - first + 1));
  }
  return words;
}

StopwordLists load_stopwords(const PreprocessConfig& config) {
  StopwordLists lists;
  if (config.stopwords_builtin) lists.builtin = builtin_stopwords();
  if (config.stopwords_custom_path) lists.custom = load_stopword_file(*config.stopwords_custom_path);
  return lists;
}

std::vector<std::string> normalize_text(const std::string& text, const PreprocessConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (static_cast<int>(current.size()) >= config.min_word_len) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (c >= 'a' && c <= 'z') {
      current += static_cast<char>(c);
    } else if (c >= 'A' && c <= 'Z') {
      current += static_cast<char>(c - 'A' + 'a');
    } else {
      flush();  // digits, punctuation, whitespace, non-ASCII all split
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const std::set<std::string>& builtin,
                                          const std::set<std::string>& custom) {
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (builtin.count(tok) || custom.count(tok)) continue;
    kept.push_back(tok);
  }
  return kept;
}

std::vector<std::vector<std::string>> tokenize_corpus(const Corpus& corpus, const PreprocessConfig& config) {
  config.validate();
  const StopwordLists lists = load_stopwords(config);
  std::vector<std::vector<std::string>> docs(corpus.documents.size());
  parallel_for(corpus.documents.size(), [&](std::size_t d) {
    docs[d] = remove_stopwords(normalize_text(corpus.documents[d].text, config), lists.builtin, lists.custom);
  });
  return docs;
}

namespace {

Vocabulary vocabulary_from_tokens(const std::vector<std::vector<std::string>>& docs, const PreprocessConfig& config) {
  std::map<std::string, std::pair<int, long>> stats;  // term -> (doc_freq, total)
  for (const auto& tokens : docs) {
    std::map<std::string, long> in_doc;
    for (const auto& tok : tokens) ++in_doc[tok];
    for (const auto& [term, count] : in_doc) {
      auto& s = stats[term];
      s.first += 1;
      s.second += count;
    }
  }
  const double df_cap = config.max_doc_fraction * static_cast<double>(docs.size());
  Vocabulary vocab;
  for (const auto& [term, s] : stats) {
    if (s.first >= config.min_doc_freq && static_cast<double>(s.first) <= df_cap) {
      vocab.terms.push_back(term);
      vocab.doc_freq.push_back(s.first);
      vocab.total_freq.push_back(s.second);
    }
  }
  if (vocab.terms.empty()) {
    throw Error("vocabulary is empty after pruning; relax min_doc_freq (" + std::to_string(config.min_doc_freq) +
                ") or max_doc_fraction (" + std::to_string(config.max_doc_fraction) + ")");
  }
  return vocab;
}

DocTermMatrix dtm_from_tokens(const std::vector<std::vector<std::string>>& docs, const Vocabulary& vocab) {
  DocTermMatrix dtm;
  dtm.n_docs = static_cast<int>(docs.size());
  dtm.n_terms = vocab.size();
  dtm.doc_totals.assign(docs.size(), 0);
  std::vector<std::vector<DtmEntry>> rows(docs.size());
  parallel_for(docs.size(), [&](std::size_t d) {
    std::map<int, int> counts;
    for (const auto& tok : docs[d]) {
      const int v = vocab.index_of(tok);
      if (v >= 0) ++counts[v];
    }
    auto& row = rows[d];
    row.reserve(counts.size());
    long total = 0;
    for (const auto& [term, count] : counts) {
      row.push_back({static_cast<int>(d), term, count});
      total += count;
    }
    dtm.doc_totals[d] = total;
  });
  for (std::size_t d = 0; d < rows.size(); ++d) {
    dtm.entries.insert(dtm.entries.end(), rows[d].begin(), rows[d].end());
    if (dtm.doc_totals[d] == 0) dtm.empty_docs.push_back(static_cast<int>(d));
  }
  return dtm;
}

}  // namespace

Vocabulary build_vocabulary(const Corpus& corpus, const PreprocessConfig& config) {
  if (corpus.documents.empty()) throw Error("build_vocabulary: corpus is empty");
  return vocabulary_from_tokens(tokenize_corpus(corpus, config), config);
}

DocTermMatrix build_dtm(const Corpus& corpus, const Vocabulary& vocab, const PreprocessConfig& config) {
  return dtm_from_tokens(tokenize_corpus(corpus, config), vocab);
}

std::pair<Vocabulary, DocTermMatrix> preprocess_corpus(const Corpus& corpus, const PreprocessConfig& config) {
  if (corpus.documents.empty()) throw Error("preprocess_corpus: corpus is empty");
  const auto docs = tokenize_corpus(corpus, config);
  Vocabulary vocab = vocabulary_from_tokens(docs, config);
  DocTermMatrix dtm = dtm_from_tokens(docs, vocab);
  return {std::move(vocab), std::move(dtm)};
}

void write_matrix_market(const DocTermMatrix& dtm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << dtm.n_docs << " " << dtm.n_terms << " " << dtm.entries.size() << "\n";
  for (const auto& e : dtm.entries) {
    out << (e.doc + 1) << " " << (e.term + 1) << " " << e.count << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

DocTermMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open DTM file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    throw Error("not a MatrixMarket file: " + path);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  DocTermMatrix dtm;
  std::size_t nnz = 0;
  {
    std::istringstream header(line);
    if (!(header >> dtm.n_docs >> dtm.n_terms >> nnz)) throw Error("bad MatrixMarket header in " + path);
  }
  dtm.entries.reserve(nnz);
  dtm.doc_totals.assign(static_cast<std::size_t>(dtm.n_docs), 0);
  for (std::size_t i = 0; i < nnz; ++i) {
    int d = 0, v = 0, c = 0;
    if (!(in >> d >> v >> c)) throw Error("truncated MatrixMarket body in " + path);
    dtm.entries.push_back({d - 1, v - 1, c});
    if (d < 1 || d > dtm.n_docs || v < 1 || v > dtm.n_terms || c < 1) {
      throw Error("MatrixMarket entry out of range in " + path);
    }
    dtm.doc_totals[static_cast<std::size_t>(d - 1)] += c;
  }
  std::sort(dtm.entries.begin(), dtm.entries.end(), [](const DtmEntry& a, const DtmEntry& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.term < b.term;
  });
  for (int d = 0; d < dtm.n_docs; ++d) {
    if (dtm.doc_totals[static_cast<std::size_t>(d)] == 0) dtm.empty_docs.push_back(d);
  }
  dtm.validate();
  return dtm;
}

void write_vocab_file(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const auto& term : vocab.terms) out << term << "\n";
  if (!out) throw Error("write failed: " + path);
}

Vocabulary read_vocab_file(const std::string& path, const DocTermMatrix& dtm) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) vocab.terms.push_back(line);
  }
  if (static_cast<int>(vocab.terms.size()) != dtm.n_terms) {
    throw Error("vocabulary file has " + std::to_string(vocab.terms.size()) + " terms but DTM has " + std::to_string(dtm.n_terms) + " columns");
  }
  vocab.doc_freq.assign(vocab.terms.size(), 0);
  vocab.total_freq.assign(vocab.terms.size(), 0);
  for (const auto& e : dtm.entries) {
    vocab.doc_freq[static_cast<std::size_t>(e.term)] += 1;
    vocab.total_freq[static_cast<std::size_t>(e.term)] += e.count;
  }
  return vocab;
}

}  // namespace lmi
