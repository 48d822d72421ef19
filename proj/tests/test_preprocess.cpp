#include <doctest.h>

#include <numeric>
#include <string>
#include <vector>

#include "lmi/corpus.hpp"
#include "lmi/error.hpp"
#include "lmi/preprocess.hpp"
#include "test_util.hpp"

using namespace lmi;
using lmi_test::TempDir;
using lmi_test::write_file;

namespace {

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus corpus;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    corpus.documents.push_back({"d" + std::to_string(i), texts[i], "", "unknown", {}});
  }
  return corpus;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_text applies the cleaning rules") {
  PreprocessConfig config;
  const auto tokens = normalize_text("Senior C++ Engineer (Remote) 2022!", config);
  CHECK(tokens == std::vector<std::string>{"senior", "engineer", "remote"});
}

TEST_CASE("normalize_text empty input and idempotence") {
  PreprocessConfig config;
  CHECK(normalize_text("", config).empty());

  const auto once = normalize_text("DATA data", config);
  CHECK(once == std::vector<std::string>{"data", "data"});
  CHECK(normalize_text(join(once), config) == once);

  // idempotence on a messy input
  const auto messy = normalize_text("state-of-the-art NLP; 10x eng-ineer", config);
  CHECK(normalize_text(join(messy), config) == messy);
}

TEST_CASE("normalize_text splits on digits and non-ascii bytes") {
  PreprocessConfig config;
  CHECK(normalize_text("abc123def", config) == std::vector<std::string>{"abc", "def"});
  CHECK(normalize_text("caf\xc3\xa9 latte", config) == std::vector<std::string>{"caf", "latte"});
  config.min_word_len = 1;
  CHECK(normalize_text("a-b c", config) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("remove_stopwords filters and preserves order") {
  const std::set<std::string> builtin = {"the", "and"};
  const std::set<std::string> none;
  const std::vector<std::string> tokens = {"the", "software", "and", "team"};
  CHECK(remove_stopwords(tokens, builtin, none) == std::vector<std::string>{"software", "team"});
  CHECK(remove_stopwords(tokens, none, none) == tokens);
  CHECK(remove_stopwords({"the", "and"}, builtin, none).empty());
}

TEST_CASE("builtin stopword list is the bundled english list") {
  const auto& list = builtin_stopwords();
  CHECK(list.size() >= 170);
  CHECK(list.size() <= 190);
  CHECK(list.count("the") == 1);
  CHECK(list.count("software") == 0);
  CHECK(kBuiltinStopwordsVersion == 1);
}

TEST_CASE("custom stopword file supports comments; unreadable file errors at load") {
  TempDir tmp("prep");
  write_file(tmp.file("stop.txt"), "# custom list\nvacancy\n  benefits  # inline\n\n");
  const auto words = load_stopword_file(tmp.file("stop.txt"));
  CHECK(words == std::set<std::string>{"vacancy", "benefits"});

  PreprocessConfig config;
  config.stopwords_custom_path = tmp.file("missing.txt");
  CHECK_THROWS_AS(load_stopwords(config), Error);
}

TEST_CASE("build_vocabulary prunes by document frequency") {
  // "engineer" in 2 docs, "zyx" in 1; min_doc_freq=2 keeps only qualifying terms
  auto corpus = corpus_of({"engineer engineer data", "engineer data", "zyx data"});
  PreprocessConfig config;
  config.min_doc_freq = 2;
  config.max_doc_fraction = 1.0;
  const Vocabulary vocab = build_vocabulary(corpus, config);
  CHECK(vocab.index_of("engineer") >= 0);
  CHECK(vocab.index_of("data") >= 0);
  CHECK(vocab.index_of("zyx") == -1);
  CHECK(vocab.doc_freq[static_cast<std::size_t>(vocab.index_of("engineer"))] == 2);
  CHECK(vocab.doc_freq[static_cast<std::size_t>(vocab.index_of("data"))] == 3);
}

TEST_CASE("build_vocabulary no-pruning identity keeps every surviving token type") {
  auto corpus = corpus_of({"alpha beta", "gamma delta", "alpha gamma"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 1.0;
  const Vocabulary vocab = build_vocabulary(corpus, config);
  CHECK(vocab.size() == 4);
  // sorted ascending
  CHECK(std::is_sorted(vocab.terms.begin(), vocab.terms.end()));
}

TEST_CASE("build_vocabulary total pruning errors with advice") {
  auto corpus = corpus_of({"common words", "common words", "common words", "common words"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 0.5;  // every term is in every doc
  CHECK_THROWS_WITH_AS(build_vocabulary(corpus, config), doctest::Contains("relax"), Error);
}

TEST_CASE("build_dtm hand count, empty rows flagged, conservation") {
  auto corpus = corpus_of({"data data team", "the and of", "team data"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 1.0;
  const auto [vocab, dtm] = preprocess_corpus(corpus, config);
  REQUIRE(vocab.size() == 2);  // "data", "team" (stopwords removed)
  const int data_col = vocab.index_of("data");
  const int team_col = vocab.index_of("team");

  REQUIRE(dtm.n_docs == 3);
  CHECK(dtm.doc_totals[0] == 3);
  CHECK(dtm.doc_totals[1] == 0);
  CHECK(dtm.doc_totals[2] == 2);
  CHECK(dtm.empty_docs == std::vector<int>{1});

  int found = 0;
  for (const auto& e : dtm.entries) {
    if (e.doc == 0 && e.term == data_col) {
      CHECK(e.count == 2);
      ++found;
    }
    if (e.doc == 0 && e.term == team_col) {
      CHECK(e.count == 1);
      ++found;
    }
  }
  CHECK(found == 2);

  // conservation: doc totals == entry counts == vocabulary totals
  long entry_total = 0;
  for (const auto& e : dtm.entries) entry_total += e.count;
  CHECK(dtm.total_tokens() == entry_total);
  long vocab_total = std::accumulate(vocab.total_freq.begin(), vocab.total_freq.end(), 0L);
  CHECK(vocab_total == entry_total);
  dtm.validate();
}

TEST_CASE("dtm doc_freq matches vocabulary doc_freq") {
  auto corpus = corpus_of({"red green", "red blue", "red green blue", "green green"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 1.0;
  const auto [vocab, dtm] = preprocess_corpus(corpus, config);
  std::vector<int> df(static_cast<std::size_t>(vocab.size()), 0);
  for (const auto& e : dtm.entries) df[static_cast<std::size_t>(e.term)] += 1;
  CHECK(df == vocab.doc_freq);
}

TEST_CASE("pipeline determinism: same corpus and config give identical DTMs") {
  auto corpus = corpus_of({"alpha beta gamma", "beta gamma delta", "gamma delta alpha"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 1.0;
  const auto [v1, d1] = preprocess_corpus(corpus, config);
  const auto [v2, d2] = preprocess_corpus(corpus, config);
  CHECK(v1.terms == v2.terms);
  REQUIRE(d1.entries.size() == d2.entries.size());
  for (std::size_t i = 0; i < d1.entries.size(); ++i) {
    CHECK(d1.entries[i].doc == d2.entries[i].doc);
    CHECK(d1.entries[i].term == d2.entries[i].term);
    CHECK(d1.entries[i].count == d2.entries[i].count);
  }
}

TEST_CASE("matrix market round trip preserves the DTM") {
  auto corpus = corpus_of({"aaa bbb aaa", "bbb ccc", "", "ccc ccc ccc"});
  PreprocessConfig config;
  config.min_doc_freq = 1;
  config.max_doc_fraction = 1.0;
  const auto [vocab, dtm] = preprocess_corpus(corpus, config);

  TempDir tmp("prep");
  write_matrix_market(dtm, tmp.file("m.mtx"));
  const DocTermMatrix back = read_matrix_market(tmp.file("m.mtx"));
  CHECK(back.n_docs == dtm.n_docs);
  CHECK(back.n_terms == dtm.n_terms);
  CHECK(back.doc_totals == dtm.doc_totals);
  CHECK(back.empty_docs == dtm.empty_docs);
  REQUIRE(back.entries.size() == dtm.entries.size());
  for (std::size_t i = 0; i < dtm.entries.size(); ++i) {
    CHECK(back.entries[i].doc == dtm.entries[i].doc);
    CHECK(back.entries[i].term == dtm.entries[i].term);
    CHECK(back.entries[i].count == dtm.entries[i].count);
  }

  write_vocab_file(vocab, tmp.file("v.txt"));
  const Vocabulary vback = read_vocab_file(tmp.file("v.txt"), back);
  CHECK(vback.terms == vocab.terms);
  CHECK(vback.doc_freq == vocab.doc_freq);
  CHECK(vback.total_freq == vocab.total_freq);
}

TEST_CASE("preprocess config validation") {
  PreprocessConfig config;
  config.min_word_len = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.min_word_len = 3;
  config.max_doc_fraction = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.max_doc_fraction = 1.5;
  CHECK_THROWS_AS(config.validate(), Error);
}
