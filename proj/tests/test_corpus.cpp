#include <doctest.h>

#include <set>
#include <sstream>
#include <string>

#include "lmi/corpus.hpp"
#include "lmi/error.hpp"
#include "test_util.hpp"

using namespace lmi;
using lmi_test::TempDir;
using lmi_test::write_file;

TEST_CASE("load_corpus jsonl preserves file order") {
  TempDir tmp("corpus");
  write_file(tmp.file("c.jsonl"),
             R"({"id":"a","text":"first","company":"x","sector":"tech"})"
             "\n"
             R"({"id":"b","text":"second"})"
             "\n"
             R"({"id":"c","text":"third","extra":{"city":"rome"}})"
             "\n");
  const Corpus corpus = load_corpus(tmp.file("c.jsonl"), CorpusFormat::kJsonl);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.documents[0].id == "a");
  CHECK(corpus.documents[1].id == "b");
  CHECK(corpus.documents[2].id == "c");
  CHECK(corpus.documents[0].sector == "tech");
  CHECK(corpus.documents[1].sector == "unknown");  // missing sector
  CHECK(corpus.documents[2].extra.at("city") == "rome");
  CHECK(corpus.sector_set == std::set<std::string>{"tech"});
}

TEST_CASE("load_corpus rejects duplicate ids naming both lines") {
  TempDir tmp("corpus");
  write_file(tmp.file("dup.jsonl"),
             R"({"id":"j1","text":"one"})"
             "\n"
             R"({"id":"j2","text":"two"})"
             "\n"
             R"({"id":"j1","text":"three"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("dup.jsonl"), CorpusFormat::kJsonl),
                       doctest::Contains("lines 1 and 3"), Error);
}

TEST_CASE("load_corpus names the line of a malformed record") {
  TempDir tmp("corpus");
  write_file(tmp.file("bad.jsonl"),
             R"({"id":"a","text":"fine"})"
             "\n"
             "{not json}\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("bad.jsonl"), CorpusFormat::kJsonl),
                       doctest::Contains("line 2"), Error);
}

TEST_CASE("load_corpus handles a paper-scale corpus") {
  TempDir tmp("corpus");
  std::ostringstream big;
  for (int i = 0; i < 19961; ++i) {
    big << R"({"id":"p)" << i << R"(","text":"software engineer role)" << i << R"("})"
        << "\n";
  }
  write_file(tmp.file("big.jsonl"), big.str());
  const Corpus corpus = load_corpus(tmp.file("big.jsonl"), CorpusFormat::kJsonl);
  CHECK(corpus.size() == 19961);
}

TEST_CASE("csv load honors RFC 4180 quoting and missing sectors") {
  TempDir tmp("corpus");
  write_file(tmp.file("c.csv"),
             "id,text,company,sector\n"
             "a,\"senior, staff \"\"engineer\"\"\",acme,tech\n"
             "b,plain text,beta,\n");
  const Corpus corpus = load_corpus(tmp.file("c.csv"), CorpusFormat::kCsv);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.documents[0].text == "senior, staff \"engineer\"");
  CHECK(corpus.documents[1].sector == "unknown");
}

TEST_CASE("csv duplicate id error names record lines") {
  TempDir tmp("corpus");
  write_file(tmp.file("c.csv"),
             "id,text,company,sector\n"
             "j1,one,,\n"
             "j1,two,,\n");
  CHECK_THROWS_WITH_AS(load_corpus(tmp.file("c.csv"), CorpusFormat::kCsv),
                       doctest::Contains("lines 2 and 3"), Error);
}

TEST_CASE("save then load round-trips id, text, sector exactly") {
  Corpus corpus;
  corpus.sector_set = {"tech", "health care"};
  corpus.documents.push_back({"x1", "line one\nline two, with comma", "a co", "tech", {{"k", "v"}}});
  corpus.documents.push_back({"x2", "", "b co", "health care", {}});
  corpus.documents.push_back({"x3", "plain", "", "unknown", {}});

  TempDir tmp("corpus");
  for (auto format : {CorpusFormat::kJsonl, CorpusFormat::kCsv}) {
    const std::string path = tmp.file(format == CorpusFormat::kJsonl ? "r.jsonl" : "r.csv");
    save_corpus(corpus, path, format);
    const Corpus back = load_corpus(path, format);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
      CHECK(back.documents[i].id == corpus.documents[i].id);
      CHECK(back.documents[i].text == corpus.documents[i].text);
      CHECK(back.documents[i].sector == corpus.documents[i].sector);
    }
  }
}

TEST_CASE("sector_summary hand count") {
  Corpus corpus;
  corpus.sector_set = {"tech", "health"};
  corpus.documents.push_back({"1", "t", "", "tech", {}});
  corpus.documents.push_back({"2", "t", "", "tech", {}});
  corpus.documents.push_back({"3", "t", "", "health", {}});
  corpus.documents.push_back({"4", "t", "", "unknown", {}});
  const auto rows = sector_summary(corpus);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].sector == "tech");
  CHECK(rows[0].count == 2);
  CHECK(rows[0].share == doctest::Approx(0.5));
  // health and unknown tie at 1; names ascending
  CHECK(rows[1].sector == "health");
  CHECK(rows[1].share == doctest::Approx(0.25));
  CHECK(rows[2].sector == "unknown");
  double total = 0.0;
  for (const auto& r : rows) total += r.share;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sector_summary single sector and empty corpus") {
  Corpus corpus;
  corpus.sector_set = {"tech"};
  corpus.documents.push_back({"1", "t", "", "tech", {}});
  const auto rows = sector_summary(corpus);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].share == doctest::Approx(1.0));

  Corpus empty;
  CHECK_THROWS_AS(sector_summary(empty), Error);
}

TEST_CASE("synthesize_corpus single topic forces degenerate theta") {
  SyntheticSpec spec;
  spec.K_true = 1;
  spec.V = 10;
  spec.D = 20;
  spec.doc_len_mean = 8.0;
  spec.seed = 3;
  const auto synth = synthesize_corpus(spec);
  for (int d = 0; d < spec.D; ++d) {
    CHECK(synth.theta_true(d, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("synthesize_corpus is byte-identical across runs with one seed") {
  SyntheticSpec spec;
  spec.K_true = 3;
  spec.V = 50;
  spec.D = 30;
  spec.doc_len_mean = 20.0;
  spec.anchor_fraction = 0.1;
  spec.seed = 77;
  const auto a = synthesize_corpus(spec);
  const auto b = synthesize_corpus(spec);
  REQUIRE(a.corpus.size() == b.corpus.size());
  for (std::size_t i = 0; i < a.corpus.documents.size(); ++i) {
    CHECK(a.corpus.documents[i].text == b.corpus.documents[i].text);
  }
  CHECK((a.beta_true - b.beta_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.theta_true - b.theta_true).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synthesize_corpus anchor words are topic-exclusive") {
  SyntheticSpec spec;
  spec.K_true = 2;
  spec.V = 100;
  spec.D = 10;
  spec.doc_len_mean = 15.0;
  spec.anchor_fraction = 0.1;
  spec.seed = 5;
  const auto synth = synthesize_corpus(spec);
  // floor(0.1 * 100 / 2) = 5 words per topic with mass in only that row
  int exclusive[2] = {0, 0};
  for (int v = 0; v < spec.V; ++v) {
    for (int k = 0; k < 2; ++k) {
      if (synth.beta_true(k, v) > 0.0 && synth.beta_true(1 - k, v) == 0.0) ++exclusive[k];
    }
  }
  CHECK(exclusive[0] >= 5);
  CHECK(exclusive[1] >= 5);
  // the designated anchor block is exactly exclusive
  for (int k = 0; k < 2; ++k) {
    for (int v = k * 5; v < (k + 1) * 5; ++v) {
      CHECK(synth.beta_true(k, v) > 0.0);
      CHECK(synth.beta_true(1 - k, v) == 0.0);
    }
  }
}

TEST_CASE("synthesize_corpus rows are stochastic and lengths positive") {
  SyntheticSpec spec;
  spec.K_true = 4;
  spec.V = 60;
  spec.D = 50;
  spec.doc_len_mean = 1.0;  // stress the length clamp
  spec.alpha_true = 0.2;
  spec.seed = 13;
  const auto synth = synthesize_corpus(spec);
  for (int k = 0; k < spec.K_true; ++k) {
    CHECK(synth.beta_true.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(synth.beta_true.row(k).minCoeff() >= 0.0);
  }
  for (int d = 0; d < spec.D; ++d) {
    CHECK(synth.theta_true.row(d).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!synth.corpus.documents[static_cast<std::size_t>(d)].text.empty());
  }
}

TEST_CASE("synthesize_corpus validates its spec") {
  SyntheticSpec spec;
  spec.K_true = 0;
  CHECK_THROWS_AS(synthesize_corpus(spec), Error);
  spec.K_true = 5;
  spec.V = 3;
  CHECK_THROWS_AS(synthesize_corpus(spec), Error);
  spec.V = 10;
  spec.anchor_fraction = 1.0;
  CHECK_THROWS_AS(synthesize_corpus(spec), Error);
}

TEST_CASE("synthetic_token is alphabetic and long enough") {
  for (int v : {0, 25, 26, 17575, 17576}) {
    const std::string tok = synthetic_token(v);
    CHECK(tok.size() >= 5);
    for (char c : tok) {
      CHECK(c >= 'a');
      CHECK(c <= 'z');
    }
  }
  CHECK(synthetic_token(0) != synthetic_token(1));
}
