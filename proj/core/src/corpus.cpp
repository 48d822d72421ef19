#include "lmi/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lmi/error.hpp"
#include "lmi/rng.hpp"

namespace lmi {

namespace {

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// RFC 4180 record reader; handles quoted fields spanning lines. Returns
// false on EOF. line_no is advanced past consumed lines and start_line is
// set to the line the record began on.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, int& line_no, int& start_line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  start_line = line_no + 1;
  while ((c = in.get()) != EOF) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += static_cast<char>(c);
      }
    } else {
      if (c == '"') {
        in_quotes = true;
      } else if (c == ',') {
        fields.push_back(field);
        field.clear();
      } else if (c == '\r') {
        // swallow; newline handled next
      } else if (c == '\n') {
        ++line_no;
        fields.push_back(field);
        return true;
      } else {
        field += static_cast<char>(c);
      }
    }
  }
  if (!any) return false;
  if (in_quotes) throw Error("csv: unterminated quoted field starting at line " + std::to_string(start_line));
  ++line_no;
  fields.push_back(field);
  return true;
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);
  Corpus corpus;
  std::unordered_map<std::string, int> first_line;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("jsonl: malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("text") ||
        !rec["id"].is_string() || !rec["text"].is_string()) {
      throw Error("jsonl: record at line " + std::to_string(line_no) + " must be an object with string id and text");
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.text = rec["text"].get<std::string>();
    if (rec.contains("company")) {
      if (!rec["company"].is_string()) throw Error("jsonl: company must be a string at line " + std::to_string(line_no));
      doc.company = rec["company"].get<std::string>();
    }
    if (rec.contains("sector") && !rec["sector"].is_null()) {
      if (!rec["sector"].is_string()) throw Error("jsonl: sector must be a string at line " + std::to_string(line_no));
      doc.sector = rec["sector"].get<std::string>();
      if (doc.sector.empty()) doc.sector = "unknown";
    }
    if (rec.contains("extra") && !rec["extra"].is_null()) {
      if (!rec["extra"].is_object()) throw Error("jsonl: extra must be an object at line " + std::to_string(line_no));
      for (auto it = rec["extra"].begin(); it != rec["extra"].end(); ++it) {
        if (!it.value().is_string()) {
          throw Error("jsonl: extra values must be strings at line " + std::to_string(line_no));
        }
        doc.extra[it.key()] = it.value().get<std::string>();
      }
    }
    auto dup = first_line.find(doc.id);
    if (dup != first_line.end()) {
      throw Error("duplicate document id \"" + doc.id + "\" at lines " + std::to_string(dup->second) + " and " + std::to_string(line_no));
    }
    first_line.emplace(doc.id, line_no);
    if (doc.sector != "unknown") corpus.sector_set.insert(doc.sector);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path);
  Corpus corpus;
  std::unordered_map<std::string, int> first_line;
  std::vector<std::string> fields;
  int line_no = 0, start_line = 0;
  if (!read_csv_record(in, fields, line_no, start_line)) throw Error("csv: empty file: " + path);
  if (fields.size() < 2 || fields[0] != "id" || fields[1] != "text") {
    throw Error("csv: expected header starting with id,text in " + path);
  }
  const std::vector<std::string> expected = {"id", "text", "company", "sector"};
  for (std::size_t i = 0; i < fields.size() && i < expected.size(); ++i) {
    if (fields[i] != expected[i]) throw Error("csv: header column " + std::to_string(i + 1) + " must be " + expected[i]);
  }
  while (read_csv_record(in, fields, line_no, start_line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() < 2) throw Error("csv: malformed record at line " + std::to_string(start_line) + ": need at least id,text");
    Document doc;
    doc.id = fields[0];
    doc.text = fields[1];
    if (fields.size() > 2) doc.company = fields[2];
    if (fields.size() > 3 && !fields[3].empty()) doc.sector = fields[3];
    if (doc.id.empty()) throw Error("csv: empty id at line " + std::to_string(start_line));
    auto dup = first_line.find(doc.id);
    if (dup != first_line.end()) {
      throw Error("duplicate document id \"" + doc.id + "\" at lines " + std::to_string(dup->second) + " and " + std::to_string(start_line));
    }
    first_line.emplace(doc.id, start_line);
    if (doc.sector != "unknown") corpus.sector_set.insert(doc.sector);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace

void Corpus::validate() const {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const auto& doc = documents[i];
    auto dup = seen.find(doc.id);
    if (dup != seen.end()) {
      throw Error("duplicate document id \"" + doc.id + "\" at positions " + std::to_string(dup->second) + " and " + std::to_string(i));
    }
    seen.emplace(doc.id, i);
    if (doc.sector != "unknown" && sector_set.find(doc.sector) == sector_set.end()) {
      throw Error("document \"" + doc.id + "\" has sector \"" + doc.sector + "\" outside the declared sector set");
    }
  }
}

CorpusFormat corpus_format_from_string(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "csv") return CorpusFormat::kCsv;
  throw Error("unknown corpus format \"" + name + "\" (expected jsonl or csv)");
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
  Corpus corpus = format == CorpusFormat::kJsonl ? load_jsonl(path) : load_csv(path);
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  if (format == CorpusFormat::kJsonl) {
    for (const auto& doc : corpus.documents) {
      nlohmann::json rec;
      rec["id"] = doc.id;
      rec["text"] = doc.text;
      rec["company"] = doc.company;
      rec["sector"] = doc.sector;
      rec["extra"] = nlohmann::json::object();
      for (const auto& [k, v] : doc.extra) rec["extra"][k] = v;
      out << rec.dump() << "\n";
    }
  } else {
    out << "id,text,company,sector\n";
    for (const auto& doc : corpus.documents) {
      out << quote_csv(doc.id) << ',' << quote_csv(doc.text) << ',' << quote_csv(doc.company) << ',' << quote_csv(doc.sector) << "\n";
    }
  }
  if (!out) throw Error("write failed: " + path);
}

std::vector<SectorShare> sector_summary(const Corpus& corpus) {
  if (corpus.documents.empty()) throw Error("sector_summary: corpus is empty");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus.documents) ++counts[doc.sector];
  std::vector<SectorShare> rows;
  rows.reserve(counts.size());
  const double total = static_cast<double>(corpus.documents.size());
  for (const auto& [sector, count] : counts) {
    rows.push_back({sector, count, static_cast<double>(count) / total});
  }
  std::sort(rows.begin(), rows.end(), [](const SectorShare& a, const SectorShare& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.sector < b.sector;
  });
  return rows;
}

void SyntheticSpec::validate() const {
  if (K_true < 1) throw Error("synthetic spec: K_true must be >= 1");
  if (V < K_true) throw Error("synthetic spec: V must be >= K_true");
  if (D < 1) throw Error("synthetic spec: D must be >= 1");
  if (doc_len_mean <= 0.0) throw Error("synthetic spec: doc_len_mean must be positive");
  if (alpha_true <= 0.0) throw Error("synthetic spec: alpha_true must be positive");
  if (anchor_fraction < 0.0 || anchor_fraction >= 1.0) throw Error("synthetic spec: anchor_fraction must be in [0, 1)");
}

std::string synthetic_token(int v) {
  int width = 3;
  long cap = 26L * 26L * 26L;
  while (v >= cap) {
    ++width;
    cap *= 26;
  }
  std::string suffix(static_cast<std::size_t>(width), 'a');
  int rem = v;
  for (int i = width - 1; i >= 0; --i) {
    suffix[static_cast<std::size_t>(i)] = static_cast<char>('a' + rem % 26);
    rem /= 26;
  }
  return "zq" + suffix;
}

SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const int K = spec.K_true, V = spec.V, D = spec.D;
  Rng rng(spec.seed);

  // Topic rows: gamma weights normalized, with per-topic exclusive anchor
  // words carrying boosted mass so the rows are anchor-separable.
  const int anchors_per_topic = static_cast<int>(spec.anchor_fraction * V / K);
  const double kWeightShape = 0.7;
  const double kAnchorBoost = 4.0;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(K, V);
  for (int k = 0; k < K; ++k) {
    double total = 0.0;
    for (int v = 0; v < V; ++v) {
      const int owner = anchors_per_topic > 0 && v < K * anchors_per_topic ? v / anchors_per_topic : -1;
      if (owner >= 0 && owner != k) continue;  // another topic's anchor
      double w = rng.gamma(kWeightShape);
      if (owner == k) w = (w + 0.5) * kAnchorBoost;
      beta(k, v) = w;
      total += w;
    }
    beta.row(k) /= total;
  }

  std::vector<std::vector<double>> beta_cdf(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(V)));
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int v = 0; v < V; ++v) {
      acc += beta(k, v);
      beta_cdf[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] = acc;
    }
  }
  auto draw_word = [&](int k) {
    const auto& cdf = beta_cdf[static_cast<std::size_t>(k)];
    const double u = rng.uniform01() * cdf.back();
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  SyntheticCorpus out;
  out.beta_true = beta;
  out.theta_true = Eigen::MatrixXd::Zero(D, K);
  out.corpus.documents.reserve(static_cast<std::size_t>(D));
  int id_width = 1;
  for (long cap = 10; cap < D; cap *= 10) ++id_width;
  for (int d = 0; d < D; ++d) {
    const std::vector<double> theta = rng.dirichlet(spec.alpha_true, K);
    for (int k = 0; k < K; ++k) out.theta_true(d, k) = theta[static_cast<std::size_t>(k)];
    long len = rng.poisson(spec.doc_len_mean);
    if (len < 1) len = 1;
    std::string text;
    for (long t = 0; t < len; ++t) {
      const int z = rng.categorical(theta);
      const int w = draw_word(z);
      if (!text.empty()) text += ' ';
      text += synthetic_token(w);
    }
    Document doc;
    std::string num = std::to_string(d);
    doc.id = "d" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
    doc.text = std::move(text);
    doc.company = "synthco";
    out.corpus.documents.push_back(std::move(doc));
  }
  return out;
}

}  // namespace lmi
