#include "lmi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lmi/error.hpp"
#include "lmi/metrics.hpp"

namespace lmi {

namespace {

// Paul Tol's muted + light qualitative schemes, colorblind safe.
const char* const kPalette[] = {
    "#332288", "#88ccee", "#44aa99", "#117733", "#999933", "#ddcc77",
    "#cc6677", "#882255", "#aa4499", "#77aadd", "#ee8866", "#eedd88",
    "#ffaabb", "#99ddff", "#44bb99", "#bbcc33"};
constexpr int kPaletteSize = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));

std::vector<int> top_indices(const Eigen::VectorXd& values, int M) {
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values(a) > values(b); });
  order.resize(static_cast<std::size_t>(M));
  return order;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt3(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

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

}  // namespace

WordRanking word_ranking_from_string(const std::string& name) {
  if (name == "prob") return WordRanking::kProb;
  if (name == "frex") return WordRanking::kFrex;
  throw Error("unknown word ranking \"" + name + "\" (expected prob or frex)");
}

std::vector<std::vector<std::pair<std::string, double>>> top_words(
    const TopicModel& model, const Vocabulary& vocab, int M, WordRanking ranking, double frex_omega) {
  if (M > vocab.size()) throw Error("top_words: M exceeds vocabulary size");
  if (vocab.size() != static_cast<int>(model.beta.cols())) throw Error("top_words: vocabulary does not match model");
  std::vector<std::vector<std::pair<std::string, double>>> out;
  for (int k = 0; k < model.K; ++k) {
    const Eigen::VectorXd scores = ranking == WordRanking::kProb
                                       ? Eigen::VectorXd(model.beta.row(k).transpose())
                                       : frex_scores(model.beta, k, frex_omega);
    std::vector<std::pair<std::string, double>> words;
    for (int v : top_indices(scores, M)) {
      words.emplace_back(vocab.terms[static_cast<std::size_t>(v)], scores(v));
    }
    out.push_back(std::move(words));
  }
  return out;
}

std::vector<TopicReport> prevalence_table(const TopicModel& model, const Vocabulary& vocab,
                                          int top_words_n, double frex_omega) {
  if (model.theta.rows() == 0) throw Error("prevalence_table: model has no documents");
  const int M = std::min(top_words_n, vocab.size());
  const Eigen::VectorXd mean = model.theta.colwise().mean().transpose();
  const auto prob_lists = top_words(model, vocab, M, WordRanking::kProb);
  std::vector<std::vector<std::pair<std::string, double>>> frex_lists;
  if (model.K >= 2) frex_lists = top_words(model, vocab, M, WordRanking::kFrex, frex_omega);

  std::vector<TopicReport> reports;
  for (int k = 0; k < model.K; ++k) {
    TopicReport r;
    r.topic_id = k;
    r.prevalence_pct = 100.0 * mean(k);
    r.top_words_prob = prob_lists[static_cast<std::size_t>(k)];
    if (model.K >= 2) r.top_words_frex = frex_lists[static_cast<std::size_t>(k)];
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<std::pair<std::string, double>> wordcloud_export(const TopicModel& model,
                                                             const Vocabulary& vocab,
                                                             int topic, int N) {
  if (topic < 0 || topic >= model.K) throw Error("wordcloud_export: topic out of range");
  if (N > vocab.size()) throw Error("wordcloud_export: N exceeds vocabulary size");
  if (N < 1) throw Error("wordcloud_export: N must be >= 1");
  const Eigen::VectorXd row = model.beta.row(topic).transpose();
  const double mx = row.maxCoeff();
  if (mx <= 0.0) throw Error("wordcloud_export: topic row has no mass");
  std::vector<std::pair<std::string, double>> out;
  for (int v : top_indices(row, N)) {
    out.emplace_back(vocab.terms[static_cast<std::size_t>(v)], row(v) / mx);
  }
  return out;
}

std::map<int, std::string> load_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read labels file: " + path);
  std::map<int, std::string> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("labels file: missing tab at line " + std::to_string(line_no));
    try {
      labels[std::stoi(line.substr(0, tab))] = line.substr(tab + 1);
    } catch (const std::exception&) {
      throw Error("labels file: bad topic id at line " + std::to_string(line_no));
    }
  }
  return labels;
}

void apply_labels(std::vector<TopicReport>& reports, const std::map<int, std::string>& labels) {
  for (auto& r : reports) {
    auto it = labels.find(r.topic_id);
    if (it != labels.end()) r.label = it->second;
  }
}

void write_report_csv(const std::vector<TopicReport>& reports, const std::string& path,
                      WordRanking ranking, const std::string& sort) {
  std::vector<const TopicReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  if (sort == "prevalence") {
    std::stable_sort(rows.begin(), rows.end(), [](const TopicReport* a, const TopicReport* b) {
      return a->prevalence_pct > b->prevalence_pct;
    });
  } else if (sort != "topic") {
    throw Error("write_report_csv: sort must be topic or prevalence");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "topic_id,label,prevalence_pct,top_words\n";
  for (const auto* r : rows) {
    const auto& words = ranking == WordRanking::kFrex && !r->top_words_frex.empty() ? r->top_words_frex : r->top_words_prob;
    std::string joined;
    for (const auto& [w, score] : words) {
      if (!joined.empty()) joined += '|';
      joined += w;
    }
    out << r->topic_id << ',' << quote_csv(r->label) << ',' << fmt(r->prevalence_pct) << ',' << quote_csv(joined) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void write_wordcloud_csv(const std::vector<std::pair<std::string, double>>& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "word,weight\n";
  for (const auto& [word, weight] : weights) out << quote_csv(word) << ',' << fmt(weight) << '\n';
  if (!out) throw Error("write failed: " + path);
}

void write_sectors_csv(const std::vector<SectorShare>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "sector,count,share\n";
  for (const auto& r : rows) out << quote_csv(r.sector) << ',' << r.count << ',' << fmt(r.share) << '\n';
  if (!out) throw Error("write failed: " + path);
}

void export_beta_csv(const Eigen::MatrixXd& beta, const Vocabulary& vocab, const std::string& path) {
  if (static_cast<int>(beta.cols()) != vocab.size()) throw Error("export_beta_csv: vocabulary size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (int v = 0; v < vocab.size(); ++v) {
    if (v) out << ',';
    out << quote_csv(vocab.terms[static_cast<std::size_t>(v)]);
  }
  out << '\n';
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    for (Eigen::Index v = 0; v < beta.cols(); ++v) {
      if (v) out << ',';
      out << fmt(beta(k, v));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void scatter_svg(const Embedding& embedding, const std::string& path) {
  const Eigen::Index n = embedding.coords.rows();
  if (n == 0) throw Error("scatter_svg: empty embedding");
  if (!embedding.coords.allFinite()) throw Error("scatter_svg: non-finite coordinates");
  if (static_cast<Eigen::Index>(embedding.dominant_topic.size()) != n) {
    throw Error("scatter_svg: dominant_topic size mismatch");
  }

  std::set<int> topics(embedding.dominant_topic.begin(), embedding.dominant_topic.end());

  const double width = 820.0, height = 620.0, margin = 20.0, legend_w = 120.0;
  const double plot_w = width - legend_w - 2.0 * margin, plot_h = height - 2.0 * margin;
  double xmin = embedding.coords.col(0).minCoeff(), xmax = embedding.coords.col(0).maxCoeff();
  double ymin = embedding.coords.col(1).minCoeff(), ymax = embedding.coords.col(1).maxCoeff();
  if (xmax - xmin < 1e-12) { xmin -= 1.0; xmax += 1.0; }
  if (ymax - ymin < 1e-12) { ymin -= 1.0; ymax += 1.0; }
  auto sx = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return margin + (ymax - y) / (ymax - ymin) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  svg << "<g stroke=\"none\">\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = embedding.dominant_topic[static_cast<std::size_t>(i)];
    svg << "<circle cx=\"" << fmt3(sx(embedding.coords(i, 0))) << "\" cy=\"" << fmt3(sy(embedding.coords(i, 1)))
        << "\" r=\"2.5\" fill=\"" << kPalette[t % kPaletteSize] << "\" fill-opacity=\"0.75\"/>\n";
  }
  svg << "</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = margin + 4.0;
  const double lx = width - legend_w;
  for (int t : topics) {
    svg << "<rect x=\"" << fmt3(lx) << "\" y=\"" << fmt3(ly) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[t % kPaletteSize] << "\"/>\n";
    svg << "<text x=\"" << fmt3(lx + 14.0) << "\" y=\"" << fmt3(ly + 9.0) << "\">topic " << t << "</text>\n";
    ly += 16.0;
  }
  svg << "</g>\n</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << svg.str();
  if (!out) throw Error("write failed: " + path);
}

}  // namespace lmi
