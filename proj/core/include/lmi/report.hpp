#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lmi/corpus.hpp"
#include "lmi/embed.hpp"
#include "lmi/inference.hpp"
#include "lmi/preprocess.hpp"

namespace lmi {

struct TopicReport {
  int topic_id = 0;
  std::string label;
  double prevalence_pct = 0.0;
  std::vector<std::pair<std::string, double>> top_words_prob;
  std::vector<std::pair<std::string, double>> top_words_frex;
};

enum class WordRanking { kProb, kFrex };
WordRanking word_ranking_from_string(const std::string& name);

/// Prevalence (100 * corpus-mean theta) plus top word lists per topic,
/// ordered by topic id; percentages sum to 100. With K=1 the FREX lists
/// stay empty (exclusivity is undefined).
std::vector<TopicReport> prevalence_table(const TopicModel& model, const Vocabulary& vocab,
                                          int top_words = 10, double frex_omega = 0.7);

/// Per-topic top-M (word, score) lists under the chosen ranking,
/// descending with ties to the lower word index.
std::vector<std::vector<std::pair<std::string, double>>> top_words(
    const TopicModel& model, const Vocabulary& vocab, int M, WordRanking ranking,
    double frex_omega = 0.7);

/// Top-N words of one topic with weights scaled so the maximum is 1.0.
std::vector<std::pair<std::string, double>> wordcloud_export(const TopicModel& model,
                                                             const Vocabulary& vocab,
                                                             int topic, int N);

/// Labels file: UTF-8 lines "topic_id<TAB>label".
std::map<int, std::string> load_labels_file(const std::string& path);
void apply_labels(std::vector<TopicReport>& reports, const std::map<int, std::string>& labels);

/// report.csv rows: topic_id, label, prevalence_pct, top words joined by
/// '|'. Sort is "topic" or "prevalence".
void write_report_csv(const std::vector<TopicReport>& reports, const std::string& path,
                      WordRanking ranking = WordRanking::kFrex, const std::string& sort = "topic");

void write_wordcloud_csv(const std::vector<std::pair<std::string, double>>& weights,
                         const std::string& path);

void write_sectors_csv(const std::vector<SectorShare>& rows, const std::string& path);

/// Topic-word matrix export: one topic per row, vocabulary terms as the
/// CSV header.
void export_beta_csv(const Eigen::MatrixXd& beta, const Vocabulary& vocab, const std::string& path);

/// Standalone scatter SVG: one circle per document colored by dominant
/// topic from a colorblind-safe palette, with a topic legend and no axis
/// labels. Output bytes depend only on the embedding.
void scatter_svg(const Embedding& embedding, const std::string& path);

}  // namespace lmi
