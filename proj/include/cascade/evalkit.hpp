#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// label == true means the answer is incorrect (hallucinated).
struct EvalRecord {
  std::string qid;
  double score = 0.0;
  bool label = false;
};

inline constexpr double kRougeCorrectThreshold = 0.5;

// Lowercases, drops ASCII punctuation and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Rouge-L F1 over token sequences; 0 when either side is empty or nothing is shared.
double rouge_l_f(std::span<const std::string> candidate, std::span<const std::string> reference);
double rouge_l_f(std::string_view candidate, std::string_view reference);

// true (hallucinated) iff the best Rouge-L F against any reference is below tau.
bool is_hallucinated(std::string_view answer, std::span<const std::string> references,
                     double tau = kRougeCorrectThreshold);
std::vector<bool> label_correctness(std::span<const std::string> answers,
                                    std::span<const std::vector<std::string>> references,
                                    double tau = kRougeCorrectThreshold);

// Mann-Whitney AUROC: P(score_pos > score_neg) + 0.5 P(tie). O(n log n).
double auroc(std::span<const EvalRecord> records);

struct AccuracyResult {
  double accuracy = 0.0;
  double threshold = 0.0;  // predict hallucination iff score >= threshold
};

// Best accuracy over every cut between consecutive distinct scores, including
// the all-positive and all-negative cuts. Ties in accuracy go to the lowest threshold.
AccuracyResult best_accuracy(std::span<const EvalRecord> records);

// Input rows of the records file: one JSON object per line.
struct RecordRow {
  std::string qid;
  std::map<std::string, double> scores;
  std::string answer;
  std::vector<std::string> references;
  std::optional<bool> ext_label;
};

std::vector<RecordRow> read_records(std::istream& in);

struct MethodMetrics {
  std::string method;
  double auroc_rouge = 0.0;
  double acc_rouge = 0.0;
  std::optional<double> auroc_ext;
  std::optional<double> acc_ext;
};

struct Report {
  std::size_t n_records = 0;
  std::size_t n_hallucinated = 0;
  std::vector<MethodMetrics> rows;
};

// Scores one method per entry of `methods`. Each method's scores must be aligned
// with `labels` (and `ext_labels` when given).
struct MethodScores {
  std::string method;
  std::vector<double> scores;
};
Report build_report(std::span<const MethodScores> methods, const std::vector<bool>& labels,
                    const std::optional<std::vector<bool>>& ext_labels = std::nullopt);

// Labels rows via Rouge-L and evaluates every method present in all rows (or
// only `methods` when non-empty).
Report evaluate_rows(std::span<const RecordRow> rows, std::span<const std::string> methods = {},
                     double tau = kRougeCorrectThreshold);

void write_csv(const Report& report, std::ostream& out);
void write_table(const Report& report, std::ostream& out);
Report read_csv(std::istream& in);

}  // namespace cascade::eval
