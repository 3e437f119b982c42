#include "cascade/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cascade/trace.hpp"
#include "json.hpp"

namespace cascade::eval {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!std::ispunct(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

double rouge_l_f(std::span<const std::string> candidate, std::span<const std::string> reference) {
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  // 2PR/(P+R) with P = lcs/m and R = lcs/n, in one rounding.
  return 2.0 * static_cast<double>(lcs) / static_cast<double>(candidate.size() + reference.size());
}

double rouge_l_f(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return rouge_l_f(c, r);
}

bool is_hallucinated(std::string_view answer, std::span<const std::string> references,
                     double tau) {
  const auto cand = tokenize(answer);
  double best = 0.0;
  for (const auto& ref : references) best = std::max(best, rouge_l_f(cand, tokenize(ref)));
  return best < tau;
}

std::vector<bool> label_correctness(std::span<const std::string> answers,
                                    std::span<const std::vector<std::string>> references,
                                    double tau) {
  if (answers.size() != references.size()) {
    throw EvalError("answers and references differ in length");
  }
  std::vector<bool> labels;
  labels.reserve(answers.size());
  for (std::size_t i = 0; i < answers.size(); ++i) {
    labels.push_back(is_hallucinated(answers[i], references[i], tau));
  }
  return labels;
}

double auroc(std::span<const EvalRecord> records) {
  std::size_t pos = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw EvalError("record " + r.qid + " has a non-finite score");
    pos += r.label ? 1 : 0;
  }
  const std::size_t neg = records.size() - pos;
  if (pos == 0 || neg == 0) throw EvalError("degenerate label set");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].score < records[b].score; });

  // Sum of positive ranks with tied groups sharing their mean rank (1-based).
  // Ranks are half-integers, exact in double for any realistic n.
  double pos_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi < order.size() && records[order[hi]].score == records[order[lo]].score) ++hi;
    const double mean_rank = static_cast<double>(lo + 1 + hi) / 2.0;
    for (std::size_t k = lo; k < hi; ++k) {
      if (records[order[k]].label) pos_rank_sum += mean_rank;
    }
    lo = hi;
  }
  const double p = static_cast<double>(pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

AccuracyResult best_accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) throw EvalError("best_accuracy needs at least one record");
  std::vector<EvalRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const EvalRecord& a, const EvalRecord& b) { return a.score < b.score; });

  const std::size_t n = sorted.size();
  std::size_t positives = 0;
  for (const auto& r : sorted) positives += r.label ? 1 : 0;

  // Cut c predicts hallucination for sorted[c..n). Start with c = 0.
  std::size_t correct = positives;
  std::size_t best_correct = correct;
  double best_threshold = sorted.front().score;
  for (std::size_t c = 1; c <= n; ++c) {
    // sorted[c - 1] is now predicted correct.
    if (sorted[c - 1].label) {
      --correct;
    } else {
      ++correct;
    }
    if (c < n && sorted[c].score == sorted[c - 1].score) continue;
    if (correct > best_correct) {
      best_correct = correct;
      best_threshold = c < n ? sorted[c].score
                             : std::nextafter(sorted.back().score,
                                              std::numeric_limits<double>::infinity());
    }
  }
  return {static_cast<double>(best_correct) / static_cast<double>(n), best_threshold};
}

std::vector<RecordRow> read_records(std::istream& in) {
  std::vector<RecordRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = " (line " + std::to_string(line_no) + ")";
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw EvalError("malformed record" + where);

    RecordRow row;
    if (auto q = obj.find("qid"); q != obj.end()) {
      row.qid = q->is_string() ? q->get<std::string>() : q->dump();
    } else {
      row.qid = std::to_string(line_no);
    }
    auto scores = obj.find("scores");
    if (scores == obj.end() || !scores->is_object()) throw EvalError("missing scores" + where);
    for (const auto& [name, v] : scores->items()) {
      if (!v.is_number()) throw EvalError("score \"" + name + "\" is not a number" + where);
      row.scores.emplace(name, v.get<double>());
    }
    if (auto a = obj.find("answer"); a != obj.end() && a->is_string()) {
      row.answer = a->get<std::string>();
    }
    if (auto refs = obj.find("references"); refs != obj.end()) {
      if (refs->is_string()) {
        row.references.push_back(refs->get<std::string>());
      } else if (refs->is_array()) {
        for (const auto& r : *refs) {
          if (!r.is_string()) throw EvalError("reference is not a string" + where);
          row.references.push_back(r.get<std::string>());
        }
      } else {
        throw EvalError("references must be a list of strings" + where);
      }
    }
    if (auto ext = obj.find("ext_label"); ext != obj.end() && !ext->is_null()) {
      if (!ext->is_boolean()) throw EvalError("ext_label is not a boolean" + where);
      row.ext_label = ext->get<bool>();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::vector<EvalRecord> zip(std::span<const double> scores, const std::vector<bool>& labels) {
  std::vector<EvalRecord> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({std::to_string(i), scores[i], labels[i]});
  }
  return out;
}

}  // namespace

Report build_report(std::span<const MethodScores> methods, const std::vector<bool>& labels,
                    const std::optional<std::vector<bool>>& ext_labels) {
  if (ext_labels && ext_labels->size() != labels.size()) {
    throw EvalError("external labels misaligned with records");
  }
  Report report;
  report.n_records = labels.size();
  report.n_hallucinated = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  for (const auto& m : methods) {
    if (m.method.find_first_of(",\"\n\r") != std::string::npos) {
      throw EvalError("method name \"" + m.method + "\" is not CSV-safe");
    }
    if (m.scores.size() != labels.size()) {
      throw EvalError("scores for " + m.method + " misaligned with labels");
    }
    MethodMetrics row;
    row.method = m.method;
    const auto recs = zip(m.scores, labels);
    row.auroc_rouge = auroc(recs);
    row.acc_rouge = best_accuracy(recs).accuracy;
    if (ext_labels) {
      const auto ext = zip(m.scores, *ext_labels);
      row.auroc_ext = auroc(ext);
      row.acc_ext = best_accuracy(ext).accuracy;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

Report evaluate_rows(std::span<const RecordRow> rows, std::span<const std::string> methods,
                     double tau) {
  if (rows.empty()) throw EvalError("no records");

  std::vector<std::string> names(methods.begin(), methods.end());
  if (names.empty()) {
    for (const auto& [name, _] : rows.front().scores) {
      const bool everywhere = std::all_of(rows.begin(), rows.end(), [&](const RecordRow& r) {
        return r.scores.count(name) > 0;
      });
      if (everywhere) names.push_back(name);
    }
    if (names.empty()) throw EvalError("no score method present in every record");
  }

  std::vector<MethodScores> scored;
  for (const auto& name : names) {
    MethodScores m{name, {}};
    for (const auto& r : rows) {
      auto it = r.scores.find(name);
      if (it == r.scores.end()) throw EvalError("record " + r.qid + " lacks score " + name);
      m.scores.push_back(it->second);
    }
    scored.push_back(std::move(m));
  }

  std::vector<bool> labels;
  for (const auto& r : rows) labels.push_back(is_hallucinated(r.answer, r.references, tau));

  const std::size_t with_ext = static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const RecordRow& r) { return r.ext_label.has_value(); }));
  if (with_ext != 0 && with_ext != rows.size()) {
    throw EvalError("ext_label present on only some records");
  }
  std::optional<std::vector<bool>> ext;
  if (with_ext != 0) {
    ext.emplace();
    for (const auto& r : rows) ext->push_back(*r.ext_label);
  }
  return build_report(scored, labels, ext);
}

void write_csv(const Report& report, std::ostream& out) {
  const bool ext = !report.rows.empty() && report.rows.front().auroc_ext.has_value();
  out << "method,auroc_rouge,acc_rouge";
  if (ext) out << ",auroc_ext,acc_ext";
  out << "\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << format_double(r.auroc_rouge) << ',' << format_double(r.acc_rouge);
    if (ext) out << ',' << format_double(*r.auroc_ext) << ',' << format_double(*r.acc_ext);
    out << "\n";
  }
}

void write_table(const Report& report, std::ostream& out) {
  const bool ext = !report.rows.empty() && report.rows.front().auroc_ext.has_value();
  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.method.size());

  out << report.n_records << " records, " << report.n_hallucinated
      << " labelled hallucinated (Rouge-L)\n";
  out << std::left << std::setw(static_cast<int>(width)) << "method" << "  AUROC-r   ACC-r";
  if (ext) out << "   AUROC-s   ACC-s";
  out << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : report.rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.method << std::right << "  "
        << std::setw(7) << r.auroc_rouge << "  " << std::setw(6) << r.acc_rouge;
    if (ext) out << "   " << std::setw(7) << *r.auroc_ext << "  " << std::setw(6) << *r.acc_ext;
    out << "\n";
  }
  out << std::defaultfloat;
}

Report read_csv(std::istream& in) {
  Report report;
  std::string line;
  if (!std::getline(in, line)) throw EvalError("empty report");
  const bool ext = line == "method,auroc_rouge,acc_rouge,auroc_ext,acc_ext";
  if (!ext && line != "method,auroc_rouge,acc_rouge") throw EvalError("unexpected report header");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != (ext ? 5u : 3u)) throw EvalError("malformed report row: " + line);
    MethodMetrics m;
    m.method = cells[0];
    m.auroc_rouge = std::stod(cells[1]);
    m.acc_rouge = std::stod(cells[2]);
    if (ext) {
      m.auroc_ext = std::stod(cells[3]);
      m.acc_ext = std::stod(cells[4]);
    }
    report.rows.push_back(std::move(m));
  }
  return report;
}

}  // namespace cascade::eval
