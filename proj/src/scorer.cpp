#include "cascade/scorer.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

std::string_view to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::kAttenH:
      return "attenh";
    case ScoreMethod::kPerplexity:
      return "perplexity";
    case ScoreMethod::kEnergy:
      return "energy";
    case ScoreMethod::kAvgRange:
      return "avg_range";
  }
  return "attenh";
}

std::optional<ScoreMethod> parse_score_method(std::string_view s) {
  if (s == "attenh") return ScoreMethod::kAttenH;
  if (s == "perplexity") return ScoreMethod::kPerplexity;
  if (s == "energy") return ScoreMethod::kEnergy;
  if (s == "avg_range") return ScoreMethod::kAvgRange;
  return std::nullopt;
}

void ScoreConfig::validate() const {
  if (window_k < 1) throw ScoreError("window_k must be >= 1");
}

namespace {

void require_tokens(const GenerationTrace& trace) {
  if (trace.tokens.empty()) throw ScoreError("cannot score an empty trace");
}

}  // namespace

double atten_amplify(double att_recv) { return std::exp(att_recv); }

double token_term(const TokenRecord& rec) {
  // Certain tokens contribute exactly +0, not -0.
  return rec.p_max * atten_amplify(rec.att_recv) * (0.0 - std::log(rec.p_max));
}

double window_score(std::span<const TokenRecord> tokens) {
  double h = 0.0;
  for (const auto& t : tokens) h += token_term(t);
  return h;
}

SequenceScore attenh_score(const GenerationTrace& trace, const ScoreConfig& cfg) {
  cfg.validate();
  require_tokens(trace);
  if (trace.mode != TraceMode::kGenerate) {
    throw ScoreError("attenh scoring requires a generate-mode trace");
  }

  const std::span<const TokenRecord> all(trace.tokens);
  const auto k = static_cast<std::size_t>(cfg.window_k);
  std::vector<double> windows;
  windows.reserve((all.size() + k - 1) / k);
  for (std::size_t start = 0; start < all.size(); start += k) {
    windows.push_back(window_score(all.subspan(start, std::min(k, all.size() - start))));
  }

  SequenceScore out;
  out.method = ScoreMethod::kAttenH;
  out.value = *std::max_element(windows.begin(), windows.end());
  out.window_scores = std::move(windows);
  return out;
}

SequenceScore perplexity_score(const GenerationTrace& trace) {
  require_tokens(trace);
  double nll = 0.0;
  for (const auto& t : trace.tokens) nll -= std::log(t.p_real);
  return {ScoreMethod::kPerplexity, std::exp(nll / static_cast<double>(trace.size())), std::nullopt};
}

SequenceScore energy_score(const GenerationTrace& trace, const ScoreConfig& cfg) {
  cfg.validate();
  require_tokens(trace);
  double total = 0.0;
  for (const auto& t : trace.tokens) {
    if (!t.lse_logits) throw ScoreError("trace lacks logits summary");
    total += -ScoreConfig::kEnergyTemperature * *t.lse_logits;
  }
  return {ScoreMethod::kEnergy, total / static_cast<double>(trace.size()), std::nullopt};
}

SequenceScore avg_range_score(const GenerationTrace& trace) {
  require_tokens(trace);
  double total = 0.0;
  for (const auto& t : trace.tokens) {
    if (!t.p_min) throw ScoreError("trace lacks p_min");
    total += t.p_max - *t.p_min;
  }
  // A wide range signals confidence, so negate.
  return {ScoreMethod::kAvgRange, (0.0 - total) / static_cast<double>(trace.size()),
          std::nullopt};
}

SequenceScore score_trace(const GenerationTrace& trace, ScoreMethod method,
                          const ScoreConfig& cfg) {
  switch (method) {
    case ScoreMethod::kAttenH:
      return attenh_score(trace, cfg);
    case ScoreMethod::kPerplexity:
      return perplexity_score(trace);
    case ScoreMethod::kEnergy:
      return energy_score(trace, cfg);
    case ScoreMethod::kAvgRange:
      return avg_range_score(trace);
  }
  throw ScoreError("unknown score method");
}

}  // namespace cascade
