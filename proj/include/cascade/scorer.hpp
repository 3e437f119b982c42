#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cascade/trace.hpp"

namespace cascade {

class ScoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScoreMethod { kAttenH, kPerplexity, kEnergy, kAvgRange };

std::string_view to_string(ScoreMethod method);
std::optional<ScoreMethod> parse_score_method(std::string_view s);

// Logs are natural throughout. Energy runs at the native temperature only
// because traces carry log-sum-exp of the unscaled logits.
struct ScoreConfig {
  int window_k = 15;
  static constexpr double kEnergyTemperature = 1.0;

  void validate() const;
};

// Every method is oriented so that a larger value means a likelier hallucination.
struct SequenceScore {
  ScoreMethod method = ScoreMethod::kAttenH;
  double value = 0.0;
  std::optional<std::vector<double>> window_scores;  // attenh only
};

// exp(att_recv), in [1, e] for att_recv in [0, 1].
double atten_amplify(double att_recv);

// p_max * exp(att_recv) * (-ln p_max): the accumulation weight times the
// token's uncertainty.
double token_term(const TokenRecord& rec);

// Sum of token_term over a non-empty slice.
double window_score(std::span<const TokenRecord> tokens);

// Splits the trace into consecutive windows of window_k tokens (the tail window
// may be shorter and is scored on its own) and takes the max window score.
// Requires a non-empty generate-mode trace.
SequenceScore attenh_score(const GenerationTrace& trace, const ScoreConfig& cfg);

SequenceScore perplexity_score(const GenerationTrace& trace);
SequenceScore energy_score(const GenerationTrace& trace, const ScoreConfig& cfg);
SequenceScore avg_range_score(const GenerationTrace& trace);

SequenceScore score_trace(const GenerationTrace& trace, ScoreMethod method,
                          const ScoreConfig& cfg);

}  // namespace cascade
