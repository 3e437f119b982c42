#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/threshold.hpp"

namespace cascade {

enum class Route { kSlm, kLlm, kSlmBudgetForced };

std::string_view to_string(Route route);
std::optional<Route> parse_route(std::string_view s);

struct CascadeDecision {
  std::uint64_t seq = 0;  // 1-based admission order
  std::string qid;
  double score = 0.0;
  std::optional<double> theta;  // absent during warmup
  GateDecision gate = GateDecision::kKeep;
  Route route = Route::kSlm;
  std::uint64_t llm_calls_so_far = 0;  // including this query
  std::uint64_t total_queries = 0;     // including this query
  std::optional<std::string> error;    // set when an admitted LLM call failed

  bool operator==(const CascadeDecision&) const = default;
};

// Admission check for one more LLM call: (calls + 1) <= fraction * (queries + 1),
// where both counters exclude the query being decided. No fraction means no cap.
bool budget_allow(std::uint64_t llm_calls, std::uint64_t total_queries,
                  std::optional<double> budget_fraction);

struct StatsSnapshot {
  ThresholdState threshold;
  std::uint64_t total_queries = 0;
  std::uint64_t llm_calls = 0;
  std::uint64_t budget_forced = 0;
  std::uint64_t decisions_logged = 0;
  std::optional<double> budget_fraction;
  std::vector<CascadeDecision> recent;  // oldest first
};

// The serialized part of the cascade: threshold state, budget counters and the
// in-memory decision tail. admit() runs decide, budget reservation and observe
// as one atomic step; backend calls happen outside.
class CascadeController {
 public:
  CascadeController(std::uint32_t warmup, std::optional<double> budget_fraction,
                    std::size_t tail_capacity = 100);

  // Empty qid gets "q<seq>".
  CascadeDecision admit(double score, std::string qid = {});

  // Returns the reservation taken for an llm-routed decision whose call failed.
  // The decision is rewritten to slm_budget_forced with `error` attached.
  CascadeDecision release_llm_call(const CascadeDecision& admitted, std::string error);

  StatsSnapshot stats() const;

 private:
  mutable std::mutex mu_;
  ThresholdState threshold_;
  std::optional<double> budget_fraction_;
  std::uint64_t total_queries_ = 0;
  std::uint64_t llm_calls_ = 0;
  std::uint64_t budget_forced_ = 0;
  std::uint64_t decisions_logged_ = 0;
  std::size_t tail_capacity_;
  std::deque<CascadeDecision> tail_;
};

// Append-only newline-delimited decision log.
class DecisionLog {
 public:
  explicit DecisionLog(const std::string& path);
  void append(const CascadeDecision& d);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::string decision_to_json(const CascadeDecision& d);
CascadeDecision decision_from_json(std::string_view line);
std::vector<CascadeDecision> read_decision_log(std::istream& in);

// Re-runs the recorded scores (in seq order) through a fresh controller. Records
// whose LLM call failed get their reservation released at the same point, so a
// sequential run reproduces exactly.
std::vector<CascadeDecision> replay_decisions(std::span<const CascadeDecision> recorded,
                                              std::uint32_t warmup,
                                              std::optional<double> budget_fraction);

}  // namespace cascade
