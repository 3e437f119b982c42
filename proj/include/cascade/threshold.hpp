#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace cascade {

class ThresholdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GateDecision { kKeep, kInvoke };

inline constexpr std::uint32_t kDefaultWarmup = 5;

// Running-mean invocation threshold. Value type: observe() returns the next
// state and leaves the receiver untouched, so callers that share one state
// across threads serialize around a single assignment.
//
// The sum is compensated (Neumaier) so the mean tracks the exact arithmetic
// mean over long streams.
class ThresholdState {
 public:
  explicit ThresholdState(std::uint32_t warmup = kDefaultWarmup) : warmup_remaining_(warmup) {}

  [[nodiscard]] ThresholdState observe(double score) const;

  // Keep while warming up; afterwards Keep iff score < mean.
  GateDecision decide(double score) const;

  std::uint32_t warmup_remaining() const { return warmup_remaining_; }
  std::uint64_t count() const { return count_; }
  // Absent until the first observation.
  std::optional<double> mean() const;

 private:
  std::uint32_t warmup_remaining_;
  std::uint64_t count_ = 0;
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace cascade
