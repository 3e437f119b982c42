#include "cascade/threshold.hpp"

#include <cmath>

namespace cascade {

ThresholdState ThresholdState::observe(double score) const {
  if (!std::isfinite(score)) throw ThresholdError("observed score is not finite");
  ThresholdState next = *this;
  const double t = next.sum_ + score;
  if (std::abs(next.sum_) >= std::abs(score)) {
    next.compensation_ += (next.sum_ - t) + score;
  } else {
    next.compensation_ += (score - t) + next.sum_;
  }
  next.sum_ = t;
  ++next.count_;
  if (next.warmup_remaining_ > 0) --next.warmup_remaining_;
  return next;
}

std::optional<double> ThresholdState::mean() const {
  if (count_ == 0) return std::nullopt;
  return (sum_ + compensation_) / static_cast<double>(count_);
}

GateDecision ThresholdState::decide(double score) const {
  if (!std::isfinite(score)) throw ThresholdError("decided score is not finite");
  if (warmup_remaining_ > 0) return GateDecision::kKeep;
  if (count_ == 0) throw ThresholdError("no threshold: zero observations after warmup");
  return score < *mean() ? GateDecision::kKeep : GateDecision::kInvoke;
}

}  // namespace cascade
