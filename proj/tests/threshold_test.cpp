#include "cascade/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "support/oracles.hpp"

namespace cascade {
namespace {

ThresholdState observe_all(ThresholdState s, const std::vector<double>& scores) {
  for (double x : scores) s = s.observe(x);
  return s;
}

TEST(Threshold, FreshState) {
  ThresholdState s;
  EXPECT_EQ(s.warmup_remaining(), 5u);
  EXPECT_EQ(s.count(), 0u);
  EXPECT_FALSE(s.mean().has_value());
}

TEST(Threshold, MeanOfTwo) {
  const auto s = observe_all(ThresholdState{}, {2.0, 4.0});
  EXPECT_EQ(*s.mean(), 3.0);
  EXPECT_EQ(s.count(), 2u);
  EXPECT_EQ(s.warmup_remaining(), 3u);
}

TEST(Threshold, SingleObservation) {
  EXPECT_EQ(*ThresholdState{}.observe(0.73).mean(), 0.73);
}

TEST(Threshold, ObserveLeavesReceiverUntouched) {
  const ThresholdState s;
  const auto next = s.observe(1.0);
  EXPECT_EQ(s.count(), 0u);
  EXPECT_EQ(next.count(), 1u);
}

TEST(Threshold, PermutationsOfSevenGiveFour) {
  std::vector<double> xs = {1, 2, 3, 4, 5, 6, 7};
  do {
    EXPECT_EQ(*observe_all(ThresholdState{}, xs).mean(), 4.0);
  } while (std::next_permutation(xs.begin(), xs.end()));
}

TEST(Threshold, RejectsNonFinite) {
  EXPECT_THROW((void)ThresholdState{}.observe(std::numeric_limits<double>::quiet_NaN()), ThresholdError);
  EXPECT_THROW((void)ThresholdState{}.observe(std::numeric_limits<double>::infinity()), ThresholdError);
  EXPECT_THROW(ThresholdState{}.decide(std::numeric_limits<double>::infinity()), ThresholdError);
}

TEST(Threshold, WarmupAlwaysKeeps) {
  auto s = observe_all(ThresholdState{}, {1.0, 1.0});
  EXPECT_EQ(s.warmup_remaining(), 3u);
  EXPECT_EQ(s.decide(1e6), GateDecision::kKeep);
}

TEST(Threshold, GateAfterWarmup) {
  const auto s = observe_all(ThresholdState{}, {3.0, 3.0, 3.0, 3.0, 3.0});
  ASSERT_EQ(s.warmup_remaining(), 0u);
  EXPECT_EQ(s.decide(5.0), GateDecision::kInvoke);
  EXPECT_EQ(s.decide(3.0), GateDecision::kInvoke);  // boundary escalates
  EXPECT_EQ(s.decide(2.999), GateDecision::kKeep);
}

TEST(Threshold, WarmupNeverIncreases) {
  ThresholdState s(2);
  std::uint32_t prev = s.warmup_remaining();
  for (int i = 0; i < 6; ++i) {
    s = s.observe(i);
    EXPECT_LE(s.warmup_remaining(), prev);
    prev = s.warmup_remaining();
  }
  EXPECT_EQ(prev, 0u);
}

TEST(Threshold, NoObservationsAfterZeroWarmupIsInvalid) {
  ThresholdState s(0);
  EXPECT_THROW(s.decide(1.0), ThresholdError);
}

TEST(Threshold, LongStreamMatchesBruteForceMean) {
  std::mt19937_64 rng(21);
  std::lognormal_distribution<double> dist(0.0, 2.0);
  std::vector<double> xs;
  ThresholdState s;
  for (int i = 0; i < 100000; ++i) {
    xs.push_back(dist(rng));
    s = s.observe(xs.back());
  }
  EXPECT_TRUE(oracle::close_rel(*s.mean(), oracle::mean(xs), 1e-12));
}

}  // namespace
}  // namespace cascade
