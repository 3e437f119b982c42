#include "cascade/controller.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "gtest/gtest.h"

namespace cascade {
namespace {

TEST(BudgetAllow, Examples) {
  EXPECT_FALSE(budget_allow(0, 0, 0.4));  // 1 > 0.4
  EXPECT_TRUE(budget_allow(3, 10, 0.4));  // 4 <= 4.4
  EXPECT_FALSE(budget_allow(4, 10, 0.4));
  for (std::uint64_t n = 0; n < 50; ++n) EXPECT_TRUE(budget_allow(n, n, 1.0));
  EXPECT_TRUE(budget_allow(100, 3, std::nullopt));
}

TEST(Controller, WarmupRoutesSlmWithoutTheta) {
  CascadeController ctl(5, std::nullopt);
  for (int i = 1; i <= 5; ++i) {
    const auto d = ctl.admit(1e6);
    EXPECT_EQ(d.route, Route::kSlm);
    EXPECT_EQ(d.gate, GateDecision::kKeep);
    EXPECT_FALSE(d.theta.has_value());
    EXPECT_EQ(d.seq, static_cast<std::uint64_t>(i));
    EXPECT_EQ(d.qid, "q" + std::to_string(i));
  }
  const auto sixth = ctl.admit(1e6 + 1);
  ASSERT_TRUE(sixth.theta.has_value());
  EXPECT_EQ(*sixth.theta, 1e6);
  EXPECT_EQ(sixth.route, Route::kLlm);
}

void warm(CascadeController& ctl) {
  for (int i = 0; i < 5; ++i) ctl.admit(3.0);
}

TEST(Controller, GateFiresWithBudget) {
  CascadeController ctl(5, std::nullopt);
  warm(ctl);
  const auto d = ctl.admit(5.0, "mine");
  EXPECT_EQ(d.qid, "mine");
  EXPECT_EQ(*d.theta, 3.0);
  EXPECT_EQ(d.route, Route::kLlm);
  EXPECT_EQ(d.llm_calls_so_far, 1u);
  EXPECT_EQ(d.total_queries, 6u);
  EXPECT_EQ(ctl.admit(1.0).route, Route::kSlm);
}

TEST(Controller, BudgetExhaustedForcesSlm) {
  // 0.1 of 6 queries allows no call yet: 1 > 0.6.
  CascadeController ctl(5, 0.1);
  warm(ctl);
  const auto d = ctl.admit(5.0);
  EXPECT_EQ(d.gate, GateDecision::kInvoke);
  EXPECT_EQ(d.route, Route::kSlmBudgetForced);
  EXPECT_EQ(ctl.stats().budget_forced, 1u);
  EXPECT_EQ(ctl.stats().threshold.count(), 6u);  // still observed
}

TEST(Controller, ReleaseReturnsReservation) {
  CascadeController ctl(5, std::nullopt);
  warm(ctl);
  const auto d = ctl.admit(9.0);
  ASSERT_EQ(d.route, Route::kLlm);
  const auto r = ctl.release_llm_call(d, "llm_error: boom");
  EXPECT_EQ(r.route, Route::kSlmBudgetForced);
  EXPECT_EQ(r.llm_calls_so_far, 0u);
  EXPECT_EQ(*r.error, "llm_error: boom");
  const auto s = ctl.stats();
  EXPECT_EQ(s.llm_calls, 0u);
  EXPECT_EQ(s.recent.back(), r);
  EXPECT_THROW(ctl.release_llm_call(r, "again"), std::logic_error);
}

TEST(Controller, FreshStats) {
  CascadeController ctl(5, 0.4);
  const auto s = ctl.stats();
  EXPECT_EQ(s.threshold.count(), 0u);
  EXPECT_EQ(s.llm_calls, 0u);
  EXPECT_EQ(s.total_queries, 0u);
  EXPECT_TRUE(s.recent.empty());
}

TEST(Controller, TailIsBounded) {
  CascadeController ctl(1, std::nullopt, 3);
  for (int i = 0; i < 10; ++i) ctl.admit(i);
  const auto s = ctl.stats();
  ASSERT_EQ(s.recent.size(), 3u);
  EXPECT_EQ(s.recent.front().seq, 8u);
  EXPECT_EQ(s.decisions_logged, 10u);
}

TEST(Controller, InvalidConstruction) {
  EXPECT_THROW(CascadeController(0, std::nullopt), std::invalid_argument);
  EXPECT_THROW(CascadeController(5, 0.0), std::invalid_argument);
  EXPECT_THROW(CascadeController(5, 1.5), std::invalid_argument);
}

TEST(Controller, BudgetInvariantHoldsThroughout) {
  std::mt19937_64 rng(53);
  std::exponential_distribution<double> dist(1.0);
  for (double f : {0.05, 0.25, 0.4, 0.5, 0.9, 1.0}) {
    CascadeController ctl(5, f);
    for (int i = 0; i < 500; ++i) {
      const auto d = ctl.admit(dist(rng));
      EXPECT_LE(static_cast<double>(d.llm_calls_so_far),
                std::ceil(f * static_cast<double>(d.total_queries)));
    }
  }
}

TEST(Controller, ConcurrentSnapshotsAreConsistent) {
  CascadeController ctl(5, 0.4, 1000000);
  std::atomic<bool> done{false};
  std::atomic<int> inconsistent{0};
  std::thread reader([&] {
    while (!done) {
      const auto s = ctl.stats();
      if (s.threshold.count() != s.total_queries || s.recent.size() != s.total_queries ||
          s.decisions_logged != s.total_queries || s.llm_calls + s.budget_forced > s.total_queries) {
        ++inconsistent;
      }
    }
  });
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&ctl, w] {
      std::mt19937_64 rng(w);
      std::uniform_real_distribution<double> u(0.0, 5.0);
      for (int i = 0; i < 2000; ++i) ctl.admit(u(rng));
    });
  }
  for (auto& t : writers) t.join();
  done = true;
  reader.join();
  EXPECT_EQ(inconsistent.load(), 0);
  EXPECT_EQ(ctl.stats().total_queries, 8000u);
}

TEST(DecisionLog, JsonRoundTrip) {
  CascadeDecision d;
  d.seq = 12;
  d.qid = "q\"12";
  d.score = 0.1 + 0.2;
  d.theta = 1.0 / 3.0;
  d.gate = GateDecision::kInvoke;
  d.route = Route::kSlmBudgetForced;
  d.llm_calls_so_far = 4;
  d.total_queries = 12;
  d.error = "llm_error: timeout";
  EXPECT_EQ(decision_from_json(decision_to_json(d)), d);
  d.theta.reset();
  d.error.reset();
  EXPECT_EQ(decision_from_json(decision_to_json(d)), d);
  EXPECT_THROW(decision_from_json("{}"), std::runtime_error);
}

TEST(DecisionLog, AppendsAndReplays) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("cascade_log_" + std::to_string(::getpid()) + ".ndjson");
  std::filesystem::remove(path);
  std::vector<CascadeDecision> made;
  {
    DecisionLog log(path.string());
    CascadeController ctl(5, 0.4);
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 200; ++i) {
      auto d = ctl.admit(u(rng));
      if (d.route == Route::kLlm && i % 7 == 0) d = ctl.release_llm_call(d, "llm_error: x");
      log.append(d);
      made.push_back(d);
    }
  }
  std::ifstream in(path);
  const auto recorded = read_decision_log(in);
  ASSERT_EQ(recorded, made);
  EXPECT_EQ(replay_decisions(recorded, 5, 0.4), made);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace cascade
