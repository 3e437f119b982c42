#include "cascade/controller.hpp"

#include <algorithm>
#include <istream>
#include <stdexcept>

#include "json.hpp"

namespace cascade {

using nlohmann::json;

std::string_view to_string(Route route) {
  switch (route) {
    case Route::kSlm:
      return "slm";
    case Route::kLlm:
      return "llm";
    case Route::kSlmBudgetForced:
      return "slm_budget_forced";
  }
  return "slm";
}

std::optional<Route> parse_route(std::string_view s) {
  if (s == "slm") return Route::kSlm;
  if (s == "llm") return Route::kLlm;
  if (s == "slm_budget_forced") return Route::kSlmBudgetForced;
  return std::nullopt;
}

bool budget_allow(std::uint64_t llm_calls, std::uint64_t total_queries,
                  std::optional<double> budget_fraction) {
  if (!budget_fraction) return true;
  return static_cast<double>(llm_calls + 1) <=
         *budget_fraction * static_cast<double>(total_queries + 1);
}

CascadeController::CascadeController(std::uint32_t warmup, std::optional<double> budget_fraction,
                                     std::size_t tail_capacity)
    : threshold_(warmup), budget_fraction_(budget_fraction), tail_capacity_(tail_capacity) {
  if (warmup < 1) throw std::invalid_argument("warmup must be >= 1");
  if (budget_fraction && !(*budget_fraction > 0.0 && *budget_fraction <= 1.0)) {
    throw std::invalid_argument("budget_fraction must be in (0, 1]");
  }
}

CascadeDecision CascadeController::admit(double score, std::string qid) {
  std::lock_guard lock(mu_);
  CascadeDecision d;
  d.seq = total_queries_ + 1;
  d.qid = qid.empty() ? "q" + std::to_string(d.seq) : std::move(qid);
  d.score = score;
  d.gate = threshold_.decide(score);
  if (threshold_.warmup_remaining() == 0) d.theta = threshold_.mean();

  if (d.gate == GateDecision::kKeep) {
    d.route = Route::kSlm;
  } else if (budget_allow(llm_calls_, total_queries_, budget_fraction_)) {
    d.route = Route::kLlm;
    ++llm_calls_;
  } else {
    d.route = Route::kSlmBudgetForced;
    ++budget_forced_;
  }

  threshold_ = threshold_.observe(score);
  ++total_queries_;
  d.llm_calls_so_far = llm_calls_;
  d.total_queries = total_queries_;

  if (tail_capacity_ > 0) {
    if (tail_.size() == tail_capacity_) tail_.pop_front();
    tail_.push_back(d);
  }
  ++decisions_logged_;
  return d;
}

CascadeDecision CascadeController::release_llm_call(const CascadeDecision& admitted,
                                                    std::string error) {
  if (admitted.route != Route::kLlm) {
    throw std::logic_error("release_llm_call on a decision that holds no reservation");
  }
  std::lock_guard lock(mu_);
  --llm_calls_;
  ++budget_forced_;
  CascadeDecision d = admitted;
  d.route = Route::kSlmBudgetForced;
  d.llm_calls_so_far = admitted.llm_calls_so_far - 1;
  d.error = std::move(error);
  auto it = std::find_if(tail_.begin(), tail_.end(),
                         [&](const CascadeDecision& x) { return x.seq == d.seq; });
  if (it != tail_.end()) *it = d;
  return d;
}

StatsSnapshot CascadeController::stats() const {
  std::lock_guard lock(mu_);
  StatsSnapshot s;
  s.threshold = threshold_;
  s.total_queries = total_queries_;
  s.llm_calls = llm_calls_;
  s.budget_forced = budget_forced_;
  s.decisions_logged = decisions_logged_;
  s.budget_fraction = budget_fraction_;
  s.recent.assign(tail_.begin(), tail_.end());
  return s;
}

DecisionLog::DecisionLog(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open decision log " + path);
}

void DecisionLog::append(const CascadeDecision& d) {
  const std::string line = decision_to_json(d);
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
}

std::string decision_to_json(const CascadeDecision& d) {
  json j = {
      {"seq", d.seq},
      {"qid", d.qid},
      {"score", d.score},
      {"theta", d.theta ? json(*d.theta) : json(nullptr)},
      {"gate", d.gate == GateDecision::kInvoke ? "invoke" : "keep"},
      {"route", to_string(d.route)},
      {"llm_calls", d.llm_calls_so_far},
      {"total_queries", d.total_queries},
  };
  if (d.error) j["error"] = *d.error;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

CascadeDecision decision_from_json(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::runtime_error("malformed decision record");
  try {
    CascadeDecision d;
    d.seq = j.at("seq").get<std::uint64_t>();
    d.qid = j.at("qid").get<std::string>();
    d.score = j.at("score").get<double>();
    if (!j.at("theta").is_null()) d.theta = j.at("theta").get<double>();
    d.gate = j.at("gate").get<std::string>() == "invoke" ? GateDecision::kInvoke
                                                         : GateDecision::kKeep;
    auto route = parse_route(j.at("route").get<std::string>());
    if (!route) throw std::runtime_error("unknown route");
    d.route = *route;
    d.llm_calls_so_far = j.at("llm_calls").get<std::uint64_t>();
    d.total_queries = j.at("total_queries").get<std::uint64_t>();
    if (auto e = j.find("error"); e != j.end() && e->is_string()) d.error = e->get<std::string>();
    return d;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed decision record: ") + e.what());
  }
}

std::vector<CascadeDecision> read_decision_log(std::istream& in) {
  std::vector<CascadeDecision> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(decision_from_json(line));
  }
  return out;
}

std::vector<CascadeDecision> replay_decisions(std::span<const CascadeDecision> recorded,
                                              std::uint32_t warmup,
                                              std::optional<double> budget_fraction) {
  std::vector<CascadeDecision> ordered(recorded.begin(), recorded.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const CascadeDecision& a, const CascadeDecision& b) { return a.seq < b.seq; });

  CascadeController ctl(warmup, budget_fraction, 0);
  std::vector<CascadeDecision> out;
  out.reserve(ordered.size());
  for (const auto& r : ordered) {
    CascadeDecision d = ctl.admit(r.score, r.qid);
    if (r.error && d.route == Route::kLlm) d = ctl.release_llm_call(d, *r.error);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace cascade
