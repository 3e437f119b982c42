// cascade: command-line front end for scoring, reranking, evaluation, replay
// and the gateway service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cascade/backends.hpp"
#include "cascade/config.hpp"
#include "cascade/controller.hpp"
#include "cascade/evalkit.hpp"
#include "cascade/gateway.hpp"
#include "cascade/scorer.hpp"
#include "cascade/server.hpp"
#include "cascade/trace.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

cascade::GatewayServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// A JSON array of strings, or one chunk per non-empty line.
std::vector<std::string> read_chunks(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<std::string> chunks;
  if (first != std::string::npos && text[first] == '[') {
    for (const auto& c : json::parse(text)) chunks.push_back(c.get<std::string>());
    return chunks;
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) chunks.push_back(line);
  }
  return chunks;
}

int run_score(const std::string& trace_path, const std::string& method_name, int window_k) {
  auto method = cascade::parse_score_method(method_name);
  if (!method) throw CLI::ValidationError("--method", "unknown method " + method_name);
  cascade::ScoreConfig cfg;
  cfg.window_k = window_k;
  const auto trace = cascade::parse_trace_stream(read_file(trace_path));
  const auto s = cascade::score_trace(trace, *method, cfg);
  json out = {{"method", cascade::to_string(s.method)}, {"value", s.value}};
  if (s.window_scores) out["window_scores"] = *s.window_scores;
  std::cout << out.dump() << "\n";
  return 0;
}

int run_rerank(const std::string& query, const std::string& chunks_path,
               cascade::GatewayConfig cfg) {
  const auto chunks = read_chunks(chunks_path);
  if (chunks.empty()) throw std::runtime_error("no chunks in " + chunks_path);
  if (cfg.slm_url.empty()) throw std::runtime_error("rerank needs --slm-url (or slm_url in config)");
  if (cfg.llm.url.empty()) cfg.llm.url = "http://unused.invalid";
  auto slm = std::make_shared<cascade::HttpSlmBackend>(cfg.slm_url, cfg.backend_timeout_s);
  auto llm = std::make_shared<cascade::HttpLlmBackend>(cfg.llm, cfg.backend_timeout_s);
  cascade::Gateway gw(cfg, slm, llm);
  const auto r = gw.rerank_chunks(query, chunks);
  std::cout << json{{"order", r.order}, {"g_values", r.g_values}}.dump() << "\n";
  return 0;
}

int run_eval(const std::string& records_path, const std::string& out_path,
             const std::vector<std::string>& methods, double tau) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open " + records_path);
  const auto rows = cascade::eval::read_records(in);
  const auto report = cascade::eval::evaluate_rows(rows, methods, tau);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    cascade::eval::write_csv(report, out);
  }
  cascade::eval::write_table(report, std::cout);
  return 0;
}

int run_replay(const std::string& log_path, std::uint32_t warmup, std::optional<double> budget) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open " + log_path);
  auto recorded = cascade::read_decision_log(in);
  std::sort(recorded.begin(), recorded.end(),
            [](const auto& a, const auto& b) { return a.seq < b.seq; });
  const auto replayed = cascade::replay_decisions(recorded, warmup, budget);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    if (!(recorded[i] == replayed[i])) {
      ++mismatches;
      std::cerr << "mismatch at seq " << recorded[i].seq << ": recorded "
                << cascade::decision_to_json(recorded[i]) << "\n  replayed "
                << cascade::decision_to_json(replayed[i]) << "\n";
    }
  }
  std::cout << recorded.size() << " decisions replayed, " << mismatches << " mismatches\n";
  return mismatches == 0 ? 0 : 1;
}

int run_serve(cascade::GatewayConfig cfg) {
  cfg.validate();
  auto slm = std::make_shared<cascade::HttpSlmBackend>(cfg.slm_url, cfg.backend_timeout_s);
  auto llm = std::make_shared<cascade::HttpLlmBackend>(cfg.llm, cfg.backend_timeout_s);
  cascade::Gateway gw(cfg, slm, llm);
  cascade::GatewayServer server(gw);
  const int port = server.bind(cfg.listen_host, cfg.listen_port);
  if (port < 0) throw std::runtime_error("cannot bind " + cfg.listen_host);
  std::cerr << "cascade gateway listening on " << cfg.listen_host << ":" << port << "\n";
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small/large model cascade gateway and detector evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string slm_url;
  std::string llm_url;
  auto load_config = [&] {
    cascade::GatewayConfig cfg;
    if (!config_path.empty()) cfg = cascade::load_config_file(config_path, cfg);
    cascade::apply_env(cfg);
    if (!slm_url.empty()) cfg.slm_url = slm_url;
    if (!llm_url.empty()) cfg.llm.url = llm_url;
    return cfg;
  };

  auto* score = app.add_subcommand("score", "Score one trace stream");
  std::string trace_path = "-";
  std::string method = "attenh";
  int window_k = 15;
  score->add_option("--trace", trace_path, "Trace stream file ('-' for stdin)");
  score->add_option("--method", method, "attenh|perplexity|energy|avg_range")
      ->check(CLI::IsMember({"attenh", "perplexity", "energy", "avg_range"}));
  score->add_option("--window-k", window_k, "Tokens per window")->check(CLI::PositiveNumber);

  auto* rerank = app.add_subcommand("rerank", "Order chunks by query-regeneration uncertainty");
  std::string query;
  std::string chunks_path;
  rerank->add_option("--query", query)->required();
  rerank->add_option("--chunks", chunks_path, "JSON list or one chunk per line")->required();
  rerank->add_option("--config", config_path);
  rerank->add_option("--slm-url", slm_url);

  auto* eval = app.add_subcommand("eval", "AUROC / ACC report over a records file");
  std::string records_path;
  std::string out_path;
  std::vector<std::string> methods;
  double tau = cascade::eval::kRougeCorrectThreshold;
  eval->add_option("--records", records_path)->required();
  eval->add_option("--out", out_path, "CSV report path");
  eval->add_option("--methods", methods, "Restrict to these score keys")->delimiter(',');
  eval->add_option("--tau", tau, "Rouge-L correctness threshold");

  auto* replay = app.add_subcommand("replay", "Re-run a decision log and check it reproduces");
  std::string log_path;
  std::uint32_t warmup = cascade::kDefaultWarmup;
  std::optional<double> budget;
  replay->add_option("--log", log_path)->required();
  replay->add_option("--warmup", warmup)->check(CLI::PositiveNumber);
  replay->add_option("--budget", budget, "Budget fraction in (0, 1]");

  auto* serve = app.add_subcommand("serve", "Run the gateway HTTP service");
  serve->add_option("--config", config_path);
  serve->add_option("--slm-url", slm_url);
  serve->add_option("--llm-url", llm_url);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score) return run_score(trace_path, method, window_k);
    if (*rerank) return run_rerank(query, chunks_path, load_config());
    if (*eval) return run_eval(records_path, out_path, methods, tau);
    if (*replay) return run_replay(log_path, warmup, budget);
    if (*serve) return run_serve(load_config());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
