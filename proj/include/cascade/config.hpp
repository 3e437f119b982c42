#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cascade/reranker.hpp"
#include "cascade/scorer.hpp"
#include "cascade/threshold.hpp"

namespace cascade {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chat-completions-style endpoint. The API key is never stored in config; only
// the name of the environment variable holding it.
struct LlmBackendConfig {
  std::string url;  // scheme://host[:port][/base]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "CASCADE_LLM_API_KEY";
};

struct GatewayConfig {
  ScoreConfig score_config;
  std::uint32_t warmup = kDefaultWarmup;
  std::optional<double> budget_fraction;
  std::string slm_url;
  LlmBackendConfig llm;
  bool rerank_enabled = true;
  std::size_t chunks_top_n = 10;
  std::string reverse_prompt{kDefaultReversePrompt};

  std::string decision_log;  // empty disables persistence
  std::size_t log_tail = 100;
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  int backend_timeout_s = 120;

  void validate() const;
};

// Sets one key from its textual value. Keys are the documented config names
// (window_k, warmup, budget_fraction, slm_url, llm_url, ...).
void apply_setting(GatewayConfig& cfg, std::string_view key, std::string_view value);

// `key = value` lines; `#` starts a comment; blank lines ignored. Values may be
// double-quoted, in which case \n, \t, \" and \\ are unescaped.
GatewayConfig parse_config(std::string_view text, GatewayConfig base = {});
GatewayConfig load_config_file(const std::string& path, GatewayConfig base = {});

using EnvLookup = std::function<const char*(const char*)>;

// Overrides every key whose CASCADE_<UPPERCASE_KEY> variable is set.
void apply_env(GatewayConfig& cfg, const EnvLookup& lookup);
void apply_env(GatewayConfig& cfg);

}  // namespace cascade
