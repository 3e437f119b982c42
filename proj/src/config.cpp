#include "cascade/config.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cascade {

namespace {

constexpr std::array<std::string_view, 16> kKeys = {
    "window_k",       "warmup",        "budget_fraction", "slm_url",
    "llm_url",        "llm_path",      "llm_model",       "llm_api_key_env",
    "rerank_enabled", "chunks_top_n",  "reverse_prompt",  "decision_log",
    "log_tail",       "listen_host",   "listen_port",     "timeout_s",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got \"" + std::string(v) + "\"");
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got \"" + std::string(v) + "\"");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got \"" + std::string(v) + "\"");
}

std::string unquote(std::string_view v) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') return std::string(v);
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      switch (v[++i]) {
        case 'n':
          out.push_back('\n');
          break;
        case 't':
          out.push_back('\t');
          break;
        default:
          out.push_back(v[i]);
      }
    } else {
      out.push_back(v[i]);
    }
  }
  return out;
}

}  // namespace

void GatewayConfig::validate() const {
  score_config.validate();
  if (warmup < 1) throw ConfigError("warmup must be >= 1");
  if (budget_fraction && !(*budget_fraction > 0.0 && *budget_fraction <= 1.0)) {
    throw ConfigError("budget_fraction must be in (0, 1]");
  }
  if (slm_url.empty()) throw ConfigError("slm_url is required");
  if (llm.url.empty()) throw ConfigError("llm_url is required");
  if (chunks_top_n < 1) throw ConfigError("chunks_top_n must be >= 1");
  if (backend_timeout_s < 1) throw ConfigError("timeout_s must be >= 1");
  if (listen_port < 0 || listen_port > 65535) throw ConfigError("listen_port out of range");
}

void apply_setting(GatewayConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = unquote(trim(raw));
  if (key == "window_k") {
    cfg.score_config.window_k = to_int<int>(key, value);
  } else if (key == "warmup") {
    cfg.warmup = to_int<std::uint32_t>(key, value);
  } else if (key == "budget_fraction") {
    if (value.empty() || value == "none") {
      cfg.budget_fraction.reset();
    } else {
      cfg.budget_fraction = to_double(key, value);
    }
  } else if (key == "slm_url") {
    cfg.slm_url = value;
  } else if (key == "llm_url") {
    cfg.llm.url = value;
  } else if (key == "llm_path") {
    cfg.llm.path = value;
  } else if (key == "llm_model") {
    cfg.llm.model = value;
  } else if (key == "llm_api_key_env") {
    cfg.llm.api_key_env = value;
  } else if (key == "rerank_enabled") {
    cfg.rerank_enabled = to_bool(key, value);
  } else if (key == "chunks_top_n") {
    cfg.chunks_top_n = to_int<std::size_t>(key, value);
  } else if (key == "reverse_prompt") {
    cfg.reverse_prompt = value;
  } else if (key == "decision_log") {
    cfg.decision_log = value;
  } else if (key == "log_tail") {
    cfg.log_tail = to_int<std::size_t>(key, value);
  } else if (key == "listen_host") {
    cfg.listen_host = value;
  } else if (key == "listen_port") {
    cfg.listen_port = to_int<int>(key, value);
  } else if (key == "timeout_s") {
    cfg.backend_timeout_s = to_int<int>(key, value);
  } else {
    throw ConfigError("unknown config key \"" + std::string(key) + "\"");
  }
}

GatewayConfig parse_config(std::string_view text, GatewayConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(base, trim(l.substr(0, eq)), l.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

GatewayConfig load_config_file(const std::string& path, GatewayConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

void apply_env(GatewayConfig& cfg, const EnvLookup& lookup) {
  for (std::string_view key : kKeys) {
    std::string var = "CASCADE_";
    for (char c : key) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (const char* v = lookup(var.c_str())) apply_setting(cfg, key, v);
  }
}

void apply_env(GatewayConfig& cfg) {
  apply_env(cfg, [](const char* name) -> const char* { return std::getenv(name); });
}

}  // namespace cascade
