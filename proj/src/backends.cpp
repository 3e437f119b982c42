#include "cascade/backends.hpp"

#include <cstdlib>
#include <exception>

#include "httplib.h"
#include "json.hpp"

namespace cascade {

using nlohmann::json;

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) {
    throw BackendError("backend URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.base_path = url.substr(path_start);
  while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  if (out.origin.size() == scheme_end + 3) throw BackendError("backend URL has no host: " + url);
  return out;
}

namespace {

httplib::Client make_client(const SplitUrl& url, int timeout_s) {
  httplib::Client cli(url.origin);
  cli.set_connection_timeout(timeout_s, 0);
  cli.set_read_timeout(timeout_s, 0);
  cli.set_write_timeout(timeout_s, 0);
  return cli;
}

}  // namespace

HttpSlmBackend::HttpSlmBackend(std::string url, int timeout_s)
    : url_(split_url(url)), timeout_s_(timeout_s) {}

GenerationTrace HttpSlmBackend::generate(const std::string& prompt) {
  return post_for_trace("/generate", json{{"prompt", prompt}}.dump());
}

GenerationTrace HttpSlmBackend::score_forced(const std::string& prompt,
                                             const std::string& forced_text) {
  return post_for_trace("/score_forced",
                        json{{"prompt", prompt}, {"forced_text", forced_text}}.dump());
}

GenerationTrace HttpSlmBackend::post_for_trace(const std::string& path, const std::string& body) {
  auto cli = make_client(url_, timeout_s_);

  TraceStreamParser parser;
  std::string pending;  // bytes after the last newline
  std::string error_body;
  int status = 0;
  std::exception_ptr parse_failure;

  httplib::Request req;
  req.method = "POST";
  req.path = url_.base_path + path;
  req.body = body;
  req.set_header("Content-Type", "application/json");
  req.response_handler = [&](const httplib::Response& res) {
    status = res.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
    if (status != 200) {
      error_body.append(data, n);
      return true;
    }
    pending.append(data, n);
    try {
      std::size_t start = 0;
      for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1) {
        parser.feed_line(std::string_view(pending).substr(start, nl - start));
      }
      pending.erase(0, start);
    } catch (...) {
      parse_failure = std::current_exception();
      return false;
    }
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool ok = cli.send(req, res, err);
  if (parse_failure) std::rethrow_exception(parse_failure);
  if (!ok) {
    throw BackendError("SLM backend " + url_.origin + path + " unreachable: " +
                       httplib::to_string(err));
  }
  if (status != 200) {
    throw BackendError("SLM backend returned HTTP " + std::to_string(status) + ": " +
                       error_body.substr(0, 200));
  }
  if (!pending.empty()) {
    throw ParseError("truncated record without trailing newline", parser.lines_seen() + 1);
  }
  return parser.finish();
}

HttpLlmBackend::HttpLlmBackend(LlmBackendConfig cfg, int timeout_s)
    : cfg_(std::move(cfg)), url_(split_url(cfg_.url)), timeout_s_(timeout_s) {}

std::string HttpLlmBackend::complete(const std::string& prompt) {
  auto cli = make_client(url_, timeout_s_);
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  json body = {
      {"model", cfg_.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
  };
  auto res = cli.Post(url_.base_path + cfg_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError("LLM backend " + url_.origin + " unreachable: " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("LLM backend returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 200));
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw BackendError("LLM backend returned non-JSON body");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw BackendError("LLM backend reply lacks choices[0].message.content");
  }
}

}  // namespace cascade
