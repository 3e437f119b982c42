#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "cascade/config.hpp"
#include "cascade/trace.hpp"

namespace cascade {

// A backend could not be reached or answered with a non-success status.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace-emitting small model. Implementations must be safe to call concurrently.
class SlmBackend {
 public:
  virtual ~SlmBackend() = default;
  virtual GenerationTrace generate(const std::string& prompt) = 0;
  virtual GenerationTrace score_forced(const std::string& prompt,
                                       const std::string& forced_text) = 0;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct SplitUrl {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // no trailing slash; may be empty
};

SplitUrl split_url(const std::string& url);

// Talks to the adapter sidecar: POST /generate and POST /score_forced, each
// answering with a trace record stream that is parsed as it arrives.
class HttpSlmBackend : public SlmBackend {
 public:
  HttpSlmBackend(std::string url, int timeout_s);
  GenerationTrace generate(const std::string& prompt) override;
  GenerationTrace score_forced(const std::string& prompt, const std::string& forced_text) override;

 private:
  GenerationTrace post_for_trace(const std::string& path, const std::string& body);

  SplitUrl url_;
  int timeout_s_;
};

class HttpLlmBackend : public LlmBackend {
 public:
  HttpLlmBackend(LlmBackendConfig cfg, int timeout_s);
  std::string complete(const std::string& prompt) override;

 private:
  LlmBackendConfig cfg_;
  SplitUrl url_;
  int timeout_s_;
};

}  // namespace cascade
