#pragma once

#include <memory>
#include <string>

#include "cascade/gateway.hpp"

namespace cascade {

std::string stats_to_json(const StatsSnapshot& s);

// HTTP front end for a Gateway:
//   POST /v1/answer  {"query", "chunks"?, "qid"?}
//   POST /v1/rerank  {"query", "chunks"}
//   GET  /v1/stats
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cascade
