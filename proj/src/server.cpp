#include "cascade/server.hpp"

#include "httplib.h"
#include "json.hpp"

namespace cascade {

using nlohmann::json;

namespace {

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view kind, const char* what) {
  reply(res, status, json{{"error", kind}, {"message", what}});
}

json decision_json(const CascadeDecision& d) {
  json j = json::parse(decision_to_json(d));
  return j;
}

struct ParsedRequest {
  std::string query;
  std::vector<std::string> chunks;
  std::string qid;
};

ParsedRequest parse_request(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("body must be a JSON object");
  ParsedRequest out;
  auto q = j.find("query");
  if (q == j.end() || !q->is_string() || q->get_ref<const std::string&>().empty()) {
    throw BadRequest("\"query\" must be a non-empty string");
  }
  out.query = q->get<std::string>();
  if (auto c = j.find("chunks"); c != j.end() && !c->is_null()) {
    if (!c->is_array()) throw BadRequest("\"chunks\" must be a list of strings");
    for (const auto& chunk : *c) {
      if (!chunk.is_string()) throw BadRequest("\"chunks\" must be a list of strings");
      out.chunks.push_back(chunk.get<std::string>());
    }
  }
  if (auto id = j.find("qid"); id != j.end() && !id->is_null()) {
    out.qid = id->is_string() ? id->get<std::string>() : id->dump();
  }
  return out;
}

// Maps exceptions from a handler body onto HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const BadRequest& e) {
    reply_error(res, 400, "bad_request", e.what());
  } catch (const std::invalid_argument& e) {
    reply_error(res, 400, "bad_request", e.what());
  } catch (const BackendError& e) {
    reply_error(res, 502, "backend_unavailable", e.what());
  } catch (const ParseError& e) {
    reply_error(res, 502, "invalid_trace", e.what());
  } catch (const ValidationError& e) {
    reply_error(res, 502, "invalid_trace", e.what());
  } catch (const ScoreError& e) {
    reply_error(res, 502, "invalid_trace", e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "internal", e.what());
  }
}

}  // namespace

std::string stats_to_json(const StatsSnapshot& s) {
  json recent = json::array();
  for (const auto& d : s.recent) recent.push_back(decision_json(d));
  const auto mean = s.threshold.mean();
  json j = {
      {"threshold",
       {{"warmup_remaining", s.threshold.warmup_remaining()},
        {"count", s.threshold.count()},
        {"mean", mean ? json(*mean) : json(nullptr)}}},
      {"total_queries", s.total_queries},
      {"llm_calls", s.llm_calls},
      {"budget_forced", s.budget_forced},
      {"budget_fraction", s.budget_fraction ? json(*s.budget_fraction) : json(nullptr)},
      {"decisions_logged", s.decisions_logged},
      {"recent", std::move(recent)},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

struct GatewayServer::Impl {
  explicit Impl(Gateway& g) : gateway(g) {}
  Gateway& gateway;
  httplib::Server server;
};

GatewayServer::GatewayServer(Gateway& gateway) : impl_(std::make_unique<Impl>(gateway)) {
  auto& srv = impl_->server;
  Gateway& gw = gateway;

  srv.Post("/v1/answer", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto in = parse_request(req.body);
      const AnswerResult r = gw.handle_query(in.query, in.chunks, in.qid);
      json body = decision_json(r.decision);
      body["answer"] = r.answer;
      body["chunk_order"] = r.chunk_order;
      reply(res, 200, body);
    });
  });

  srv.Post("/v1/rerank", [&gw](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto in = parse_request(req.body);
      if (in.chunks.empty()) throw BadRequest("\"chunks\" must be non-empty");
      const RerankResult r = gw.rerank_chunks(in.query, in.chunks);
      reply(res, 200, json{{"order", r.order}, {"g_values", r.g_values}});
    });
  });

  srv.Get("/v1/stats", [&gw](const httplib::Request&, httplib::Response& res) {
    res.set_content(stats_to_json(gw.stats()), "application/json");
  });
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool GatewayServer::listen() { return impl_->server.listen_after_bind(); }

void GatewayServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void GatewayServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace cascade
