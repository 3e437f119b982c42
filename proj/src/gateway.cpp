#include "cascade/gateway.hpp"

#include <future>
#include <numeric>

#include "cascade/reranker.hpp"
#include "cascade/scorer.hpp"

namespace cascade {

std::string build_answer_prompt(const std::string& query, const std::vector<std::string>& chunks,
                                const std::vector<std::size_t>& order) {
  std::string prompt;
  if (!order.empty()) {
    prompt += "Answer the question using the passages below.\n\n";
    std::size_t n = 0;
    for (std::size_t id : order) {
      prompt += "Passage " + std::to_string(++n) + ": " + chunks.at(id) + "\n";
    }
    prompt += "\n";
  }
  prompt += "Question: " + query + "\nAnswer:";
  return prompt;
}

std::string trace_answer(const GenerationTrace& trace) {
  if (trace.answer_text) return *trace.answer_text;
  std::string out;
  for (const auto& t : trace.tokens) out += t.token_text;
  return out;
}

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<SlmBackend> slm,
                 std::shared_ptr<LlmBackend> llm)
    : cfg_(std::move(cfg)),
      slm_(std::move(slm)),
      llm_(std::move(llm)),
      controller_(cfg_.warmup, cfg_.budget_fraction, cfg_.log_tail) {
  cfg_.score_config.validate();
  if (!slm_ || !llm_) throw ConfigError("gateway needs both an SLM and an LLM backend");
  if (!cfg_.decision_log.empty()) log_ = std::make_unique<DecisionLog>(cfg_.decision_log);
}

RerankResult Gateway::rerank_chunks(const std::string& query,
                                    const std::vector<std::string>& chunks) {
  if (chunks.empty()) throw std::invalid_argument("rerank needs at least one chunk");
  std::vector<std::future<GenerationTrace>> pending;
  pending.reserve(chunks.size());
  for (const auto& chunk : chunks) {
    pending.push_back(std::async(std::launch::async, [this, &query, &chunk] {
      return slm_->score_forced(build_reverse_prompt(cfg_.reverse_prompt, chunk), query);
    }));
  }

  // get() every future before rethrowing so no task outlives the references it holds.
  std::vector<ChunkScore> scores;
  std::exception_ptr first_error;
  for (std::size_t id = 0; id < pending.size(); ++id) {
    try {
      scores.push_back(chunk_uncertainty(pending[id].get(), id));
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  RerankResult out;
  out.order = rerank(scores);
  for (const auto& s : scores) out.g_values.push_back(s.g_value);
  return out;
}

AnswerResult Gateway::handle_query(const std::string& query,
                                   const std::vector<std::string>& chunks, std::string qid) {
  AnswerResult out;
  if (!chunks.empty()) {
    if (cfg_.rerank_enabled) {
      out.chunk_order = rerank_chunks(query, chunks).order;
    } else {
      out.chunk_order.resize(chunks.size());
      std::iota(out.chunk_order.begin(), out.chunk_order.end(), 0);
    }
    if (out.chunk_order.size() > cfg_.chunks_top_n) out.chunk_order.resize(cfg_.chunks_top_n);
  }
  const std::string prompt = build_answer_prompt(query, chunks, out.chunk_order);

  // SLM failures propagate: there is no silent LLM fallback.
  const GenerationTrace trace = slm_->generate(prompt);
  const double score = attenh_score(trace, cfg_.score_config).value;

  out.decision = controller_.admit(score, std::move(qid));
  out.answer = trace_answer(trace);
  if (out.decision.route == Route::kLlm) {
    try {
      out.answer = llm_->complete(prompt);
    } catch (const std::exception& e) {
      out.decision = controller_.release_llm_call(out.decision, std::string("llm_error: ") + e.what());
    }
  }

  if (log_) log_->append(out.decision);
  return out;
}

}  // namespace cascade
