#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cascade/backends.hpp"
#include "cascade/config.hpp"
#include "cascade/controller.hpp"

namespace cascade {

struct RerankResult {
  std::vector<std::size_t> order;  // chunk ids, most relevant first
  std::vector<double> g_values;    // indexed by input chunk id
};

struct AnswerResult {
  std::string answer;
  CascadeDecision decision;
  std::vector<std::size_t> chunk_order;  // chunks used in the prompt, in prompt order
};

// Answer prompt with the chunks in the given order. Without chunks it is just
// the question.
std::string build_answer_prompt(const std::string& query, const std::vector<std::string>& chunks,
                                const std::vector<std::size_t>& order);

// Answer text of a generate-mode trace: answer_text when present, else the
// concatenated token texts.
std::string trace_answer(const GenerationTrace& trace);

// The live cascade. Thread-safe: handle_query may be called concurrently; only
// the controller's admit step is serialized.
class Gateway {
 public:
  Gateway(GatewayConfig cfg, std::shared_ptr<SlmBackend> slm, std::shared_ptr<LlmBackend> llm);

  // Scores every chunk by how confidently the SLM regenerates `query` from it.
  // Chunks are scored in parallel.
  RerankResult rerank_chunks(const std::string& query, const std::vector<std::string>& chunks);

  // 1. rerank chunks (when enabled) and keep the top chunks_top_n
  // 2. SLM generate-mode trace
  // 3. attenh score
  // 4-6. admit: threshold gate, budget guard, observe
  // 5. LLM call with the same prompt on an llm route; on failure fall back to
  //    the SLM answer, release the reservation and annotate the decision
  // 7. append to the decision log
  AnswerResult handle_query(const std::string& query, const std::vector<std::string>& chunks = {},
                            std::string qid = {});

  StatsSnapshot stats() const { return controller_.stats(); }
  const GatewayConfig& config() const { return cfg_; }

 private:
  GatewayConfig cfg_;
  std::shared_ptr<SlmBackend> slm_;
  std::shared_ptr<LlmBackend> llm_;
  CascadeController controller_;
  std::unique_ptr<DecisionLog> log_;
};

}  // namespace cascade
