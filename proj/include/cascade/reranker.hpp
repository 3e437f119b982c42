#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/trace.hpp"

namespace cascade {

struct ChunkScore {
  std::size_t chunk_id = 0;  // position in the retrieval order
  double g_value = 0.0;      // lower means more relevant
  std::size_t trace_len = 0;
};

// Prompt used to regenerate the query from a chunk. `{chunk}` is substituted;
// the query itself is sent separately as the forced continuation.
inline constexpr std::string_view kDefaultReversePrompt =
    "Passage: {chunk}\nWrite a question this passage answers:\n";

std::string build_reverse_prompt(std::string_view templ, std::string_view chunk);

// Attention-weighted negative log-likelihood of the forced query tokens:
// sum of exp(att_recv) * -ln(p_real). Requires a non-empty teacher-forced trace.
ChunkScore chunk_uncertainty(const GenerationTrace& trace, std::size_t chunk_id = 0);

// Chunk ids by ascending g_value; equal scores keep their input order.
std::vector<std::size_t> rerank(std::span<const ChunkScore> scores);

}  // namespace cascade
