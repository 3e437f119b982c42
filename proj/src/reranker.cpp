#include "cascade/reranker.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/scorer.hpp"

namespace cascade {

std::string build_reverse_prompt(std::string_view templ, std::string_view chunk) {
  std::string out;
  constexpr std::string_view kSlot = "{chunk}";
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = templ.find(kSlot, pos);
    if (hit == std::string_view::npos) break;
    out.append(templ.substr(pos, hit - pos));
    out.append(chunk);
    pos = hit + kSlot.size();
  }
  out.append(templ.substr(pos));
  return out;
}

ChunkScore chunk_uncertainty(const GenerationTrace& trace, std::size_t chunk_id) {
  if (trace.tokens.empty()) throw ScoreError("cannot score an empty trace");
  if (trace.mode != TraceMode::kTeacherForced) {
    throw ScoreError("chunk uncertainty requires a teacher_forced trace");
  }
  double g = 0.0;
  for (const auto& t : trace.tokens) {
    g += atten_amplify(t.att_recv) * (0.0 - std::log(t.p_real));
  }
  return {chunk_id, g, trace.tokens.size()};
}

std::vector<std::size_t> rerank(std::span<const ChunkScore> scores) {
  std::vector<ChunkScore> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ChunkScore& a, const ChunkScore& b) { return a.g_value < b.g_value; });
  std::vector<std::size_t> order;
  order.reserve(sorted.size());
  for (const auto& s : sorted) order.push_back(s.chunk_id);
  return order;
}

}  // namespace cascade
