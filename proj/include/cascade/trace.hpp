#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

// Malformed wire record. `line` is 1-based; 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A well-formed record (or trace) that breaks a data-model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TraceMode { kGenerate, kTeacherForced };
enum class Reduction { kMax, kAvg, kLastToken };

std::string_view to_string(TraceMode mode);
std::string_view to_string(Reduction reduction);
std::optional<TraceMode> parse_trace_mode(std::string_view s);
std::optional<Reduction> parse_reduction(std::string_view s);

// One scored token. All probabilities are linear-space; att_recv is the reduced
// attention the token receives from later positions, not yet exponentiated.
struct TokenRecord {
  std::uint32_t index = 0;
  std::string token_text;
  double p_max = 1.0;
  double p_real = 1.0;
  double att_recv = 0.0;
  std::optional<double> lse_logits;
  std::optional<double> p_min;

  bool operator==(const TokenRecord&) const = default;
};

struct GenerationTrace {
  TraceMode mode = TraceMode::kGenerate;
  Reduction reduction = Reduction::kMax;
  std::string model_id;
  std::vector<TokenRecord> tokens;
  std::optional<std::string> answer_text;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  bool has_lse() const { return !tokens.empty() && tokens.front().lse_logits.has_value(); }
  bool has_p_min() const { return !tokens.empty() && tokens.front().p_min.has_value(); }

  bool operator==(const GenerationTrace&) const = default;
};

// Checks a single record against the per-token invariants. `position` is the
// record's slot in the trace, used to check index contiguity.
void validate_token(const TokenRecord& rec, std::size_t position);

// Full trace check: per-token bounds, contiguous indices, all-or-nothing
// optional fields, and att_recv == 0 on the final token. Throws ValidationError.
void validate_trace(const GenerationTrace& trace);

// Incremental parser for the newline-delimited record stream. Feed complete
// lines (without the terminating newline) as they arrive; each token record is
// validated on arrival so a bad stream fails at the offending line.
class TraceStreamParser {
 public:
  void feed_line(std::string_view line);
  // Runs whole-trace validation and hands over the result. The parser is left empty.
  GenerationTrace finish();

  bool has_meta() const { return has_meta_; }
  bool ended() const { return ended_; }
  std::size_t lines_seen() const { return line_no_; }

 private:
  GenerationTrace trace_;
  std::size_t line_no_ = 0;
  bool has_meta_ = false;
  bool ended_ = false;
};

GenerationTrace parse_trace_stream(std::istream& in);
GenerationTrace parse_trace_stream(std::string_view raw);

void serialize_trace(const GenerationTrace& trace, std::ostream& out);
std::string serialize_trace(const GenerationTrace& trace);

// Decimal form with 17 significant digits; parses back bit-exact.
std::string format_double(double v);

}  // namespace cascade
