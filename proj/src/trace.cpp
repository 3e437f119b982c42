#include "cascade/trace.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace cascade {

using nlohmann::json;

std::string_view to_string(TraceMode mode) {
  switch (mode) {
    case TraceMode::kGenerate:
      return "generate";
    case TraceMode::kTeacherForced:
      return "teacher_forced";
  }
  return "generate";
}

std::string_view to_string(Reduction reduction) {
  switch (reduction) {
    case Reduction::kMax:
      return "max";
    case Reduction::kAvg:
      return "avg";
    case Reduction::kLastToken:
      return "last_token";
  }
  return "max";
}

std::optional<TraceMode> parse_trace_mode(std::string_view s) {
  if (s == "generate") return TraceMode::kGenerate;
  if (s == "teacher_forced") return TraceMode::kTeacherForced;
  return std::nullopt;
}

std::optional<Reduction> parse_reduction(std::string_view s) {
  if (s == "max") return Reduction::kMax;
  if (s == "avg") return Reduction::kAvg;
  if (s == "last_token") return Reduction::kLastToken;
  return std::nullopt;
}

namespace {

[[noreturn]] void invalid(std::string_view field, std::string_view what, std::uint32_t index) {
  throw ValidationError(std::string(field) + " " + std::string(what) + " at index " +
                        std::to_string(index));
}

// Negated comparisons so NaN fails every bound.
bool in_open_closed_unit(double v) { return v > 0.0 && v <= 1.0; }
bool in_closed_unit(double v) { return v >= 0.0 && v <= 1.0; }

double number_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_number()) throw ParseError(std::string("field \"") + key + "\" is not a number", line);
  return it->get<double>();
}

std::optional<double> optional_number_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("field \"") + key + "\" is not a number", line);
  return it->get<double>();
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_string()) throw ParseError(std::string("field \"") + key + "\" is not a string", line);
  return it->get<std::string>();
}

std::string quoted(const std::string& s) {
  return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void validate_token(const TokenRecord& rec, std::size_t position) {
  if (rec.index != position) {
    throw ValidationError("index " + std::to_string(rec.index) + " out of sequence, expected " +
                          std::to_string(position));
  }
  if (!in_open_closed_unit(rec.p_max)) invalid("p_max", "out of range", rec.index);
  if (!in_open_closed_unit(rec.p_real)) invalid("p_real", "out of range", rec.index);
  if (rec.p_real > rec.p_max) invalid("p_real", "exceeds p_max", rec.index);
  if (!in_closed_unit(rec.att_recv)) invalid("att_recv", "out of range", rec.index);
  if (rec.p_min) {
    if (!in_closed_unit(*rec.p_min)) invalid("p_min", "out of range", rec.index);
    if (*rec.p_min > rec.p_max) invalid("p_min", "exceeds p_max", rec.index);
  }
  if (rec.lse_logits && !std::isfinite(*rec.lse_logits)) invalid("lse", "not finite", rec.index);
}

void validate_trace(const GenerationTrace& trace) {
  const auto& toks = trace.tokens;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    validate_token(toks[k], k);
    if (toks[k].lse_logits.has_value() != toks.front().lse_logits.has_value()) {
      invalid("lse", "present on only part of the trace", toks[k].index);
    }
    if (toks[k].p_min.has_value() != toks.front().p_min.has_value()) {
      invalid("p_min", "present on only part of the trace", toks[k].index);
    }
  }
  if (!toks.empty() && toks.back().att_recv != 0.0) {
    invalid("att_recv", "must be 0 on the final token", toks.back().index);
  }
}

void TraceStreamParser::feed_line(std::string_view line) {
  ++line_no_;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find_first_not_of(" \t") == std::string_view::npos) return;

  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw ParseError("malformed JSON record", line_no_);
  if (!obj.is_object()) throw ParseError("record is not an object", line_no_);
  if (ended_) throw ParseError("record after end record", line_no_);

  const std::string type = string_field(obj, "type", line_no_);
  if (type == "meta") {
    if (has_meta_) throw ParseError("duplicate meta record", line_no_);
    auto mode = parse_trace_mode(string_field(obj, "mode", line_no_));
    if (!mode) throw ParseError("unknown mode", line_no_);
    auto reduction = parse_reduction(string_field(obj, "reduction", line_no_));
    if (!reduction) throw ParseError("unknown reduction", line_no_);
    trace_.mode = *mode;
    trace_.reduction = *reduction;
    trace_.model_id = string_field(obj, "model_id", line_no_);
    has_meta_ = true;
    return;
  }
  if (!has_meta_) throw ParseError("missing meta record", line_no_);

  if (type == "token") {
    TokenRecord rec;
    auto idx = obj.find("i");
    if (idx == obj.end()) throw ParseError("missing field \"i\"", line_no_);
    if (!idx->is_number_unsigned() || idx->get<std::uint64_t>() > UINT32_MAX) {
      throw ParseError("field \"i\" is not a non-negative integer", line_no_);
    }
    rec.index = idx->get<std::uint32_t>();
    if (auto tok = obj.find("tok"); tok != obj.end()) {
      if (!tok->is_string()) throw ParseError("field \"tok\" is not a string", line_no_);
      rec.token_text = tok->get<std::string>();
    }
    rec.p_max = number_field(obj, "p_max", line_no_);
    rec.p_real = number_field(obj, "p_real", line_no_);
    rec.att_recv = number_field(obj, "att_recv", line_no_);
    rec.lse_logits = optional_number_field(obj, "lse", line_no_);
    rec.p_min = optional_number_field(obj, "p_min", line_no_);

    validate_token(rec, trace_.tokens.size());
    trace_.tokens.push_back(std::move(rec));
    return;
  }
  if (type == "end") {
    if (auto a = obj.find("answer_text"); a != obj.end() && !a->is_null()) {
      if (!a->is_string()) throw ParseError("field \"answer_text\" is not a string", line_no_);
      trace_.answer_text = a->get<std::string>();
    }
    ended_ = true;
    return;
  }
  throw ParseError("unknown record type \"" + type + "\"", line_no_);
}

GenerationTrace TraceStreamParser::finish() {
  if (!has_meta_) throw ParseError("missing meta record", 0);
  validate_trace(trace_);
  GenerationTrace out = std::move(trace_);
  *this = TraceStreamParser{};
  return out;
}

GenerationTrace parse_trace_stream(std::istream& in) {
  TraceStreamParser parser;
  std::string line;
  while (std::getline(in, line)) {
    // getline hitting EOF before a newline means the writer stopped mid-record.
    if (in.eof() && !line.empty()) {
      throw ParseError("truncated record without trailing newline", parser.lines_seen() + 1);
    }
    parser.feed_line(line);
  }
  return parser.finish();
}

GenerationTrace parse_trace_stream(std::string_view raw) {
  std::istringstream in{std::string(raw)};
  return parse_trace_stream(in);
}

void serialize_trace(const GenerationTrace& trace, std::ostream& out) {
  out << R"({"type":"meta","mode":")" << to_string(trace.mode) << R"(","reduction":")"
      << to_string(trace.reduction) << R"(","model_id":)" << quoted(trace.model_id) << "}\n";
  for (const auto& t : trace.tokens) {
    out << R"({"type":"token","i":)" << t.index << R"(,"tok":)" << quoted(t.token_text)
        << R"(,"p_max":)" << format_double(t.p_max) << R"(,"p_real":)" << format_double(t.p_real)
        << R"(,"att_recv":)" << format_double(t.att_recv);
    if (t.lse_logits) out << R"(,"lse":)" << format_double(*t.lse_logits);
    if (t.p_min) out << R"(,"p_min":)" << format_double(*t.p_min);
    out << "}\n";
  }
  out << R"({"type":"end")";
  if (trace.answer_text) out << R"(,"answer_text":)" << quoted(*trace.answer_text);
  out << "}\n";
}

std::string serialize_trace(const GenerationTrace& trace) {
  std::ostringstream out;
  serialize_trace(trace, out);
  return out.str();
}

}  // namespace cascade
