#include "cascade/trace.hpp"

#include <cstring>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "support/synth.hpp"

namespace cascade {
namespace {

constexpr const char* kMeta =
    R"({"type":"meta","mode":"generate","reduction":"max","model_id":"tiny"})";

std::string token_line(int i, double p_max, double p_real, double att) {
  std::ostringstream os;
  os << R"({"type":"token","i":)" << i << R"(,"tok":"t)" << i << R"(","p_max":)" << p_max
     << R"(,"p_real":)" << p_real << R"(,"att_recv":)" << att << "}";
  return os.str();
}

std::string stream_of(std::initializer_list<std::string> lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

TEST(TraceParse, MetaAndThreeTokens) {
  const auto t = parse_trace_stream(stream_of({kMeta, token_line(0, 0.9, 0.9, 0.3),
                                               token_line(1, 0.8, 0.5, 0.2),
                                               token_line(2, 0.7, 0.7, 0.0)}));
  ASSERT_EQ(t.size(), 3u);
  for (std::uint32_t i = 0; i < 3; ++i) EXPECT_EQ(t.tokens[i].index, i);
  EXPECT_EQ(t.mode, TraceMode::kGenerate);
  EXPECT_EQ(t.reduction, Reduction::kMax);
  EXPECT_EQ(t.model_id, "tiny");
  EXPECT_EQ(t.tokens[1].p_real, 0.5);
  EXPECT_FALSE(t.answer_text.has_value());
}

TEST(TraceParse, EndRecordCarriesAnswer) {
  const auto t = parse_trace_stream(
      stream_of({kMeta, token_line(0, 0.9, 0.9, 0.0), R"({"type":"end","answer_text":"Paris"})"}));
  ASSERT_TRUE(t.answer_text.has_value());
  EXPECT_EQ(*t.answer_text, "Paris");
}

TEST(TraceParse, PMaxOutOfRange) {
  try {
    parse_trace_stream(stream_of({kMeta, token_line(0, 1.2, 0.9, 0.0)}));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "p_max out of range at index 0");
  }
}

TEST(TraceParse, EmptyStream) {
  try {
    parse_trace_stream(std::string_view{});
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "missing meta record");
  }
}

TEST(TraceParse, MalformedRecordReportsLine) {
  try {
    parse_trace_stream(stream_of({kMeta, token_line(0, 0.9, 0.9, 0.1), "{not json"}));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(TraceParse, TrailingPartialLineRejected) {
  std::string raw = stream_of({kMeta, token_line(0, 0.9, 0.9, 0.0)});
  raw += R"({"type":"token","i":1)";
  EXPECT_THROW(parse_trace_stream(raw), ParseError);
}

TEST(TraceParse, TokenBeforeMeta) {
  EXPECT_THROW(parse_trace_stream(stream_of({token_line(0, 0.9, 0.9, 0.0)})), ParseError);
}

TEST(TraceParse, RecordAfterEnd) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, R"({"type":"end"})",
                                             token_line(0, 0.9, 0.9, 0.0)})),
               ParseError);
}

TEST(TraceParse, UnknownRecordType) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, R"({"type":"bogus"})"})), ParseError);
}

TEST(TraceParse, NegativeIndexIsParseError) {
  EXPECT_THROW(parse_trace_stream(stream_of(
                   {kMeta, R"({"type":"token","i":-1,"p_max":1,"p_real":1,"att_recv":0})"})),
               ParseError);
}

TEST(TraceValidate, IndexGapRejected) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, token_line(0, 0.9, 0.9, 0.2),
                                             token_line(2, 0.9, 0.9, 0.0)})),
               ValidationError);
}

TEST(TraceValidate, PRealAbovePMax) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, token_line(0, 0.5, 0.6, 0.0)})),
               ValidationError);
}

TEST(TraceValidate, ZeroPRealRejected) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, token_line(0, 0.5, 0.0, 0.0)})),
               ValidationError);
}

TEST(TraceValidate, AttentionOutOfRange) {
  EXPECT_THROW(parse_trace_stream(stream_of({kMeta, token_line(0, 0.5, 0.5, 1.5),
                                             token_line(1, 0.5, 0.5, 0.0)})),
               ValidationError);
}

TEST(TraceValidate, FinalTokenAttentionMustBeZero) {
  try {
    parse_trace_stream(stream_of({kMeta, token_line(0, 0.9, 0.9, 0.3)}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("final token"), std::string::npos);
  }
}

TEST(TraceValidate, OptionalFieldsAllOrNothing) {
  GenerationTrace t;
  t.tokens = {{0, "a", 0.9, 0.9, 0.1, 1.0, std::nullopt}, {1, "b", 0.9, 0.9, 0.0, std::nullopt, std::nullopt}};
  EXPECT_THROW(validate_trace(t), ValidationError);
  t.tokens[1].lse_logits = 2.0;
  EXPECT_NO_THROW(validate_trace(t));
  t.tokens[0].p_min = 0.0;
  EXPECT_THROW(validate_trace(t), ValidationError);
}

TEST(TraceValidate, PMinAbovePMax) {
  GenerationTrace t;
  t.tokens = {{0, "a", 0.4, 0.4, 0.0, std::nullopt, 0.5}};
  EXPECT_THROW(validate_trace(t), ValidationError);
}

TEST(TraceSerialize, OptionalKeysOmitted) {
  GenerationTrace t;
  t.model_id = "m";
  t.tokens = {{0, "x", 0.5, 0.25, 0.0, std::nullopt, std::nullopt}};
  const std::string out = serialize_trace(t);
  EXPECT_EQ(out.find("\"lse\""), std::string::npos);
  EXPECT_EQ(out.find("\"p_min\""), std::string::npos);
  EXPECT_EQ(out.find("answer_text"), std::string::npos);
  EXPECT_EQ(parse_trace_stream(out), t);
}

TEST(TraceSerialize, TinyProbabilitySurvives) {
  GenerationTrace t;
  t.mode = TraceMode::kTeacherForced;
  t.reduction = Reduction::kLastToken;
  t.tokens = {{0, "x", 0.5, 1e-300, 0.0, -3.5, 0.0}};
  const auto back = parse_trace_stream(serialize_trace(t));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(bits(back.tokens[0].p_real), bits(1e-300));
  EXPECT_EQ(back, t);
}

TEST(TraceSerialize, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 - 1e-16)), 1.0 - 1e-16);
}

TEST(TraceRoundTrip, RandomTracesProperty) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 300; ++n) {
    synth::Options opt;
    opt.mode = n % 2 ? TraceMode::kGenerate : TraceMode::kTeacherForced;
    const auto t = synth::random_trace(rng, 1 + rng() % 40, opt);
    ASSERT_NO_THROW(validate_trace(t));
    const auto back = parse_trace_stream(serialize_trace(t));
    ASSERT_EQ(back, t) << serialize_trace(t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      ASSERT_EQ(bits(back.tokens[i].p_real), bits(t.tokens[i].p_real));
      ASSERT_EQ(bits(back.tokens[i].p_max), bits(t.tokens[i].p_max));
    }
  }
}

TEST(TraceStreamParser, IncrementalFeedMatchesBulkParse) {
  std::mt19937_64 rng(11);
  const auto t = synth::random_trace(rng, 25);
  const std::string raw = serialize_trace(t);
  TraceStreamParser parser;
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) parser.feed_line(line);
  EXPECT_TRUE(parser.ended());
  EXPECT_EQ(parser.finish(), t);
}

}  // namespace
}  // namespace cascade
