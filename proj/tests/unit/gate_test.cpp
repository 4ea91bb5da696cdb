#include "vcap/error.hpp"
#include "vcap/gate.hpp"
#include "vcap/mock.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace vcap {
namespace {

std::string image_reply(int reasoning = 3, const std::string& issues = "[]") {
  return R"({"factual_accuracy": 3, "completeness": 3, "reasoning_rigor": )" +
         std::to_string(reasoning) +
         R"(, "core_intent_capture": 3, "professionalism_expression": 3, "overall_score": 3, )"
         R"("issues": )" + issues + R"(, "explanation": "ok"})";
}

TEST(JudgeParse, AllThreesKeep) {
  QualityScore s = parse_judge_reply(image_reply(), MediaKind::Image, "i1");
  EXPECT_EQ(s.verdict, Verdict::Keep);
  ASSERT_EQ(s.dims.size(), 5u);
  EXPECT_EQ(s.dims[2].first, "reasoning_rigor");
  EXPECT_EQ(s.explanation, "ok");
}

TEST(JudgeParse, AnyTwoDrops) {
  QualityScore s =
      parse_judge_reply(image_reply(2, R"(["Reasoning Fallacy"])"), MediaKind::Image, "i1");
  EXPECT_EQ(s.verdict, Verdict::Drop);
  EXPECT_EQ(s.issues, (std::vector<std::string>{"Reasoning Fallacy"}));
}

TEST(JudgeParse, FencedReplyWithCommentary) {
  std::string reply = "Here is my assessment.\n```json\n" + image_reply() + "\n```\nThanks!";
  EXPECT_EQ(parse_judge_reply(reply, MediaKind::Image, "i1").verdict, Verdict::Keep);
}

TEST(JudgeParse, BracesInsideStringsDoNotConfuseExtraction) {
  std::string reply = R"(note {not json} then )" + image_reply();
  auto j = extract_json_object(reply);
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["explanation"], "ok");
  auto k = extract_json_object(R"({"explanation": "a } b \" { c", "x": 1})");
  ASSERT_TRUE(k);
  EXPECT_EQ((*k)["x"], 1);
}

TEST(JudgeParse, SchemaViolationsThrow) {
  std::string rating4 = image_reply();
  rating4.replace(rating4.find("\"completeness\": 3"), 17, "\"completeness\": 4");
  std::string renamed = image_reply();
  renamed.replace(renamed.find("completeness"), 12, "complete");
  std::string string_rating = image_reply();
  string_rating.replace(string_rating.find("\"completeness\": 3"), 17, "\"completeness\": \"3\"");
  for (const std::string& bad :
       {rating4, renamed, string_rating, image_reply(3, R"(["Made Up"])"), std::string("no json"),
        std::string("[1, 2, 3]")}) {
    EXPECT_THROW(parse_judge_reply(bad, MediaKind::Image, "i1"), Error) << bad;
  }
  // Image fields do not satisfy the video rubric.
  EXPECT_THROW(parse_judge_reply(image_reply(), MediaKind::Video, "v1"), Error);
}

TEST(JudgeParse, ScoreRoundTrips) {
  Judgement j{"i1", "ImageQualityEval",
              parse_judge_reply(image_reply(2, R"(["OCR Error"])"), MediaKind::Image, "i1"),
              "", 1, {image_reply(2, R"(["OCR Error"])")}, {10, 5, false}, Money::parse("0.01")};
  EXPECT_EQ(judgement_from_json(to_json(j)), j);
  Judgement q{"i2", "ImageQualityEval", std::nullopt, "unparseable", 2, {"a", "b"}, {}, {}};
  EXPECT_EQ(judgement_from_json(to_json(q)), q);
}

struct JudgeFixture : ::testing::Test {
  AgentRegistry registry = AgentRegistry::load();
  std::shared_ptr<MockTransport> mock;
  std::unique_ptr<ChatClient> client;
  void use(const Json& fixture) {
    mock = std::make_shared<MockTransport>(fixture);
    client = std::make_unique<ChatClient>(test::profile_set({test::mock_profile()}), mock,
                                          RetryPolicy{}, test::no_sleep());
  }
};

TEST_F(JudgeFixture, ReasksOnceThenQuarantines) {
  use(Json{{"items", {{{"agent", "ImageQualityEval"}, {"item", "i1"},
                       {"replies", {"garbage", image_reply()}}},
                      {{"agent", "ImageQualityEval"}, {"item", "i2"}, {"text", "garbage"}}}}});
  Judgement ok = judge_caption("A caption.", test::image("i1"), registry, *client);
  EXPECT_TRUE(ok.ok());
  EXPECT_EQ(ok.attempts, 2);
  Judgement bad = judge_caption("A caption.", test::image("i2"), registry, *client);
  EXPECT_FALSE(bad.ok());
  EXPECT_EQ(bad.attempts, 2);
  EXPECT_EQ(mock->calls("ImageQualityEval", "i2"), 2);
  EXPECT_NE(bad.error.find("unparseable"), std::string::npos);
}

TEST_F(JudgeFixture, FailedRecordIsAPrecondition) {
  use(Json::object());
  CaptionRecord r;
  r.item_id = "i1";
  r.status = CaptionStatus::Failed;
  EXPECT_THROW(judge(r, test::image("i1"), registry, *client), Error);
}

TEST_F(JudgeFixture, VideoUsesTheVideoJudge) {
  use(Json::object());
  CaptionRecord r;
  r.item_id = "v1";
  r.domain = VisualDomain::VideoTemporal;
  r.caption = "Things happen.";
  r.status = CaptionStatus::Complete;
  Judgement j = judge(r, test::video("v1"), registry, *client);
  EXPECT_EQ(j.agent, "VideoQualityEval");
  EXPECT_EQ(j.score->verdict, Verdict::Keep);
}

Judgement scored(const std::string& id, int reasoning) {
  Judgement j;
  j.item_id = id;
  j.agent = "ImageQualityEval";
  j.score = parse_judge_reply(image_reply(reasoning), MediaKind::Image, id);
  return j;
}

CaptionRecord record(const std::string& id) {
  CaptionRecord r;
  r.item_id = id;
  r.caption = "c";
  r.status = CaptionStatus::Complete;
  return r;
}

TEST(Gate, TenRecordsEightKept) {
  std::vector<CaptionRecord> records;
  std::vector<Judgement> judgements;
  for (int i = 0; i < 10; ++i) {
    std::string id = "r" + std::to_string(i);
    records.push_back(record(id));
    judgements.push_back(scored(id, i < 8 ? 3 : 1));
  }
  GateResult g = filter_dataset(records, judgements);
  EXPECT_EQ(g.stats.kept, 8u);
  EXPECT_EQ(g.stats.dropped, 2u);
  ASSERT_TRUE(g.stats.yield);
  EXPECT_DOUBLE_EQ(*g.stats.yield, 0.8);
  EXPECT_EQ(g.stats.histograms["reasoning_rigor"], (std::array<std::size_t, 3>{2, 0, 8}));
  EXPECT_EQ(g.stats.histograms["completeness"], (std::array<std::size_t, 3>{0, 0, 10}));
}

TEST(Gate, EmptyInputHasNullYield) {
  GateResult g = filter_dataset({}, {});
  EXPECT_FALSE(g.stats.yield);
  EXPECT_TRUE(to_json(g.stats)["yield"].is_null());
}

TEST(Gate, PartitionIsExhaustiveAndDisjoint) {
  std::vector<CaptionRecord> records;
  std::vector<Judgement> judgements;
  for (int i = 0; i < 9; ++i) {
    std::string id = "r" + std::to_string(i);
    records.push_back(record(id));
    if (i % 3 == 0) {
      judgements.push_back(Judgement{id, "ImageQualityEval", std::nullopt, "bad", 2, {}, {}, {}});
    } else {
      judgements.push_back(scored(id, i % 3 == 1 ? 3 : 2));
    }
  }
  GateResult g = filter_dataset(records, judgements);
  EXPECT_EQ(g.kept, (std::vector<std::size_t>{1, 4, 7}));
  EXPECT_EQ(g.dropped, (std::vector<std::size_t>{2, 5, 8}));
  EXPECT_EQ(g.quarantined, (std::vector<std::size_t>{0, 3, 6}));
  EXPECT_EQ(g.stats.judged, 6u);
  EXPECT_DOUBLE_EQ(*g.stats.yield, 0.5);
}

TEST(Gate, MissingJudgementIsAPrecondition) {
  std::vector<CaptionRecord> records{record("a")};
  EXPECT_THROW(filter_dataset(records, {}), Error);
}

}  // namespace
}  // namespace vcap
