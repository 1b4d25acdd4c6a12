// Copyright 2026 The fimedit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fimedit/study_store.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "fimedit/datagen.hpp"
#include "study_fixtures.hpp"

namespace fimedit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class StoreDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("fimedit_ss_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    log_ = dir_ / "study.jsonl";
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_, log_;
};

Session session(std::string id, StudyTask task) {
  return Session{std::move(id), "ann", task, {"d1", "d2"}, "2026-01-01T00:00:00.000Z"};
}

AnnotationRecord annotation(std::string sid, std::string doc, std::int64_t ms,
                            std::string text = "final") {
  return AnnotationRecord{std::move(sid), std::move(doc), "draft", std::move(text), ms, {}, 0, {}};
}

TEST(Validate, FieldsNamed) {
  auto field_of = [](const StudyEvent& ev) {
    try {
      std::visit([](const auto& r) { validate(r); }, ev);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("ok");
  };
  EvaluationRecord e{"s", "d", SummaryVariant::kDraft, 0, {}, Verdict::kAccept};
  EXPECT_EQ(field_of(e), "rating");
  e.rating = 8;
  EXPECT_EQ(field_of(e), "rating");
  e.rating = 7;
  EXPECT_EQ(field_of(e), "ok");
  auto a = annotation("s", "d", -1);
  EXPECT_EQ(field_of(a), "elapsed_ms");
  a.elapsed_ms = 5;
  a.choices_taken = {{0, 1}};
  EXPECT_EQ(field_of(a), "suggestion_triggers");
  a.suggestion_triggers = 1;
  EXPECT_EQ(field_of(a), "ok");
  EXPECT_EQ(field_of(Session{"", "a", StudyTask::kEvaluation, {}, ""}), "id");
  EXPECT_EQ(field_of(Session{"s", "a", StudyTask::kEvaluation, {"x", "x"}, ""}), "document_ids");
  EditEventRecord ev;
  ev.session_id = "s";
  ev.action = "choose";
  EXPECT_EQ(field_of(ev), "choice");
  ev.choice = 1;
  EXPECT_EQ(field_of(ev), "ok");
  ev.action = "undo";
  EXPECT_EQ(field_of(ev), "action");
}

TEST(EventJson, RoundTripAllTypes) {
  AnnotationRecord a = annotation("s1", "d1", 1234);
  a.client_active_ms = 1000;
  a.suggestion_triggers = 3;
  a.choices_taken = {{0, 2}, {2, 0}};
  EvaluationRecord e{"s2", "d1", SummaryVariant::kHumanWithInteraction, 6, {}, Verdict::kReject};
  e.issues[0] = true;
  e.issues[6] = true;
  EditEventRecord ev{"s1", "d1", "choose", 1, 2, "end", 4, 1, 0, 3, 12.5, ""};
  for (const StudyEvent& event :
       std::vector<StudyEvent>{session("s1", StudyTask::kWithInteraction), a, e, ev}) {
    auto j = event_to_json(event, "2026-10-14T00:00:00.000Z");
    EXPECT_EQ(j["ts"], "2026-10-14T00:00:00.000Z");
    EXPECT_EQ(event_from_json(json::parse(j.dump())), event);
  }
  auto j = event_to_json(e, "t");
  EXPECT_EQ(j["type"], "evaluation");
  EXPECT_EQ(j["summary_variant"], "human_with_interaction");
  EXPECT_EQ(j["issues"].size(), 7u);
}

TEST(EventJson, SchemaViolationsRejected) {
  EXPECT_THROW(event_from_json(json::parse(R"({"type":"mystery"})")), ValidationError);
  EXPECT_THROW(event_from_json(json::parse(R"({"session_id":"s"})")), ValidationError);
  EXPECT_THROW(event_from_json(json::parse(
                   R"({"type":"evaluation","session_id":"s","document_id":"d","summary_variant":"draft","rating":4.5,"issues":[false,false,false,false,false,false,false],"verdict":"accept"})")),
               ValidationError);
  EXPECT_THROW(event_from_json(json::parse(
                   R"({"type":"evaluation","session_id":"s","document_id":"d","summary_variant":"draft","rating":4,"issues":[false],"verdict":"accept"})")),
               ValidationError);
}

TEST(Iso8601, Shape) {
  auto ts = iso8601_now();
  ASSERT_EQ(ts.size(), 24u);
  EXPECT_EQ(ts[4], '-');
  EXPECT_EQ(ts[10], 'T');
  EXPECT_EQ(ts.back(), 'Z');
}

TEST_F(StoreDir, AppendReopenLatestWins) {
  {
    StudyStore store(log_);
    store.append(session("s1", StudyTask::kWithInteraction));
    store.append(annotation("s1", "d1", 100, "first"));
    store.append(annotation("s1", "d2", 200));
    store.append(annotation("s1", "d1", 300, "second"));
    EXPECT_EQ(store.snapshot().annotations.size(), 2u);
  }
  StudyStore reopened(log_);
  auto log = reopened.snapshot();
  EXPECT_EQ(log.raw_lines, 4u);
  ASSERT_EQ(log.annotations.size(), 2u);
  EXPECT_EQ(log.find_annotation("s1", "d1")->final_summary, "second");
  EXPECT_EQ(log.find_annotation("s1", "d1")->elapsed_ms, 300);
  // Key position is the first write.
  EXPECT_EQ(log.annotations[0].document_id, "d1");
}

TEST_F(StoreDir, EvaluationKeyIncludesVariant) {
  StudyStore store(log_);
  EvaluationRecord e{"s", "d", SummaryVariant::kDraft, 3, {}, Verdict::kAccept};
  store.append(e);
  e.variant = SummaryVariant::kHumanNoInteraction;
  store.append(e);
  e.rating = 5;
  store.append(e);
  auto log = store.snapshot();
  ASSERT_EQ(log.evaluations.size(), 2u);
  EXPECT_EQ(log.evaluations[1].rating, 5);
}

TEST_F(StoreDir, EditEventsAllKept) {
  StudyStore store(log_);
  EditEventRecord ev;
  ev.session_id = "s";
  store.append(ev);
  store.append(ev);
  EXPECT_EQ(store.snapshot().edit_events.size(), 2u);
}

TEST_F(StoreDir, InvalidRecordNotWritten) {
  StudyStore store(log_);
  EXPECT_THROW(store.append(annotation("s", "d", -5)), ValidationError);
  EXPECT_EQ(fs::file_size(log_), 0u);
}

TEST_F(StoreDir, DurabilityProperty) {
  // N appends over K keys: reopen recovers exactly K records with the values
  // of each key's last write.
  std::map<std::string, std::int64_t> last;
  {
    StudyStore store(log_);
    SplitRng rng(4, 0);
    for (int n = 0; n < 300; ++n) {
      std::string doc = "d" + std::to_string(rng.below(37));
      std::int64_t ms = static_cast<std::int64_t>(rng.below(100000));
      store.append(annotation("s", doc, ms));
      last[doc] = ms;
    }
  }
  auto log = read_study_log(log_);
  EXPECT_EQ(log.raw_lines, 300u);
  ASSERT_EQ(log.annotations.size(), last.size());
  for (const auto& a : log.annotations) EXPECT_EQ(a.elapsed_ms, last[a.document_id]);
}

TEST_F(StoreDir, TornTailIgnoredCorruptionReported) {
  {
    StudyStore store(log_);
    store.append(annotation("s", "d1", 1));
  }
  std::ofstream(log_, std::ios::app) << R"({"type":"annotation","session_id":"s","docu)";
  EXPECT_EQ(read_study_log(log_).annotations.size(), 1u);
  // Once terminated, the same bytes are corruption rather than a torn tail.
  std::ofstream(log_, std::ios::app) << "\n";
  try {
    read_study_log(log_);
    FAIL();
  } catch (const StorageError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST_F(StoreDir, ReopenDropsTornTail) {
  {
    StudyStore store(log_);
    store.append(annotation("s", "d1", 1));
  }
  std::ofstream(log_, std::ios::app) << R"({"type":"annot)";
  {
    StudyStore store(log_);
    store.append(annotation("s", "d2", 2));
  }
  auto log = read_study_log(log_);
  EXPECT_EQ(log.raw_lines, 2u);
  EXPECT_EQ(log.annotations.size(), 2u);
}

TEST_F(StoreDir, MissingLogIsEmpty) {
  auto log = read_study_log(dir_ / "absent.jsonl");
  EXPECT_EQ(log.raw_lines, 0u);
  auto agg = aggregate(log);
  EXPECT_TRUE(agg.variants.empty());
  EXPECT_EQ(agg.to_json().dump(),
            R"({"variants":{},"n_sessions":0,"unattributed_annotations":0})");
}

TEST_F(StoreDir, ConcurrentAppendsSerialized) {
  {
    StudyStore store(log_);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&store, t] {
        for (int k = 0; k < 50; ++k) {
          store.append(annotation("s" + std::to_string(t), "d" + std::to_string(k), k));
        }
      });
    }
    for (auto& th : threads) th.join();
  }
  auto log = read_study_log(log_);
  EXPECT_EQ(log.raw_lines, 400u);
  EXPECT_EQ(log.annotations.size(), 400u);
}

TEST(Summarize, PopulationStddev) {
  EXPECT_FALSE(summarize({}).has_value());
  auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(s->mean, 5.0);
  EXPECT_DOUBLE_EQ(s->stddev, 2.0);
  EXPECT_EQ(s->n, 8u);
}

TEST(Aggregate, TableMeansExact) {
  using T = testing::TableTargets;
  StudyLog log;
  for (const auto& e : testing::table_log_events()) log.apply(e);
  auto agg = aggregate(log);
  const auto& without = agg.variants.at(SummaryVariant::kHumanNoInteraction);
  const auto& with = agg.variants.at(SummaryVariant::kHumanWithInteraction);
  const auto& draft = agg.variants.at(SummaryVariant::kDraft);
  EXPECT_EQ(without.elapsed_s->mean, T::kTimeWithout);
  EXPECT_EQ(with.elapsed_s->mean, T::kTimeWith);
  EXPECT_FALSE(draft.elapsed_s.has_value());
  EXPECT_EQ(draft.rating->mean, T::kRatingDraft);
  EXPECT_EQ(without.rating->mean, T::kRatingWithout);
  EXPECT_EQ(with.rating->mean, T::kRatingWith);
  EXPECT_EQ(draft.issue_rates[0], T::kHallucinationDraft);
  EXPECT_EQ(without.issue_rates[0], T::kHallucinationWithout);
  EXPECT_EQ(with.issue_rates[0], T::kHallucinationWith);
  EXPECT_DOUBLE_EQ(with.suggestion_triggers->mean, 2.0);
  for (const auto* va : {&draft, &without, &with}) {
    EXPECT_NEAR(va->verdicts[0] + va->verdicts[1] + va->verdicts[2], 1.0, 1e-12);
  }
  auto table = render_table(agg);
  EXPECT_NE(table.find("903.0"), std::string::npos);
  EXPECT_NE(table.find("645.5"), std::string::npos);
  EXPECT_NE(table.find("4.61"), std::string::npos);
  EXPECT_NE(table.find("5.52"), std::string::npos);
  EXPECT_NE(table.find("3.99"), std::string::npos);
  // Aggregation is a function of contents only.
  EXPECT_EQ(aggregate(log).to_json().dump(), agg.to_json().dump());
}

TEST(Aggregate, AnnotationsWithoutSessionUnattributed) {
  StudyLog log;
  log.apply(annotation("ghost", "d", 10));
  auto agg = aggregate(log);
  EXPECT_EQ(agg.unattributed_annotations, 1u);
  EXPECT_TRUE(agg.variants.empty());
}

TEST(Aggregate, LatencyOnlyFromSuccessfulSuggests) {
  StudyLog log;
  EditEventRecord ok;
  ok.session_id = "s";
  ok.latency_ms = 10;
  EditEventRecord failed = ok;
  failed.latency_ms = 1000;
  failed.error = "timeout: slow";
  EditEventRecord choose = ok;
  choose.action = "choose";
  choose.choice = 0;
  choose.latency_ms = 500;
  for (const auto& e : {ok, failed, choose}) log.apply(e);
  auto agg = aggregate(log);
  ASSERT_TRUE(agg.suggestion_latency_ms.has_value());
  EXPECT_EQ(agg.suggestion_latency_ms->n, 1u);
  EXPECT_EQ(agg.suggestion_latency_ms->mean, 10.0);
}

void check_assignment(const std::vector<AnnotatorAssignment>& out,
                      const std::vector<std::string>& corpus, std::size_t per_task) {
  std::set<std::string> corpus_set(corpus.begin(), corpus.end());
  std::map<std::string, int> with_count, without_count, eval_count;
  for (std::size_t a = 0; a < out.size(); ++a) {
    const auto& x = out[a];
    ASSERT_EQ(x.with_interaction.size(), per_task);
    ASSERT_EQ(x.without_interaction.size(), per_task);
    ASSERT_EQ(x.evaluation.size(), per_task);
    std::set<std::string> all;
    for (const auto* v : {&x.with_interaction, &x.without_interaction, &x.evaluation}) {
      for (const auto& d : *v) {
        EXPECT_TRUE(corpus_set.count(d));
        EXPECT_TRUE(all.insert(d).second) << "annotator " << a << " sees " << d << " twice";
      }
    }
    for (const auto& d : x.with_interaction) ++with_count[d];
    for (const auto& d : x.without_interaction) ++without_count[d];
    for (const auto& d : x.evaluation) ++eval_count[d];
  }
  // Each annotated document gets one summary per arm and one evaluator, who
  // annotated neither version.
  for (const auto& [d, n] : with_count) {
    EXPECT_EQ(n, 1);
    EXPECT_EQ(without_count[d], 1);
    EXPECT_EQ(eval_count[d], 1);
  }
  EXPECT_EQ(with_count.size(), without_count.size());
  EXPECT_EQ(with_count.size(), eval_count.size());
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back("doc-" + std::to_string(k));
  return out;
}

TEST(Assignment, PlannedStudyShape) {
  auto corpus = ids(120);
  auto out = assign_documents(corpus, 3, 40, 11);
  ASSERT_EQ(out.size(), 3u);
  check_assignment(out, corpus, 40);
  EXPECT_EQ(out, assign_documents(corpus, 3, 40, 11));
  EXPECT_NE(out, assign_documents(corpus, 3, 40, 12));
}

TEST(Assignment, Infeasible) {
  try {
    assign_documents(ids(100), 3, 40, 0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("infeasible", 0), 0u);
  }
  EXPECT_THROW(assign_documents(ids(100), 2, 10, 0), std::invalid_argument);
  EXPECT_THROW(assign_documents({"a", "a", "b"}, 3, 1, 0), std::invalid_argument);
}

TEST(AssignmentProperty, ConstraintsHoldAcrossShapes) {
  for (std::size_t annotators = 3; annotators <= 7; ++annotators) {
    for (std::size_t per = 1; per <= 6; ++per) {
      for (std::size_t extra : {0u, 5u}) {
        auto corpus = ids(annotators * per + extra);
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
          check_assignment(assign_documents(corpus, annotators, per, seed), corpus, per);
        }
      }
    }
  }
}

}  // namespace
}  // namespace fimedit
