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

#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace fimedit {

enum class StudyTask { kWithInteraction, kWithoutInteraction, kEvaluation };
enum class SummaryVariant { kDraft, kHumanNoInteraction, kHumanWithInteraction };
enum class Verdict { kAccept, kAcceptWithEdits, kReject };

std::string_view to_string(StudyTask t);
std::string_view to_string(SummaryVariant v);
std::string_view to_string(Verdict v);
StudyTask parse_study_task(std::string_view s);
SummaryVariant parse_summary_variant(std::string_view s);
Verdict parse_verdict(std::string_view s);

inline constexpr std::size_t kNumIssues = 7;
inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 7;

/// Default wording of the seven binary issue questions. Index 0 is the
/// hallucination question.
const std::array<std::string, kNumIssues>& default_issue_questions();

/// A record failed its invariants; `field()` names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Session {
  std::string id;
  std::string annotator_id;
  StudyTask task = StudyTask::kWithInteraction;
  std::vector<std::string> document_ids;
  std::string created_at;  // ISO-8601

  bool operator==(const Session&) const = default;
};

struct AnnotationRecord {
  std::string session_id;
  std::string document_id;
  std::string draft_summary;
  std::string final_summary;
  std::int64_t elapsed_ms = 0;  // server-side, includes suggestion latency
  std::optional<std::int64_t> client_active_ms;
  std::size_t suggestion_triggers = 0;
  std::vector<std::pair<std::size_t, std::size_t>> choices_taken;  // (trigger, choice)

  bool operator==(const AnnotationRecord&) const = default;
};

struct EvaluationRecord {
  std::string session_id;
  std::string document_id;
  SummaryVariant variant = SummaryVariant::kDraft;
  int rating = 0;
  std::array<bool, kNumIssues> issues{};
  Verdict verdict = Verdict::kAccept;

  bool operator==(const EvaluationRecord&) const = default;
};

/// One suggestion trigger or choice adoption, logged as it happens.
struct EditEventRecord {
  std::string session_id;
  std::string document_id;
  std::string action = "suggest";  // "suggest" or "choose"
  std::size_t trigger_index = 0;
  std::optional<std::size_t> choice;
  std::string mode;
  std::size_t prefix_len = 0;
  std::size_t human_start_len = 0;
  std::size_t suffix_len = 0;
  std::size_t num_suggestions = 0;
  double latency_ms = 0.0;
  std::string error;  // empty on success

  bool operator==(const EditEventRecord&) const = default;
};

using StudyEvent = std::variant<Session, AnnotationRecord, EvaluationRecord, EditEventRecord>;

void validate(const Session& s);
void validate(const AnnotationRecord& a);
void validate(const EvaluationRecord& e);
void validate(const EditEventRecord& e);

/// Log line: {"type": ..., fields..., "ts": ISO-8601}.
nlohmann::ordered_json event_to_json(const StudyEvent& event, std::string_view ts);
/// Throws ValidationError on schema or invariant violations.
StudyEvent event_from_json(const nlohmann::json& j);

std::string iso8601_now();

/// Log contents after latest-wins materialization. Keys keep the position of
/// their first write; values are the last write.
struct StudyLog {
  std::vector<Session> sessions;
  std::vector<AnnotationRecord> annotations;  // key (session, document)
  std::vector<EvaluationRecord> evaluations;  // key (session, document, variant)
  std::vector<EditEventRecord> edit_events;   // not keyed, all kept
  std::size_t raw_lines = 0;

  void apply(const StudyEvent& event);
  const Session* find_session(std::string_view id) const;
  const AnnotationRecord* find_annotation(std::string_view session,
                                          std::string_view document) const;
};

StudyLog read_study_log(const std::filesystem::path& path);

/// Append-only JSON-lines event log. Appends are serialized and flushed to
/// disk before returning; the in-memory view is updated afterwards.
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path path);
  ~StudyStore();
  StudyStore(const StudyStore&) = delete;
  StudyStore& operator=(const StudyStore&) = delete;

  void append(const StudyEvent& event);
  StudyLog snapshot() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::FILE* file_ = nullptr;
  StudyLog log_;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t n = 0;
};

std::optional<Summary> summarize(const std::vector<double>& values);

struct VariantAggregate {
  std::optional<Summary> elapsed_s;
  std::optional<Summary> rating;
  std::optional<Summary> suggestion_triggers;
  std::size_t n_annotations = 0;
  std::size_t n_evaluations = 0;
  std::array<double, 3> verdicts{};          // accept, accept_with_edits, reject
  std::array<double, kNumIssues> issue_rates{};
};

struct StudyAggregate {
  std::map<SummaryVariant, VariantAggregate> variants;  // empty variants absent
  std::size_t n_sessions = 0;
  std::size_t unattributed_annotations = 0;  // session record missing
  std::optional<Summary> suggestion_latency_ms;

  nlohmann::ordered_json to_json() const;
};

StudyAggregate aggregate(const StudyLog& log);
std::string render_table(const StudyAggregate& agg);

struct AnnotatorAssignment {
  std::vector<std::string> with_interaction;
  std::vector<std::string> without_interaction;
  std::vector<std::string> evaluation;

  bool operator==(const AnnotatorAssignment&) const = default;
};

/// Rotates three disjoint blocks of a seeded shuffle across annotators, so
/// every document is annotated once per arm and evaluated by someone who did
/// not annotate it. Needs annotators >= 3 and annotators * per_task documents.
std::vector<AnnotatorAssignment> assign_documents(const std::vector<std::string>& corpus_ids,
                                                  std::size_t annotators, std::size_t per_task,
                                                  std::uint64_t seed);

}  // namespace fimedit
