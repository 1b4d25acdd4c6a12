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

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fimedit/datagen.hpp"

namespace fimedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ValidationError(name, std::string("missing field ") + name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(name, std::string("wrong type for field ") + name);
  }
}

template <class F>
auto parse_enum(const json& j, const char* name, F parse) {
  auto text = field<std::string>(j, name);
  try {
    return parse(text);
  } catch (const std::invalid_argument&) {
    throw ValidationError(name, std::string("invalid value for ") + name + ": " + text);
  }
}

std::string fmt_fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

}  // namespace

std::string_view to_string(StudyTask t) {
  switch (t) {
    case StudyTask::kWithInteraction: return "with_interaction";
    case StudyTask::kWithoutInteraction: return "without_interaction";
    case StudyTask::kEvaluation: return "evaluation";
  }
  return "with_interaction";
}

std::string_view to_string(SummaryVariant v) {
  switch (v) {
    case SummaryVariant::kDraft: return "draft";
    case SummaryVariant::kHumanNoInteraction: return "human_without_interaction";
    case SummaryVariant::kHumanWithInteraction: return "human_with_interaction";
  }
  return "draft";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccept: return "accept";
    case Verdict::kAcceptWithEdits: return "accept_with_edits";
    case Verdict::kReject: return "reject";
  }
  return "accept";
}

StudyTask parse_study_task(std::string_view s) {
  if (s == "with_interaction") return StudyTask::kWithInteraction;
  if (s == "without_interaction") return StudyTask::kWithoutInteraction;
  if (s == "evaluation") return StudyTask::kEvaluation;
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

SummaryVariant parse_summary_variant(std::string_view s) {
  if (s == "draft") return SummaryVariant::kDraft;
  if (s == "human_without_interaction") return SummaryVariant::kHumanNoInteraction;
  if (s == "human_with_interaction") return SummaryVariant::kHumanWithInteraction;
  throw std::invalid_argument("unknown summary variant '" + std::string(s) + "'");
}

Verdict parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::kAccept;
  if (s == "accept_with_edits") return Verdict::kAcceptWithEdits;
  if (s == "reject") return Verdict::kReject;
  throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

const std::array<std::string, kNumIssues>& default_issue_questions() {
  static const std::array<std::string, kNumIssues> questions = {
      "Does the summary contain information not supported by the document (hallucination)?",
      "Does the summary omit key content of the document?",
      "Is the summary redundant or too verbose?",
      "Is the summary incoherent or hard to follow?",
      "Does the summary contain grammar errors?",
      "Does the summary use a different perspective than the document?",
      "Is the summary too generic?",
  };
  return questions;
}

void validate(const Session& s) {
  if (s.id.empty()) throw ValidationError("id", "session id must be non-empty");
  if (s.annotator_id.empty()) throw ValidationError("annotator_id", "annotator id is required");
  std::set<std::string> unique(s.document_ids.begin(), s.document_ids.end());
  if (unique.size() != s.document_ids.size()) {
    throw ValidationError("document_ids", "a session lists a document twice");
  }
}

void validate(const AnnotationRecord& a) {
  if (a.session_id.empty()) throw ValidationError("session_id", "session id is required");
  if (a.document_id.empty()) throw ValidationError("document_id", "document id is required");
  if (a.elapsed_ms < 0) throw ValidationError("elapsed_ms", "elapsed_ms must be >= 0");
  if (a.client_active_ms && *a.client_active_ms < 0) {
    throw ValidationError("client_active_ms", "client_active_ms must be >= 0");
  }
  if (a.suggestion_triggers < a.choices_taken.size()) {
    throw ValidationError("suggestion_triggers", "fewer triggers than choices taken");
  }
}

void validate(const EvaluationRecord& e) {
  if (e.session_id.empty()) throw ValidationError("session_id", "session id is required");
  if (e.document_id.empty()) throw ValidationError("document_id", "document id is required");
  if (e.rating < kMinRating || e.rating > kMaxRating) {
    throw ValidationError("rating", "rating must be an integer in [1, 7], got " +
                                        std::to_string(e.rating));
  }
}

void validate(const EditEventRecord& e) {
  if (e.session_id.empty()) throw ValidationError("session_id", "session id is required");
  if (e.latency_ms < 0) throw ValidationError("latency_ms", "latency must be >= 0");
  if (e.action != "suggest" && e.action != "choose") {
    throw ValidationError("action", "action must be 'suggest' or 'choose'");
  }
  if ((e.action == "choose") != e.choice.has_value()) {
    throw ValidationError("choice", "a choice index is present exactly on 'choose' events");
  }
}

ordered_json event_to_json(const StudyEvent& event, std::string_view ts) {
  ordered_json j;
  std::visit(Overloaded{
                 [&](const Session& s) {
                   j["type"] = "session";
                   j["id"] = s.id;
                   j["annotator_id"] = s.annotator_id;
                   j["task"] = to_string(s.task);
                   j["document_ids"] = s.document_ids;
                   j["created_at"] = s.created_at;
                 },
                 [&](const AnnotationRecord& a) {
                   j["type"] = "annotation";
                   j["session_id"] = a.session_id;
                   j["document_id"] = a.document_id;
                   j["draft_summary"] = a.draft_summary;
                   j["final_summary"] = a.final_summary;
                   j["elapsed_ms"] = a.elapsed_ms;
                   if (a.client_active_ms) j["client_active_ms"] = *a.client_active_ms;
                   j["suggestion_triggers"] = a.suggestion_triggers;
                   ordered_json choices = ordered_json::array();
                   for (auto [t, c] : a.choices_taken) choices.push_back({t, c});
                   j["choices_taken"] = std::move(choices);
                 },
                 [&](const EvaluationRecord& e) {
                   j["type"] = "evaluation";
                   j["session_id"] = e.session_id;
                   j["document_id"] = e.document_id;
                   j["summary_variant"] = to_string(e.variant);
                   j["rating"] = e.rating;
                   j["issues"] = e.issues;
                   j["verdict"] = to_string(e.verdict);
                 },
                 [&](const EditEventRecord& e) {
                   j["type"] = "edit_event";
                   j["session_id"] = e.session_id;
                   j["document_id"] = e.document_id;
                   j["action"] = e.action;
                   j["trigger_index"] = e.trigger_index;
                   if (e.choice) j["choice"] = *e.choice;
                   j["mode"] = e.mode;
                   j["prefix_len"] = e.prefix_len;
                   j["human_start_len"] = e.human_start_len;
                   j["suffix_len"] = e.suffix_len;
                   j["num_suggestions"] = e.num_suggestions;
                   j["latency_ms"] = e.latency_ms;
                   if (!e.error.empty()) j["error"] = e.error;
                 },
             },
             event);
  j["ts"] = ts;
  return j;
}

StudyEvent event_from_json(const json& j) {
  const auto type = field<std::string>(j, "type");
  if (type == "session") {
    Session s;
    s.id = field<std::string>(j, "id");
    s.annotator_id = field<std::string>(j, "annotator_id");
    s.task = parse_enum(j, "task", parse_study_task);
    s.document_ids = field<std::vector<std::string>>(j, "document_ids");
    s.created_at = j.value("created_at", std::string{});
    validate(s);
    return s;
  }
  if (type == "annotation") {
    AnnotationRecord a;
    a.session_id = field<std::string>(j, "session_id");
    a.document_id = field<std::string>(j, "document_id");
    a.draft_summary = field<std::string>(j, "draft_summary");
    a.final_summary = field<std::string>(j, "final_summary");
    a.elapsed_ms = field<std::int64_t>(j, "elapsed_ms");
    if (j.contains("client_active_ms") && !j["client_active_ms"].is_null()) {
      a.client_active_ms = field<std::int64_t>(j, "client_active_ms");
    }
    a.suggestion_triggers = field<std::size_t>(j, "suggestion_triggers");
    if (j.contains("choices_taken")) {
      for (const auto& pair : j["choices_taken"]) {
        if (!pair.is_array() || pair.size() != 2) {
          throw ValidationError("choices_taken", "choices are [trigger, choice] pairs");
        }
        a.choices_taken.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
      }
    }
    validate(a);
    return a;
  }
  if (type == "evaluation") {
    EvaluationRecord e;
    e.session_id = field<std::string>(j, "session_id");
    e.document_id = field<std::string>(j, "document_id");
    e.variant = parse_enum(j, "summary_variant", parse_summary_variant);
    if (!j.contains("rating") || !j["rating"].is_number_integer()) {
      throw ValidationError("rating", "rating must be an integer");
    }
    e.rating = j["rating"].get<int>();
    auto issues = field<std::vector<bool>>(j, "issues");
    if (issues.size() != kNumIssues) {
      throw ValidationError("issues", "exactly 7 issue flags are required");
    }
    std::copy(issues.begin(), issues.end(), e.issues.begin());
    e.verdict = parse_enum(j, "verdict", parse_verdict);
    validate(e);
    return e;
  }
  if (type == "edit_event") {
    EditEventRecord e;
    e.session_id = field<std::string>(j, "session_id");
    e.document_id = field<std::string>(j, "document_id");
    e.action = j.value("action", std::string("suggest"));
    e.trigger_index = field<std::size_t>(j, "trigger_index");
    if (j.contains("choice")) e.choice = field<std::size_t>(j, "choice");
    e.mode = field<std::string>(j, "mode");
    e.prefix_len = field<std::size_t>(j, "prefix_len");
    e.human_start_len = field<std::size_t>(j, "human_start_len");
    e.suffix_len = field<std::size_t>(j, "suffix_len");
    e.num_suggestions = field<std::size_t>(j, "num_suggestions");
    e.latency_ms = field<double>(j, "latency_ms");
    e.error = j.value("error", std::string{});
    validate(e);
    return e;
  }
  throw ValidationError("type", "unknown event type '" + type + "'");
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) %
                  1000;
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", utc.tm_year + 1900,
                utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec,
                static_cast<int>(ms.count()));
  return buf;
}

void StudyLog::apply(const StudyEvent& event) {
  ++raw_lines;
  std::visit(Overloaded{
                 [&](const Session& s) {
                   auto it = std::find_if(sessions.begin(), sessions.end(),
                                          [&](const Session& x) { return x.id == s.id; });
                   if (it == sessions.end()) sessions.push_back(s);
                   else *it = s;
                 },
                 [&](const AnnotationRecord& a) {
                   auto it = std::find_if(annotations.begin(), annotations.end(),
                                          [&](const AnnotationRecord& x) {
                                            return x.session_id == a.session_id &&
                                                   x.document_id == a.document_id;
                                          });
                   if (it == annotations.end()) annotations.push_back(a);
                   else *it = a;
                 },
                 [&](const EvaluationRecord& e) {
                   auto it = std::find_if(evaluations.begin(), evaluations.end(),
                                          [&](const EvaluationRecord& x) {
                                            return x.session_id == e.session_id &&
                                                   x.document_id == e.document_id &&
                                                   x.variant == e.variant;
                                          });
                   if (it == evaluations.end()) evaluations.push_back(e);
                   else *it = e;
                 },
                 [&](const EditEventRecord& e) { edit_events.push_back(e); },
             },
             event);
}

const Session* StudyLog::find_session(std::string_view id) const {
  auto it = std::find_if(sessions.begin(), sessions.end(),
                         [&](const Session& s) { return s.id == id; });
  return it == sessions.end() ? nullptr : &*it;
}

const AnnotationRecord* StudyLog::find_annotation(std::string_view session,
                                                  std::string_view document) const {
  auto it = std::find_if(annotations.begin(), annotations.end(), [&](const AnnotationRecord& a) {
    return a.session_id == session && a.document_id == document;
  });
  return it == annotations.end() ? nullptr : &*it;
}

StudyLog read_study_log(const std::filesystem::path& path) {
  StudyLog log;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) return log;
    throw StorageError("cannot open study log " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    const bool complete = end != std::string::npos;
    std::string line = content.substr(pos, complete ? end - pos : std::string::npos);
    pos = complete ? end + 1 : content.size();
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      // A torn final write from a crash is dropped; anything else is corruption.
      if (!complete) break;
      throw StorageError(path.string() + ": line " + std::to_string(line_no) + " is not JSON");
    }
    try {
      log.apply(event_from_json(parsed));
    } catch (const ValidationError& e) {
      throw StorageError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

StudyStore::StudyStore(std::filesystem::path path) : path_(std::move(path)) {
  log_ = read_study_log(path_);
  // Drop a torn final line so the next append starts on a fresh line.
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!content.empty() && content.back() != '\n') {
      auto keep = content.rfind('\n');
      std::filesystem::resize_file(path_, keep == std::string::npos ? 0 : keep + 1);
    }
  }
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw StorageError("cannot open study log for append: " + path_.string());
}

StudyStore::~StudyStore() {
  if (file_) std::fclose(file_);
}

void StudyStore::append(const StudyEvent& event) {
  std::visit([](const auto& rec) { validate(rec); }, event);
  auto line = event_to_json(event, iso8601_now()).dump() + "\n";
  std::scoped_lock lock(mutex_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw StorageError("failed to append to " + path_.string());
  }
  log_.apply(event);
}

StudyLog StudyStore::snapshot() const {
  std::scoped_lock lock(mutex_);
  return log_;
}

std::optional<Summary> summarize(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  Summary s;
  s.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.n));
  return s;
}

StudyAggregate aggregate(const StudyLog& log) {
  StudyAggregate agg;
  agg.n_sessions = log.sessions.size();
  std::map<SummaryVariant, std::vector<double>> elapsed_ms, ratings, triggers;
  std::map<SummaryVariant, std::vector<const EvaluationRecord*>> evals;

  for (const auto& a : log.annotations) {
    const Session* s = log.find_session(a.session_id);
    if (!s || s->task == StudyTask::kEvaluation) {
      ++agg.unattributed_annotations;
      continue;
    }
    const auto variant = s->task == StudyTask::kWithInteraction
                             ? SummaryVariant::kHumanWithInteraction
                             : SummaryVariant::kHumanNoInteraction;
    elapsed_ms[variant].push_back(static_cast<double>(a.elapsed_ms));
    if (variant == SummaryVariant::kHumanWithInteraction) {
      triggers[variant].push_back(static_cast<double>(a.suggestion_triggers));
    }
  }
  for (const auto& e : log.evaluations) {
    ratings[e.variant].push_back(e.rating);
    evals[e.variant].push_back(&e);
  }

  for (auto v : {SummaryVariant::kDraft, SummaryVariant::kHumanNoInteraction,
                 SummaryVariant::kHumanWithInteraction}) {
    VariantAggregate va;
    if (auto ms = summarize(elapsed_ms[v])) {
      va.elapsed_s = Summary{ms->mean / 1000.0, ms->stddev / 1000.0, ms->n};
      va.n_annotations = ms->n;
    }
    va.rating = summarize(ratings[v]);
    va.suggestion_triggers = summarize(triggers[v]);
    const auto& es = evals[v];
    va.n_evaluations = es.size();
    if (!es.empty()) {
      const double n = static_cast<double>(es.size());
      for (const auto* e : es) {
        va.verdicts[static_cast<std::size_t>(e->verdict)] += 1;
        for (std::size_t k = 0; k < kNumIssues; ++k) va.issue_rates[k] += e->issues[k] ? 1 : 0;
      }
      for (auto& f : va.verdicts) f /= n;
      for (auto& r : va.issue_rates) r /= n;
    }
    if (va.n_annotations || va.n_evaluations) agg.variants.emplace(v, va);
  }

  std::vector<double> latencies;
  for (const auto& e : log.edit_events) {
    if (e.action == "suggest" && e.error.empty()) latencies.push_back(e.latency_ms);
  }
  agg.suggestion_latency_ms = summarize(latencies);
  return agg;
}

ordered_json StudyAggregate::to_json() const {
  auto summary_json = [](const Summary& s) {
    ordered_json j;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    j["n"] = s.n;
    return j;
  };
  ordered_json j;
  ordered_json vs = ordered_json::object();
  for (const auto& [variant, va] : variants) {
    ordered_json v;
    v["n_annotations"] = va.n_annotations;
    v["n_evaluations"] = va.n_evaluations;
    if (va.elapsed_s) v["elapsed_s"] = summary_json(*va.elapsed_s);
    if (va.rating) v["rating"] = summary_json(*va.rating);
    if (va.suggestion_triggers) v["suggestion_triggers"] = summary_json(*va.suggestion_triggers);
    if (va.n_evaluations) {
      ordered_json verdicts;
      verdicts["accept"] = va.verdicts[0];
      verdicts["accept_with_edits"] = va.verdicts[1];
      verdicts["reject"] = va.verdicts[2];
      v["verdicts"] = std::move(verdicts);
      v["issue_rates"] = va.issue_rates;
      v["hallucination_rate"] = va.issue_rates[0];
    }
    vs[std::string(to_string(variant))] = std::move(v);
  }
  j["variants"] = std::move(vs);
  j["n_sessions"] = n_sessions;
  j["unattributed_annotations"] = unattributed_annotations;
  if (suggestion_latency_ms) j["suggestion_latency_ms"] = summary_json(*suggestion_latency_ms);
  return j;
}

std::string render_table(const StudyAggregate& agg) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "" << std::setw(12) << "Avg. Time" << std::setw(16)
      << "Avg. Rating" << std::setw(28) << "Accept / w Edits / Reject" << "Hallucination Rate\n";
  const std::pair<SummaryVariant, const char*> rows[] = {
      {SummaryVariant::kDraft, "Draft Summary"},
      {SummaryVariant::kHumanNoInteraction, "Human w/o interaction"},
      {SummaryVariant::kHumanWithInteraction, "Human w interaction"},
  };
  for (const auto& [variant, label] : rows) {
    auto it = agg.variants.find(variant);
    if (it == agg.variants.end()) continue;
    const auto& va = it->second;
    std::string time = va.elapsed_s ? fmt_fixed(va.elapsed_s->mean, 1) : "--";
    std::string rating =
        va.rating ? fmt_fixed(va.rating->mean, 2) + " ± " + fmt_fixed(va.rating->stddev, 2) : "--";
    std::string verdicts = va.n_evaluations ? fmt_fixed(va.verdicts[0], 2) + " / " +
                                                  fmt_fixed(va.verdicts[1], 2) + " / " +
                                                  fmt_fixed(va.verdicts[2], 2)
                                            : "--";
    std::string halluc = va.n_evaluations ? fmt_fixed(va.issue_rates[0], 2) : "--";
    // "±" is two bytes in UTF-8; pad by hand so columns line up.
    out << std::setw(24) << label << std::setw(12) << time
        << std::setw(va.rating ? 17 : 16) << rating << std::setw(28) << verdicts << halluc
        << '\n';
  }
  return out.str();
}

std::vector<AnnotatorAssignment> assign_documents(const std::vector<std::string>& corpus_ids,
                                                  std::size_t annotators, std::size_t per_task,
                                                  std::uint64_t seed) {
  std::set<std::string> unique(corpus_ids.begin(), corpus_ids.end());
  if (unique.size() != corpus_ids.size()) {
    throw std::invalid_argument("corpus ids must be unique");
  }
  if (annotators < 3) {
    throw std::invalid_argument("infeasible: at least 3 annotators are needed so each one "
                                "evaluates documents they did not annotate");
  }
  if (per_task == 0) throw std::invalid_argument("infeasible: per_task must be positive");
  const std::size_t needed = annotators * per_task;
  if (corpus_ids.size() < needed) {
    throw std::invalid_argument("infeasible: " + std::to_string(annotators) + " annotators x " +
                                std::to_string(per_task) + " documents per task needs " +
                                std::to_string(needed) + " documents, corpus has " +
                                std::to_string(corpus_ids.size()));
  }
  std::vector<std::string> pool = corpus_ids;
  SplitRng rng(seed, 0);
  for (std::size_t k = pool.size(); k > 1; --k) {
    std::swap(pool[k - 1], pool[rng.below(k)]);
  }
  pool.resize(needed);

  auto block = [&](std::size_t b) {
    auto begin = pool.begin() + static_cast<std::ptrdiff_t>(b * per_task);
    return std::vector<std::string>(begin, begin + static_cast<std::ptrdiff_t>(per_task));
  };
  std::vector<AnnotatorAssignment> out(annotators);
  for (std::size_t a = 0; a < annotators; ++a) {
    out[a].with_interaction = block(a);
    out[a].without_interaction = block((a + 1) % annotators);
    out[a].evaluation = block((a + 2) % annotators);
  }
  return out;
}

}  // namespace fimedit
