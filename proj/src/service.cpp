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

#include "fimedit/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "fimedit/backend.hpp"
#include "fimedit/datagen.hpp"
#include "fimedit/study_store.hpp"
#include "fimedit/suggestion_engine.hpp"

namespace fimedit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kNoDocument = static_cast<std::size_t>(-1);

/// An error that maps straight onto an HTTP status.
struct HttpError {
  int status;
  std::string message;
  std::string field;
};

std::pair<std::string, int> split_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("listen", "listen must be host:port");
  try {
    int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {listen.substr(0, colon), port};
  } catch (const std::exception&) {
    throw ValidationError("listen", "invalid port in '" + listen + "'");
  }
}

struct DocumentEntry {
  std::string id;
  std::string text;
  TokenSeq tokens;
  std::string draft;
};

struct SessionState {
  std::mutex mutex;
  Session info;
  std::size_t cursor = kNoDocument;
  std::string current_summary;
  Clock::time_point served_at{};
  std::size_t triggers = 0;
  std::vector<std::pair<std::size_t, std::size_t>> choices;
  std::optional<SuggestionSet> pending;
  std::size_t pending_trigger = 0;
  std::uint64_t ticket = 0;
  // Evaluation sessions: slot -> variant for the served document.
  std::vector<SummaryVariant> slots;
};

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw HttpError{400, "request body must be a JSON object", "body"};
  }
  return body;
}

template <class T>
T required(const json& body, const char* name) {
  if (!body.contains(name)) throw HttpError{400, std::string("missing field ") + name, name};
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw HttpError{400, std::string("wrong type for field ") + name, name};
  }
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  ordered_json body;
  body["error"] = e.message;
  if (!e.field.empty()) body["field"] = e.field;
  send_json(res, e.status, body);
}

}  // namespace

std::optional<std::string> process_env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

void ServiceConfig::validate() const {
  split_listen(listen);
  if (k < 1) throw ValidationError("k", "k must be >= 1");
  if (!(gamma >= 0 && gamma <= 1)) throw ValidationError("gamma", "gamma must lie in [0, 1]");
  if (backend_timeout_ms < 1) throw ValidationError("backend_timeout_ms", "timeout must be > 0");
  if (max_new_tokens < 1) throw ValidationError("max_new_tokens", "max_new_tokens must be >= 1");
  if (corpus_path.empty() || !std::filesystem::exists(corpus_path)) {
    throw ValidationError("corpus", "corpus path '" + corpus_path.string() + "' does not exist");
  }
  if (log_path.empty()) throw ValidationError("log", "log path is required");
  auto parent = log_path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ValidationError("log", "log directory '" + parent.string() + "' does not exist");
  }
  if (!static_path.empty() && !std::filesystem::is_directory(static_path)) {
    throw ValidationError("static", "static path '" + static_path.string() + "' does not exist");
  }
}

ServiceConfig service_config_from_json(const json& j) {
  ServiceConfig c;
  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const json::exception&) {
      throw ValidationError(key, std::string("wrong type for config field ") + key);
    }
  };
  std::string corpus, log, stat;
  get("listen", c.listen);
  get("corpus", corpus);
  get("backend", c.backend);
  get("k", c.k);
  get("gamma", c.gamma);
  get("backend_timeout_ms", c.backend_timeout_ms);
  get("max_new_tokens", c.max_new_tokens);
  get("log", log);
  get("static", stat);
  get("scripted_replies", c.scripted_replies);
  get("seed", c.seed);
  c.corpus_path = corpus;
  c.log_path = log;
  c.static_path = stat;
  if (j.contains("study") && !j["study"].is_null()) {
    const auto& s = j["study"];
    StudyPlan plan;
    try {
      plan.annotators = s.value("annotators", plan.annotators);
      plan.per_task = s.value("per_task", plan.per_task);
      plan.seed = s.value("seed", plan.seed);
    } catch (const json::exception&) {
      throw ValidationError("study", "study must hold integer annotators, per_task, seed");
    }
    c.study = plan;
  }
  return c;
}

void apply_env_overrides(ServiceConfig& c, const EnvLookup& env) {
  auto number = [](const std::string& name, const std::string& v) {
    try {
      std::size_t used = 0;
      double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ValidationError(name, "environment override " + name + " is not a number");
    }
  };
  if (auto v = env("REVISE_LISTEN")) c.listen = *v;
  if (auto v = env("REVISE_CORPUS")) c.corpus_path = *v;
  if (auto v = env("REVISE_BACKEND")) c.backend = *v;
  if (auto v = env("REVISE_K")) c.k = static_cast<std::size_t>(number("REVISE_K", *v));
  if (auto v = env("REVISE_GAMMA")) c.gamma = number("REVISE_GAMMA", *v);
  if (auto v = env("REVISE_BACKEND_TIMEOUT_MS")) {
    c.backend_timeout_ms = static_cast<std::int64_t>(number("REVISE_BACKEND_TIMEOUT_MS", *v));
  }
  if (auto v = env("REVISE_MAX_NEW_TOKENS")) {
    c.max_new_tokens = static_cast<std::size_t>(number("REVISE_MAX_NEW_TOKENS", *v));
  }
  if (auto v = env("REVISE_LOG")) c.log_path = *v;
  if (auto v = env("REVISE_STATIC")) c.static_path = *v;
}

ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open config " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("config", "config " + path.string() + " is not a JSON object");
  }
  auto c = service_config_from_json(j);
  apply_env_overrides(c, env);
  c.validate();
  return c;
}

struct Service::Impl {
  ServiceConfig config;
  Vocabulary vocab;
  std::unique_ptr<GenerationBackend> backend;
  std::vector<DocumentEntry> documents;
  std::map<std::string, std::size_t> doc_index;
  StudyStore store;
  std::vector<AnnotatorAssignment> assignment;
  std::map<std::string, std::size_t> annotator_slot;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionState>> sessions;
  std::uint64_t next_session = 1;

  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;
  bool bound = false;

  explicit Impl(ServiceConfig cfg)
      : config((cfg.validate(), std::move(cfg))), store(config.log_path) {
    BackendOptions opts;
    opts.timeout = std::chrono::milliseconds(config.backend_timeout_ms);
    opts.scripted_replies = config.scripted_replies;
    opts.seed = config.seed;
    backend = make_backend(config.backend, vocab, opts);
    load_documents();
    restore_sessions();
    if (config.study) {
      std::vector<std::string> ids;
      for (const auto& d : documents) ids.push_back(d.id);
      assignment = assign_documents(ids, config.study->annotators, config.study->per_task,
                                    config.study->seed);
    }
    routes();
  }

  void load_documents() {
    for (auto& rec : read_corpus(config.corpus_path)) {
      if (doc_index.count(rec.id)) throw ValidationError("corpus", "duplicate id " + rec.id);
      DocumentEntry d;
      d.id = rec.id;
      d.text = rec.document;
      d.tokens = tokenize(rec.document, vocab);
      doc_index.emplace(d.id, documents.size());
      documents.push_back(std::move(d));
    }
    // One whole-summary generation per document, cached for the lifetime of
    // the service.
    for (auto& d : documents) {
      GenerationRequest r;
      r.mode = FimMode::kMiddle;
      r.document = d.tokens;
      r.num_suggestions = 1;
      r.max_new_tokens = config.max_new_tokens;
      try {
        auto out = backend->generate(r);
        if (!out.empty()) d.draft = detokenize(out.front().tokens, vocab);
      } catch (const std::exception& e) {
        std::cerr << "warning: no draft for document " << d.id << ": " << e.what() << '\n';
      }
    }
  }

  void restore_sessions() {
    for (const auto& s : store.snapshot().sessions) {
      auto state = std::make_shared<SessionState>();
      state->info = s;
      sessions.emplace(s.id, std::move(state));
    }
    next_session = sessions.size() + 1;
  }

  std::shared_ptr<SessionState> session(const std::string& id) {
    std::scoped_lock lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "unknown session " + id, "session_id"};
    return it->second;
  }

  const DocumentEntry& document(const std::string& id) const {
    auto it = doc_index.find(id);
    if (it == doc_index.end()) throw HttpError{404, "unknown document " + id, "document_id"};
    return documents[it->second];
  }

  std::vector<std::string> documents_for(const std::string& annotator, StudyTask task) {
    if (assignment.empty()) {
      std::vector<std::string> ids;
      for (const auto& d : documents) ids.push_back(d.id);
      return ids;
    }
    auto it = annotator_slot.find(annotator);
    if (it == annotator_slot.end()) {
      if (annotator_slot.size() >= assignment.size()) {
        throw HttpError{400, "all annotator slots of the study plan are taken", "annotator_id"};
      }
      it = annotator_slot.emplace(annotator, annotator_slot.size()).first;
    }
    const auto& a = assignment[it->second];
    switch (task) {
      case StudyTask::kWithInteraction: return a.with_interaction;
      case StudyTask::kWithoutInteraction: return a.without_interaction;
      case StudyTask::kEvaluation: return a.evaluation;
    }
    return {};
  }

  // Summaries an evaluator rates for one document, in blinded order.
  std::vector<std::pair<SummaryVariant, std::string>> evaluation_summaries(
      const DocumentEntry& doc, const StudyLog& log) const {
    std::vector<std::pair<SummaryVariant, std::string>> out;
    out.emplace_back(SummaryVariant::kDraft, doc.draft);
    const AnnotationRecord* without = nullptr;
    const AnnotationRecord* with = nullptr;
    for (const auto& a : log.annotations) {
      if (a.document_id != doc.id) continue;
      const Session* s = log.find_session(a.session_id);
      if (!s) continue;
      if (s->task == StudyTask::kWithoutInteraction) without = &a;
      if (s->task == StudyTask::kWithInteraction) with = &a;
    }
    if (without) out.emplace_back(SummaryVariant::kHumanNoInteraction, without->final_summary);
    if (with) out.emplace_back(SummaryVariant::kHumanWithInteraction, with->final_summary);
    SplitRng rng(config.seed, std::hash<std::string>{}(doc.id));
    for (std::size_t k = out.size(); k > 1; --k) std::swap(out[k - 1], out[rng.below(k)]);
    return out;
  }

  bool finished(const SessionState& st, const std::string& doc_id, const StudyLog& log) const {
    if (st.info.task != StudyTask::kEvaluation) {
      return log.find_annotation(st.info.id, doc_id) != nullptr;
    }
    auto summaries = evaluation_summaries(document(doc_id), log);
    return std::all_of(summaries.begin(), summaries.end(), [&](const auto& s) {
      return std::any_of(log.evaluations.begin(), log.evaluations.end(),
                         [&](const EvaluationRecord& e) {
                           return e.session_id == st.info.id && e.document_id == doc_id &&
                                  e.variant == s.first;
                         });
    });
  }

  // Serves document `index` and resets the per-document editing state.
  // Caller holds the session lock.
  ordered_json serve(SessionState& st, std::size_t index, const StudyLog& log) {
    st.cursor = index;
    const auto& doc = document(st.info.document_ids[index]);
    st.served_at = Clock::now();
    st.triggers = 0;
    st.choices.clear();
    st.pending.reset();
    ++st.ticket;

    ordered_json out;
    out["done"] = false;
    out["index"] = index;
    out["total"] = st.info.document_ids.size();
    out["document_id"] = doc.id;
    out["document"] = doc.text;
    if (st.info.task == StudyTask::kEvaluation) {
      st.slots.clear();
      ordered_json summaries = ordered_json::array();
      for (const auto& [variant, text] : evaluation_summaries(doc, log)) {
        ordered_json s;
        s["slot"] = st.slots.size();
        s["text"] = text;
        summaries.push_back(std::move(s));
        st.slots.push_back(variant);
      }
      out["summaries"] = std::move(summaries);
      out["issue_questions"] = default_issue_questions();
    } else {
      const auto* saved = log.find_annotation(st.info.id, doc.id);
      st.current_summary = saved ? saved->final_summary : doc.draft;
      out["draft_summary"] = doc.draft;
      out["summary"] = st.current_summary;
      out["suggestions_enabled"] = st.info.task == StudyTask::kWithInteraction;
    }
    return out;
  }

  ordered_json region_json(const FillRegion& region) const {
    ordered_json r;
    r["mode"] = to_string(region.mode);
    r["prefix"] = detokenize(region.prefix, vocab);
    r["human_start"] = detokenize(region.human_start, vocab);
    r["suffix"] = detokenize(region.suffix, vocab);
    r["replaced"] = detokenize(region.replaced, vocab);
    return r;
  }

  void handle_create(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    Session s;
    s.annotator_id = required<std::string>(body, "annotator_id");
    if (s.annotator_id.empty()) throw HttpError{400, "annotator_id is empty", "annotator_id"};
    try {
      s.task = parse_study_task(required<std::string>(body, "task"));
    } catch (const std::invalid_argument& e) {
      throw HttpError{400, e.what(), "task"};
    }
    s.created_at = iso8601_now();
    std::shared_ptr<SessionState> state = std::make_shared<SessionState>();
    {
      std::scoped_lock lock(sessions_mutex);
      if (body.contains("document_ids")) {
        s.document_ids = required<std::vector<std::string>>(body, "document_ids");
        for (const auto& id : s.document_ids) document(id);
      } else {
        s.document_ids = documents_for(s.annotator_id, s.task);
      }
      do {
        s.id = "s" + std::to_string(next_session++);
      } while (sessions.count(s.id));
      try {
        store.append(s);
      } catch (const ValidationError& e) {
        throw HttpError{400, e.what(), e.field()};
      }
      state->info = s;
      sessions.emplace(s.id, state);
    }
    ordered_json out;
    out["session_id"] = s.id;
    out["task"] = to_string(s.task);
    out["document_ids"] = s.document_ids;
    send_json(res, 200, out);
  }

  void handle_next(const std::string& id, httplib::Response& res) {
    auto st = session(id);
    std::scoped_lock lock(st->mutex);
    auto log = store.snapshot();
    for (std::size_t k = 0; k < st->info.document_ids.size(); ++k) {
      if (!finished(*st, st->info.document_ids[k], log)) {
        send_json(res, 200, serve(*st, k, log));
        return;
      }
    }
    st->cursor = kNoDocument;
    st->pending.reset();
    ordered_json out;
    out["done"] = true;
    out["total"] = st->info.document_ids.size();
    send_json(res, 200, out);
  }

  void handle_prev(const std::string& id, httplib::Response& res) {
    auto st = session(id);
    std::scoped_lock lock(st->mutex);
    if (st->info.document_ids.empty()) throw HttpError{409, "session has no documents", ""};
    std::size_t index;
    if (st->cursor == kNoDocument) index = st->info.document_ids.size() - 1;
    else index = st->cursor == 0 ? 0 : st->cursor - 1;
    send_json(res, 200, serve(*st, index, store.snapshot()));
  }

  void handle_suggest(const std::string& id, const httplib::Request& req,
                      httplib::Response& res) {
    auto st = session(id);
    auto body = parse_body(req);
    const auto new_text = required<std::string>(body, "new_summary");
    const bool regenerate = body.value("regenerate", false);

    std::string doc_id, old_text;
    std::uint64_t ticket;
    std::size_t trigger;
    {
      std::scoped_lock lock(st->mutex);
      if (st->info.task != StudyTask::kWithInteraction) {
        throw HttpError{403, "suggestions are disabled for this task", "task"};
      }
      if (st->cursor == kNoDocument) throw HttpError{409, "no document is being served", ""};
      doc_id = st->info.document_ids[st->cursor];
      old_text = body.contains("old_summary") ? required<std::string>(body, "old_summary")
                                              : st->current_summary;
    }
    EditEvent event;
    event.regenerate = regenerate;
    try {
      event.old_summary = tokenize(old_text, vocab);
    } catch (const TokenizeError& e) {
      throw HttpError{400, e.what(), "old_summary"};
    }
    try {
      event.new_summary = tokenize(new_text, vocab);
    } catch (const TokenizeError& e) {
      throw HttpError{400, e.what(), "new_summary"};
    }
    if (event.old_summary == event.new_summary && !regenerate) {
      throw HttpError{409, "no edit detected", ""};
    }
    {
      std::scoped_lock lock(st->mutex);
      ticket = ++st->ticket;
      trigger = st->triggers++;
      st->pending.reset();
    }

    const auto& doc = document(doc_id);
    EditEventRecord rec;
    rec.session_id = id;
    rec.document_id = doc_id;
    rec.trigger_index = trigger;
    SuggestionSet set;
    try {
      set = fimedit::suggest(event, doc.tokens, *backend,
                             SuggestOptions{config.k, config.max_new_tokens});
    } catch (const SuggestError& e) {
      rec.mode = to_string(e.region().mode);
      rec.prefix_len = e.region().prefix.size();
      rec.human_start_len = e.region().human_start.size();
      rec.suffix_len = e.region().suffix.size();
      rec.error = std::string(to_string(e.kind())) + ": " + e.what();
      store.append(rec);
      ordered_json out;
      out["error"] = e.what();
      out["kind"] = to_string(e.kind());
      out["region"] = region_json(e.region());
      send_json(res, e.kind() == BackendErrorKind::kTimeout ? 504 : 502, out);
      return;
    }

    rec.mode = to_string(set.region.mode);
    rec.prefix_len = set.region.prefix.size();
    rec.human_start_len = set.region.human_start.size();
    rec.suffix_len = set.region.suffix.size();
    rec.num_suggestions = set.suggestions.size();
    rec.latency_ms = set.latency_ms;

    ordered_json out;
    {
      std::scoped_lock lock(st->mutex);
      if (st->ticket != ticket) {
        throw HttpError{409, "superseded by a newer request", ""};
      }
      store.append(rec);
      out["trigger_index"] = trigger;
      out["region"] = region_json(set.region);
      ordered_json suggestions = ordered_json::array();
      ordered_json previews = ordered_json::array();
      for (std::size_t k = 0; k < set.suggestions.size(); ++k) {
        ordered_json s;
        s["text"] = detokenize(set.suggestions[k].tokens, vocab);
        s["score"] = set.suggestions[k].score;
        s["terminated"] = set.suggestions[k].terminated;
        suggestions.push_back(std::move(s));
        previews.push_back(detokenize(set.previews[k], vocab));
      }
      out["suggestions"] = std::move(suggestions);
      out["previews"] = std::move(previews);
      out["latency_ms"] = set.latency_ms;
      st->current_summary = new_text;
      st->pending = std::move(set);
      st->pending_trigger = trigger;
    }
    send_json(res, 200, out);
  }

  void handle_choose(const std::string& id, const httplib::Request& req,
                     httplib::Response& res) {
    auto st = session(id);
    auto body = parse_body(req);
    const auto index = required<std::int64_t>(body, "index");
    std::scoped_lock lock(st->mutex);
    if (!st->pending) throw HttpError{409, "no pending suggestions", ""};
    if (index < 0 || static_cast<std::size_t>(index) >= st->pending->previews.size()) {
      throw HttpError{400, "choice index out of range", "index"};
    }
    const auto choice = static_cast<std::size_t>(index);
    const auto summary = detokenize(apply_choice(*st->pending, choice), vocab);

    EditEventRecord rec;
    rec.session_id = id;
    rec.document_id = st->info.document_ids[st->cursor];
    rec.action = "choose";
    rec.trigger_index = st->pending_trigger;
    rec.choice = choice;
    rec.mode = to_string(st->pending->region.mode);
    rec.num_suggestions = st->pending->suggestions.size();
    store.append(rec);

    st->choices.emplace_back(st->pending_trigger, choice);
    st->current_summary = summary;
    st->pending.reset();
    ordered_json out;
    out["summary"] = summary;
    send_json(res, 200, out);
  }

  void handle_save(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto st = session(id);
    auto body = parse_body(req);
    std::scoped_lock lock(st->mutex);
    if (st->info.task == StudyTask::kEvaluation) {
      throw HttpError{400, "evaluation sessions submit through /evaluate", "task"};
    }
    if (st->cursor == kNoDocument) throw HttpError{409, "no document is being served", ""};
    const auto& doc = document(st->info.document_ids[st->cursor]);
    AnnotationRecord rec;
    rec.session_id = id;
    rec.document_id = doc.id;
    rec.draft_summary = doc.draft;
    rec.final_summary = body.contains("final_summary")
                            ? required<std::string>(body, "final_summary")
                            : st->current_summary;
    rec.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                           st->served_at)
                         .count();
    if (body.contains("client_active_ms")) {
      rec.client_active_ms = required<std::int64_t>(body, "client_active_ms");
    }
    rec.suggestion_triggers = st->triggers;
    rec.choices_taken = st->choices;
    try {
      store.append(rec);
    } catch (const ValidationError& e) {
      throw HttpError{400, e.what(), e.field()};
    }
    st->current_summary = rec.final_summary;
    ordered_json out;
    out["saved"] = true;
    out["document_id"] = doc.id;
    out["elapsed_ms"] = rec.elapsed_ms;
    send_json(res, 200, out);
  }

  void handle_evaluate(const std::string& id, const httplib::Request& req,
                       httplib::Response& res) {
    auto st = session(id);
    auto body = parse_body(req);
    std::scoped_lock lock(st->mutex);
    if (st->info.task != StudyTask::kEvaluation) {
      throw HttpError{400, "only evaluation sessions can evaluate", "task"};
    }
    if (st->cursor == kNoDocument) throw HttpError{409, "no document is being served", ""};
    const auto doc_id = st->info.document_ids[st->cursor];
    if (body.contains("document_id") && required<std::string>(body, "document_id") != doc_id) {
      throw HttpError{409, "document_id is not the document being served", "document_id"};
    }
    const auto slot = required<std::int64_t>(body, "slot");
    if (slot < 0 || static_cast<std::size_t>(slot) >= st->slots.size()) {
      throw HttpError{400, "slot out of range", "slot"};
    }
    EvaluationRecord rec;
    rec.session_id = id;
    rec.document_id = doc_id;
    rec.variant = st->slots[static_cast<std::size_t>(slot)];
    if (!body.contains("rating") || !body["rating"].is_number_integer()) {
      throw HttpError{400, "rating must be an integer", "rating"};
    }
    rec.rating = body["rating"].get<int>();
    auto issues = required<std::vector<bool>>(body, "issues");
    if (issues.size() != kNumIssues) throw HttpError{400, "exactly 7 issue flags", "issues"};
    std::copy(issues.begin(), issues.end(), rec.issues.begin());
    try {
      rec.verdict = parse_verdict(required<std::string>(body, "verdict"));
    } catch (const std::invalid_argument& e) {
      throw HttpError{400, e.what(), "verdict"};
    }
    try {
      store.append(rec);
    } catch (const ValidationError& e) {
      throw HttpError{400, e.what(), e.field()};
    }
    ordered_json out;
    out["saved"] = true;
    out["document_id"] = doc_id;
    out["slot"] = slot;
    send_json(res, 200, out);
  }

  void handle_stats(const httplib::Request& req, httplib::Response& res) {
    auto agg = aggregate(store.snapshot());
    if (req.get_param_value("format") == "table") {
      res.set_content(render_table(agg), "text/plain; charset=utf-8");
      return;
    }
    send_json(res, 200, agg.to_json());
  }

  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e);
      } catch (const ValidationError& e) {
        send_error(res, {400, e.what(), e.field()});
      } catch (const StorageError& e) {
        send_error(res, {500, e.what(), ""});
      } catch (const std::exception& e) {
        send_error(res, {500, e.what(), ""});
      }
    };
  }

  void routes() {
    server.Post("/api/sessions", guarded([this](const auto& req, auto& res) {
                  handle_create(req, res);
                }));
    server.Get(R"(/api/sessions/([^/]+)/next)", guarded([this](const auto& req, auto& res) {
                 handle_next(req.matches[1], res);
               }));
    server.Get(R"(/api/sessions/([^/]+)/prev)", guarded([this](const auto& req, auto& res) {
                 handle_prev(req.matches[1], res);
               }));
    server.Post(R"(/api/sessions/([^/]+)/suggest)", guarded([this](const auto& req, auto& res) {
                  handle_suggest(req.matches[1], req, res);
                }));
    server.Post(R"(/api/sessions/([^/]+)/choose)", guarded([this](const auto& req, auto& res) {
                  handle_choose(req.matches[1], req, res);
                }));
    server.Post(R"(/api/sessions/([^/]+)/save)", guarded([this](const auto& req, auto& res) {
                  handle_save(req.matches[1], req, res);
                }));
    server.Post(R"(/api/sessions/([^/]+)/evaluate)", guarded([this](const auto& req, auto& res) {
                  handle_evaluate(req.matches[1], req, res);
                }));
    server.Get("/api/stats", guarded([this](const auto& req, auto& res) {
                 handle_stats(req, res);
               }));
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json out;
      out["status"] = "ok";
      out["backend"] = backend->name();
      out["documents"] = documents.size();
      out["k"] = config.k;
      out["gamma"] = config.gamma;
      send_json(res, 200, out);
    });
    if (!config.static_path.empty()) server.set_mount_point("/", config.static_path.string());
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind() {
  auto [host, port] = split_listen(impl_->config.listen);
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) throw std::runtime_error("cannot bind " + impl_->config.listen);
  impl_->bound = true;
  return impl_->port;
}

void Service::run() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void Service::start() {
  if (!impl_->bound) bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->port; }

std::string Service::address() const {
  return impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace fimedit
