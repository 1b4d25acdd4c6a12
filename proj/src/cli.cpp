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

#include "fimedit/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "fimedit/backend.hpp"
#include "fimedit/datagen.hpp"
#include "fimedit/eval_metrics.hpp"
#include "fimedit/service.hpp"
#include "fimedit/study_store.hpp"

namespace fimedit {
namespace {

constexpr int kUsageError = 2;

std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  return out.string() + ".manifest.json";
}

std::unique_ptr<LMScorer> make_scorer(const std::string& spec, Vocabulary& vocab,
                                      std::chrono::milliseconds timeout) {
  if (spec.rfind("ngram:", 0) == 0) {
    auto corpus = read_corpus(spec.substr(6));
    std::vector<TokenSeq> sentences;
    for (const auto& r : corpus) {
      sentences.push_back(tokenize(r.summary, vocab));
      sentences.push_back(tokenize(r.document, vocab));
    }
    return std::make_unique<NgramScorer>(NgramScorer::train(sentences));
  }
  if (spec.rfind("remote:", 0) == 0) {
    return std::make_unique<RemoteScorer>(spec.substr(7), vocab, timeout);
  }
  throw std::invalid_argument("unknown scorer '" + spec + "' (want ngram:<corpus> or remote:<url>)");
}

std::unique_ptr<GenerationBackend> cli_backend(const std::string& spec, Vocabulary& vocab,
                                               std::span<const EvalItem> items, EvalTask task,
                                               std::uint64_t seed,
                                               std::chrono::milliseconds timeout) {
  if (spec == "scripted:echo") return make_echo_backend(items, task);
  BackendOptions opts;
  opts.seed = seed;
  opts.timeout = timeout;
  return make_backend(spec, vocab, opts);
}

std::atomic<Service*> g_service{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fimedit: fill-in-the-middle summary editing toolkit", "fimedit"};
  app.require_subcommand(1);

  std::string corpus, out_path, manifest;
  GenConfig gen;
  auto* datagen = app.add_subcommand("datagen", "Build mixed-mode infilling training examples");
  datagen->add_option("--corpus", corpus, "JSON-lines corpus {id, document, summary}")
      ->required();
  datagen->add_option("--out", out_path, "Output examples (JSON lines)")->required();
  datagen->add_option("--gamma", gen.gamma, "Share of Begin/End corner cases")
      ->capture_default_str();
  datagen->add_option("--seed", gen.seed)->capture_default_str();
  datagen->add_option("--min-middle-len", gen.min_middle_len)->capture_default_str();
  datagen->add_option("--manifest", manifest, "Manifest path (default <out>.manifest.json)");

  std::string testset, backend_spec = "heuristic", mode = "middle";
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 64;
  std::int64_t timeout_ms = 10000;
  auto* eval_fim_cmd = app.add_subcommand("eval-fim", "ROUGE of infilled segments");
  eval_fim_cmd->add_option("--testset", testset)->required();
  eval_fim_cmd
      ->add_option("--backend", backend_spec,
                   "heuristic | scripted | scripted:<file> | scripted:echo | random[:seed] | "
                   "remote:<url>")
      ->capture_default_str();
  eval_fim_cmd->add_option("--mode", mode, "middle | begin | end | all")
      ->check(CLI::IsMember({"middle", "begin", "end", "all"}))
      ->capture_default_str();
  eval_fim_cmd->add_option("--seed", seed)->capture_default_str();
  eval_fim_cmd->add_option("--max-new-tokens", max_new_tokens)->capture_default_str();
  eval_fim_cmd->add_option("--timeout-ms", timeout_ms)->capture_default_str();

  std::string scorer_spec, generator_spec;
  std::size_t horizon = 10;
  auto* eval_coh = app.add_subcommand("eval-coherence", "l1/l2 coherence of middles");
  eval_coh->add_option("--testset", testset)->required();
  eval_coh->add_option("--scorer", scorer_spec, "ngram:<corpus> | remote:<url>")->required();
  eval_coh->add_option("--horizon", horizon)->capture_default_str();
  eval_coh->add_option("--backend", generator_spec, "Generate middles instead of golden ones");
  eval_coh->add_option("--seed", seed)->capture_default_str();
  eval_coh->add_option("--timeout-ms", timeout_ms)->capture_default_str();

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the study HTTP service");
  serve->add_option("--config", config_path)->required();

  std::string log_path, format = "json";
  auto* stats = app.add_subcommand("stats", "Aggregate a study log");
  stats->add_option("--log", log_path)->required();
  stats->add_option("--format", format)->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    if (*datagen) {
      gen.validate();
      auto records = read_corpus(corpus);
      Vocabulary vocab;
      auto result = generate_training_set(records, vocab, gen);
      write_examples(result.examples, vocab, out_path);
      auto m = make_manifest(gen, records, result);
      const auto mpath = manifest.empty() ? manifest_path_for(out_path)
                                          : std::filesystem::path(manifest);
      std::ofstream mf(mpath);
      mf << m.dump(2) << '\n';
      if (!mf) throw std::runtime_error("cannot write manifest " + mpath.string());
      out << m.dump() << '\n';
      return 0;
    }
    if (*eval_fim_cmd) {
      const auto task = parse_eval_task(mode);
      Vocabulary vocab;
      auto set = make_eval_set(read_corpus(testset), vocab, task, seed);
      auto backend = cli_backend(backend_spec, vocab, set.items, task, seed, timeout);
      auto report = eval_fim(set.items, *backend, task, max_new_tokens);
      auto j = report.to_json();
      j["backend"] = backend->name();
      j["seed"] = seed;
      j["n_skipped"] = set.skipped_ids.size();
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*eval_coh) {
      Vocabulary vocab;
      auto scorer = make_scorer(scorer_spec, vocab, timeout);
      auto set = make_eval_set(read_corpus(testset), vocab, EvalTask::kMiddle, seed);
      std::unique_ptr<GenerationBackend> generator;
      if (!generator_spec.empty()) {
        generator = cli_backend(generator_spec, vocab, set.items, EvalTask::kMiddle, seed, timeout);
      }
      CoherenceConfig cfg;
      cfg.horizon = horizon;
      auto report = eval_coherence(set.items, *scorer, cfg, generator.get());
      auto j = report.to_json();
      j["scorer"] = scorer->name();
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*serve) {
      auto cfg = load_service_config(config_path);
      Service service(cfg);
      service.bind();
      g_service.store(&service);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      err << "listening on " << service.address() << '\n';
      service.run();
      g_service.store(nullptr);
      return 0;
    }
    if (*stats) {
      auto agg = aggregate(read_study_log(log_path));
      if (format == "table") out << render_table(agg);
      else out << agg.to_json().dump(2) << '\n';
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.field() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}

}  // namespace fimedit
