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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fimedit {

struct StudyPlan {
  std::size_t annotators = 3;
  std::size_t per_task = 40;
  std::uint64_t seed = 0;
};

struct ServiceConfig {
  std::string listen = "127.0.0.1:8080";  // host:port, port 0 picks a free one
  std::filesystem::path corpus_path;
  std::string backend = "heuristic";  // scripted | scripted:<file> | heuristic | remote:<url>
  std::size_t k = 3;
  double gamma = 0.5;
  std::int64_t backend_timeout_ms = 10000;
  std::size_t max_new_tokens = 64;
  std::filesystem::path log_path;
  std::filesystem::path static_path;  // optional portal bundle
  std::vector<std::string> scripted_replies;
  // When set, sessions draw their documents from a rotated assignment;
  // otherwise every session gets the whole corpus.
  std::optional<StudyPlan> study;
  std::uint64_t seed = 0;  // evaluation-order blinding

  /// Throws ValidationError naming the field.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

/// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

ServiceConfig service_config_from_json(const nlohmann::json& j);
/// REVISE_LISTEN, REVISE_CORPUS, REVISE_BACKEND, REVISE_K, REVISE_GAMMA,
/// REVISE_BACKEND_TIMEOUT_MS, REVISE_MAX_NEW_TOKENS, REVISE_LOG, REVISE_STATIC.
void apply_env_overrides(ServiceConfig& config, const EnvLookup& env);
ServiceConfig load_service_config(const std::filesystem::path& path,
                                  const EnvLookup& env = process_env);

/// The portal's HTTP/JSON API. Documents and drafts are loaded at
/// construction; `bind` then `run` (blocking) or `start` (background).
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listen address and returns the bound port.
  int bind();
  void run();
  void start();
  void stop();
  int port() const;
  std::string address() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fimedit
