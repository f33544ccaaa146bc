// Copyright 2026 The Forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge::llm {

/// Text with `{name}` placeholders. `{{` and `}}` stand for literal braces;
/// any other brace that does not open an identifier is copied as is.
struct PromptTemplate {
  std::string id;
  std::string version;
  std::string body;
};

/// Substitutes every placeholder in one pass, so braces inside values are
/// never reinterpreted. Throws on the first placeholder without a value.
std::string build_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& fields);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(const PromptTemplate& tmpl);

/// Rewrites a templated layered description into fluent prose.
const PromptTemplate& desc_rewrite_template();

struct EndpointConfig {
  std::string url;
  int timeout_ms = 30000;
  int max_retries = 2;
  int max_tokens = 1024;
  int backoff_ms = 200;
  int concurrency = 4;
  std::optional<std::string> auth_token;

  /// Throws when timeout_ms <= 0, max_retries < 0 or the URL is unusable.
  void validate() const;
};

/// Reads the bearer token from FORGE_LLM_API_KEY when set.
std::optional<std::string> auth_token_from_env();

struct Completion {
  bool ok = false;
  std::string text;
  std::string error;
  int attempts = 0;
  int last_status = 0;
};

/// POSTs {"prompt", "max_tokens"} and expects {"text"}. Timeouts, transport
/// errors and 5xx responses are retried with exponential backoff; 4xx and
/// malformed bodies fail immediately.
Completion complete(const EndpointConfig& cfg, const std::string& prompt);

/// Runs up to cfg.concurrency requests at once. Result i answers prompt i.
std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                       const std::vector<std::string>& prompts);

/// Function from prompt to rewritten text; nullopt means "use the template".
using Rewriter = std::function<std::optional<std::string>(const std::string& prompt)>;

Rewriter make_rewriter(EndpointConfig cfg);

}  // namespace forge::llm
