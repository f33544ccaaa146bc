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
#include "forge/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "forge/error.hpp"

namespace forge::llm {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.';
}

// Calls `on_text` for literal runs and `on_field` for placeholder names.
template <typename OnText, typename OnField>
void scan_template(const std::string& body, OnText on_text, OnField on_field) {
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
      on_text(std::string_view(&body[i], 1));
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < body.size() && is_ident_start(body[i + 1])) {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}') {
        on_field(body.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(std::string_view(&body[i], 1));
    ++i;
  }
}

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error("unsupported URL scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
    out.path = "/";
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.scheme_host_port.size() <= scheme_end + 3) throw Error("endpoint URL has no host: " + url);
  return out;
}

Completion complete_one(const EndpointConfig& cfg, const std::string& prompt,
                        const std::string& request_id) {
  Completion result;
  ParsedUrl target;
  try {
    cfg.validate();
    target = parse_url(cfg.url);
  } catch (const Error& e) {
    result.error = e.what();
    return result;
  }

  httplib::Client client(target.scheme_host_port);
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers{{"X-Request-Id", request_id}};
  if (cfg.auth_token) headers.emplace("Authorization", "Bearer " + *cfg.auth_token);
  const std::string body = nlohmann::json{{"prompt", prompt}, {"max_tokens", cfg.max_tokens}}.dump();

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = static_cast<long long>(cfg.backoff_ms) << std::min(attempt - 1, 16);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    ++result.attempts;
    auto res = client.Post(target.path, headers, body, "application/json");
    if (!res) {
      result.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    result.last_status = res->status;
    if (res->status >= 500) {
      result.error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      result.error = "request rejected with status " + std::to_string(res->status);
      return result;
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("text") ||
        !parsed["text"].is_string()) {
      result.error = "response body lacks a string \"text\" field";
      return result;
    }
    result.ok = true;
    result.error.clear();
    result.text = parsed["text"].get<std::string>();
    return result;
  }
  return result;
}

}  // namespace

std::string build_prompt(const PromptTemplate& tmpl,
                         const std::map<std::string, std::string>& fields) {
  std::string out;
  out.reserve(tmpl.body.size());
  scan_template(
      tmpl.body, [&](std::string_view text) { out.append(text); },
      [&](const std::string& name) {
        auto it = fields.find(name);
        if (it == fields.end()) throw Error("unbound placeholder: " + name);
        out.append(it->second);
      });
  return out;
}

std::vector<std::string> placeholders(const PromptTemplate& tmpl) {
  std::vector<std::string> names;
  scan_template(
      tmpl.body, [](std::string_view) {},
      [&](const std::string& name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      });
  return names;
}

const PromptTemplate& desc_rewrite_template() {
  static const PromptTemplate kTemplate{
      "desc_rewrite", "desc-v1",
      "You are given the scene graph of an image and the same objects grouped into depth "
      "layers ordered from near to far.\n\n"
      "Scene graph triplets:\n{scene_graph}\n\n"
      "Layered layout:\n{layout}\n\n"
      "Rewrite the layered layout as a fluent spatial description. Keep one \"Layer k:\" "
      "heading per layer in the same order, mention every object and relation listed for that "
      "layer, and do not introduce objects that are not listed."};
  return kTemplate;
}

void EndpointConfig::validate() const {
  if (timeout_ms <= 0) throw Error("llm.timeout_ms must be positive");
  if (max_retries < 0) throw Error("llm.max_retries must be non-negative");
  if (concurrency <= 0) throw Error("llm.concurrency must be positive");
  if (backoff_ms < 0) throw Error("llm backoff must be non-negative");
  parse_url(url);
}

std::optional<std::string> auth_token_from_env() {
  const char* value = std::getenv("FORGE_LLM_API_KEY");
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

Completion complete(const EndpointConfig& cfg, const std::string& prompt) {
  return complete_one(cfg, prompt, "0");
}

std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                       const std::vector<std::string>& prompts) {
  std::vector<Completion> results(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      results[i] = complete_one(cfg, prompts[i], std::to_string(i));
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.concurrency, 1)),
                                       prompts.size());
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

Rewriter make_rewriter(EndpointConfig cfg) {
  return [cfg = std::move(cfg)](const std::string& prompt) -> std::optional<std::string> {
    auto result = complete(cfg, prompt);
    if (!result.ok) return std::nullopt;
    return result.text;
  };
}

}  // namespace forge::llm
