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
#include <doctest.h>

#include <atomic>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "forge/error.hpp"
#include "forge/llm_client.hpp"

namespace {

using namespace forge::llm;

// Local HTTP server that answers according to `handler`, counting requests.
class MockEndpoint {
 public:
  using Handler = std::function<void(int call, const httplib::Request&, httplib::Response&)>;

  explicit MockEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = ++calls_;
      {
        std::lock_guard<std::mutex> lock(mu_);
        request_ids_.insert(req.get_header_value("X-Request-Id"));
        last_auth_ = req.get_header_value("Authorization");
      }
      handler_(call, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig config() const {
    EndpointConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete";
    cfg.timeout_ms = 2000;
    cfg.backoff_ms = 1;
    return cfg;
  }
  int calls() const { return calls_; }
  std::size_t distinct_request_ids() {
    std::lock_guard<std::mutex> lock(mu_);
    return request_ids_.size();
  }
  std::string last_auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return last_auth_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::mutex mu_;
  std::set<std::string> request_ids_;
  std::string last_auth_;
};

void echo(int, const httplib::Request& req, httplib::Response& res) {
  const auto body = nlohmann::json::parse(req.body);
  res.set_content(nlohmann::json{{"text", body.at("prompt")}}.dump(), "application/json");
}

}  // namespace

TEST_CASE("prompt substitution") {
  const PromptTemplate t{"t", "v1", "Describe {scene}"};
  CHECK(build_prompt(t, {{"scene", "X"}}) == "Describe X");
  CHECK_THROWS_WITH_AS(build_prompt(t, {}), "unbound placeholder: scene", forge::Error);
  CHECK(build_prompt(t, {{"scene", "{layout} and {{x}}"}}) == "Describe {layout} and {{x}}");
  const PromptTemplate braces{"t", "v1", "{{literal}} {a}{b} { not } {}"};
  CHECK(build_prompt(braces, {{"a", "1"}, {"b", "2"}}) == "{literal} 12 { not } {}");
  CHECK(placeholders(braces) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("description template is versioned and binds two fields") {
  const auto& t = desc_rewrite_template();
  CHECK(t.version == "desc-v1");
  CHECK(placeholders(t) == std::vector<std::string>{"scene_graph", "layout"});
}

TEST_CASE("echo endpoint returns the prompt") {
  MockEndpoint mock(echo);
  auto cfg = mock.config();
  cfg.auth_token = "secret";
  const auto r = complete(cfg, "hello {world}");
  CHECK(r.ok);
  CHECK(r.text == "hello {world}");
  CHECK(r.attempts == 1);
  CHECK(r.last_status == 200);
  CHECK(mock.last_auth() == "Bearer secret");
}

TEST_CASE("server errors are retried with backoff") {
  MockEndpoint mock([](int call, const httplib::Request& req, httplib::Response& res) {
    if (call <= 2) {
      res.status = 503;
      return;
    }
    echo(call, req, res);
  });
  auto cfg = mock.config();
  cfg.max_retries = 3;
  const auto r = complete(cfg, "p");
  CHECK(r.ok);
  CHECK(r.attempts == 3);
  CHECK(mock.calls() == 3);
}

TEST_CASE("no retries means one attempt") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto cfg = mock.config();
  cfg.max_retries = 0;
  const auto r = complete(cfg, "p");
  CHECK_FALSE(r.ok);
  CHECK(r.attempts == 1);
  CHECK(mock.calls() == 1);
  CHECK(r.last_status == 500);
}

TEST_CASE("request count never exceeds max_retries + 1") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { res.status = 502; });
  for (int retries : {1, 2, 4}) {
    auto cfg = mock.config();
    cfg.max_retries = retries;
    const int before = mock.calls();
    const auto r = complete(cfg, "p");
    CHECK_FALSE(r.ok);
    CHECK(r.attempts == retries + 1);
    CHECK(mock.calls() - before == retries + 1);
  }
}

TEST_CASE("client errors and malformed bodies are not retried") {
  MockEndpoint rejecting([](int, const httplib::Request&, httplib::Response& res) { res.status = 401; });
  auto cfg = rejecting.config();
  cfg.max_retries = 3;
  auto r = complete(cfg, "p");
  CHECK_FALSE(r.ok);
  CHECK(r.attempts == 1);
  CHECK(r.error.find("401") != std::string::npos);

  MockEndpoint garbled([](int, const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  cfg = garbled.config();
  cfg.max_retries = 3;
  r = complete(cfg, "p");
  CHECK_FALSE(r.ok);
  CHECK(r.attempts == 1);
}

TEST_CASE("unreachable endpoint exhausts its retries") {
  EndpointConfig cfg;
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/x";
  cfg.timeout_ms = 500;
  cfg.backoff_ms = 1;
  cfg.max_retries = 2;
  const auto r = complete(cfg, "p");
  CHECK_FALSE(r.ok);
  CHECK(r.attempts == 3);
  CHECK(r.error.find("transport error") == 0);
}

TEST_CASE("invalid endpoint configs fail without a request") {
  EndpointConfig cfg;
  cfg.url = "ftp://host/x";
  auto r = complete(cfg, "p");
  CHECK_FALSE(r.ok);
  CHECK(r.attempts == 0);
  cfg.url = "http://localhost/x";
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), forge::Error);
}

TEST_CASE("batch completion keeps prompt order") {
  MockEndpoint mock(echo);
  auto cfg = mock.config();
  cfg.concurrency = 3;
  std::vector<std::string> prompts;
  for (int i = 0; i < 12; ++i) prompts.push_back("prompt " + std::to_string(i));
  const auto results = complete_batch(cfg, prompts);
  REQUIRE(results.size() == prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    CHECK(results[i].ok);
    CHECK(results[i].text == prompts[i]);
  }
  CHECK(mock.distinct_request_ids() == prompts.size());
}

TEST_CASE("rewriter maps failures to nullopt") {
  MockEndpoint mock([](int, const httplib::Request&, httplib::Response& res) { res.status = 400; });
  auto rewrite = make_rewriter(mock.config());
  CHECK_FALSE(rewrite("p").has_value());
}
