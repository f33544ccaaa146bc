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
#include "forge/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"

namespace forge {

namespace {

using nlohmann::json;

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw SchemaError(key, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw SchemaError(key, "expected an integer");
  return v.get<int>();
}

void apply_llm_key(llm::EndpointConfig& cfg, const std::string& key, const json& v) {
  const std::string full = "llm." + key;
  if (key == "url") {
    if (!v.is_string()) throw SchemaError(full, "expected a string");
    cfg.url = v.get<std::string>();
  } else if (key == "timeout_ms") {
    cfg.timeout_ms = as_int(v, full);
  } else if (key == "max_retries") {
    cfg.max_retries = as_int(v, full);
  } else if (key == "concurrency") {
    cfg.concurrency = as_int(v, full);
  } else if (key == "max_tokens") {
    cfg.max_tokens = as_int(v, full);
  } else if (key == "backoff_ms") {
    cfg.backoff_ms = as_int(v, full);
  } else {
    throw SchemaError(full, "unknown config key");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(fov_deg > 0 && fov_deg < 180)) throw SchemaError("fov_deg", "must lie in (0, 180)");
  if (!(trim_pct >= 0 && trim_pct < 50)) throw SchemaError("trim_pct", "must lie in [0, 50)");
  if (!(eps_rel >= 0) || !std::isfinite(eps_rel)) throw SchemaError("eps_rel", "must be >= 0");
  if (!(margin_frac >= 0 && margin_frac < 1)) throw SchemaError("margin_frac", "must lie in [0, 1)");
  if (!(depth_scale > 0) || !std::isfinite(depth_scale)) {
    throw SchemaError("depth_scale", "must be positive");
  }
  if (!(iou > 0 && iou <= 1)) throw SchemaError("iou", "must lie in (0, 1]");
  if (qa_per_scene == 0) throw SchemaError("qa_per_scene", "must be at least 1");
  if (topk && *topk == 0) throw SchemaError("topk", "must be at least 1");
  for (double r : rotation) {
    if (!std::isfinite(r)) throw SchemaError("rotation", "entries must be finite");
  }
  if (llm_enabled()) {
    try {
      llm.validate();
    } catch (const Error& e) {
      throw SchemaError("llm", e.what());
    }
  }
}

PipelineConfig parse_config(std::string_view json_text, PipelineConfig cfg) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) throw SchemaError("<config>", "expected a JSON object");
  for (const auto& [key, v] : root.items()) {
    if (key == "fov_deg") {
      cfg.fov_deg = as_number(v, key);
    } else if (key == "trim_pct") {
      cfg.trim_pct = as_number(v, key);
    } else if (key == "eps_rel") {
      cfg.eps_rel = as_number(v, key);
    } else if (key == "margin_frac") {
      cfg.margin_frac = as_number(v, key);
    } else if (key == "depth_scale") {
      cfg.depth_scale = as_number(v, key);
    } else if (key == "depth_mode") {
      auto mode = v.is_string() ? scene::parse_depth_mode(v.get<std::string>()) : std::nullopt;
      if (!mode) throw SchemaError(key, "expected \"linear\" or \"inverse\"");
      cfg.depth_mode = *mode;
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw SchemaError(key, "expected a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "topk") {
      if (v.is_null()) {
        cfg.topk.reset();
      } else {
        if (!v.is_number_unsigned()) throw SchemaError(key, "expected a positive integer");
        cfg.topk = v.get<std::size_t>();
      }
    } else if (key == "iou") {
      cfg.iou = as_number(v, key);
    } else if (key == "qa_per_scene") {
      if (!v.is_number_unsigned()) throw SchemaError(key, "expected a positive integer");
      cfg.qa_per_scene = v.get<std::size_t>();
    } else if (key == "jobs") {
      if (!v.is_number_unsigned()) throw SchemaError(key, "expected a non-negative integer");
      cfg.jobs = v.get<unsigned>();
    } else if (key == "rotation") {
      if (v.is_null()) {
        cfg.rotation = geometry::kIdentityRotation;
        continue;
      }
      if (!v.is_array() || v.size() != 9) throw SchemaError(key, "expected 9 numbers, row-major");
      for (std::size_t i = 0; i < 9; ++i) cfg.rotation[i] = as_number(v[i], key);
    } else if (key == "relation_vocab") {
      if (!v.is_array()) throw SchemaError(key, "expected a list of strings");
      cfg.relation_vocab.clear();
      for (const auto& item : v) {
        if (!item.is_string()) throw SchemaError(key, "expected a list of strings");
        cfg.relation_vocab.push_back(item.get<std::string>());
      }
    } else if (key == "llm") {
      if (!v.is_object()) throw SchemaError(key, "expected an object");
      for (const auto& [sub, sv] : v.items()) apply_llm_key(cfg.llm, sub, sv);
    } else if (key.rfind("llm.", 0) == 0) {
      apply_llm_key(cfg.llm, key.substr(4), v);
    } else {
      throw SchemaError(key, "unknown config key");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace forge
