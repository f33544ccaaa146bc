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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/llm_client.hpp"
#include "forge/scene.hpp"

namespace forge {

/// Every tunable of the pipeline. Precedence is flag > config file > default.
struct PipelineConfig {
  double fov_deg = 60.0;
  double trim_pct = 5.0;
  double eps_rel = 1e-6;
  double margin_frac = 0.05;
  double depth_scale = 0.001;
  scene::DepthMode depth_mode = scene::DepthMode::kLinear;
  std::uint64_t seed = 0;
  std::optional<std::size_t> topk;
  double iou = 0.5;
  geometry::Rotation rotation = geometry::kIdentityRotation;
  std::size_t qa_per_scene = 4;
  std::vector<std::string> relation_vocab;  // empty means the built-in list
  unsigned jobs = 0;                        // 0 means one per logical CPU
  llm::EndpointConfig llm;                  // disabled while llm.url is empty

  bool llm_enabled() const { return !llm.url.empty(); }
  /// Throws SchemaError naming the first key whose value is out of range.
  void validate() const;
};

/// Applies the keys of a JSON config document on top of `base`. Keys under
/// "llm" may be nested ({"llm": {"url": ...}}) or dotted ("llm.url").
PipelineConfig parse_config(std::string_view json_text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

}  // namespace forge
