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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "forge/config.hpp"
#include "forge/scene.hpp"
#include "forge/spatial.hpp"

namespace forge::pipeline {

/// One scene after geometry and relation extraction.
struct ProcessedScene {
  scene::SceneRecord scene;
  std::vector<spatial::ObjectGeometry> objects;
  std::vector<spatial::SpatialRelation> relations;
  spatial::LayerAssignment layers;
  std::vector<std::vector<scene::Triplet>> grouped;
  double eps = 0;
};

/// Runs geometry and spatial extraction on a scene that already carries its
/// depth map. Throws when validation fails or an object has no usable depth.
ProcessedScene analyze_scene(scene::SceneRecord scene, const PipelineConfig& cfg);

/// Loads the scene's depth map, then analyzes it.
ProcessedScene process_scene(scene::SceneRecord skeleton, const PipelineConfig& cfg,
                             const std::filesystem::path& depth_dir);

struct SceneOutcome {
  scene::ImageId image_id = 0;
  std::optional<ProcessedScene> result;
  std::string error;
};

/// Processes every skeleton on a worker pool. Outcomes keep input order and a
/// failing scene never stops the others.
std::vector<SceneOutcome> process_all(std::vector<scene::SceneRecord> skeletons,
                                      const PipelineConfig& cfg,
                                      const std::filesystem::path& depth_dir);

/// {"image_id", "a", "b", "kind"} lines.
std::vector<std::string> relation_lines(const ProcessedScene& scene);
/// {"image_id", "layers": [{"basic", "members", "depth_key"}]}
std::string layers_line(const ProcessedScene& scene);

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNoInput = 2;

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
};

struct ExtractOptions {
  std::filesystem::path annotations;
  std::filesystem::path depth_dir;
  std::filesystem::path out_dir;
};
int cmd_extract(const ExtractOptions& opts, const PipelineConfig& cfg, CommandIo io);

struct SynthesizeOptions {
  std::filesystem::path annotations;
  std::filesystem::path depth_dir;
  std::filesystem::path out_dir;
  std::vector<std::string> tasks{"desc", "qa", "conv"};
};
int cmd_synthesize(const SynthesizeOptions& opts, const PipelineConfig& cfg, CommandIo io);

struct EvaluateOptions {
  std::filesystem::path predictions;
  std::filesystem::path gold;
  std::filesystem::path out;
};
int cmd_evaluate_sgg(const EvaluateOptions& opts, const PipelineConfig& cfg, CommandIo io);
int cmd_evaluate_qa(const EvaluateOptions& opts, CommandIo io);

struct StatsOptions {
  std::filesystem::path annotations;
  std::optional<std::filesystem::path> depth_dir;
  std::optional<std::filesystem::path> out;
};
int cmd_stats(const StatsOptions& opts, const PipelineConfig& cfg, CommandIo io);

}  // namespace forge::pipeline
