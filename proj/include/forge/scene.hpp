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
#include <span>
#include <string>
#include <vector>

namespace forge::scene {

using ObjectId = std::int64_t;
using ImageId = std::int64_t;

struct ImageMeta {
  ImageId id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::string depth_file;

  bool operator==(const ImageMeta&) const = default;
};

/// Axis-aligned box in COCO convention: top-left corner plus extent.
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  bool operator==(const Box&) const = default;
};

/// Dense binary bitmap, row-major, one byte per pixel (0 or 1).
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  bool at(int u, int v) const {
    return data[static_cast<std::size_t>(v) * width + u] != 0;
  }
  std::size_t count() const;
};

/// COCO run-length mask. Runs alternate 0/1 starting with 0 and walk the image
/// in column-major order.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  static RleMask encode(const Bitmap& bitmap);
  /// Parses the compressed COCO counts string.
  static RleMask from_string(std::string_view counts, int height, int width);
  std::string to_string() const;

  Bitmap decode() const;
  std::uint64_t area() const;
  /// Tight box around the foreground pixels; nullopt for an empty mask.
  std::optional<Box> tight_box() const;

  bool operator==(const RleMask&) const = default;
};

struct ObjectInstance {
  ObjectId id = 0;
  ImageId image_id = 0;
  std::int64_t category_id = 0;
  std::string label;
  Box bbox;
  std::optional<RleMask> mask;

  bool operator==(const ObjectInstance&) const = default;
};

struct Triplet {
  ObjectId subject_id = 0;
  std::string predicate;
  ObjectId object_id = 0;

  bool operator==(const Triplet&) const = default;
};

/// Per-pixel scene depth, row-major.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * width + u];
  }
  bool empty() const { return values.empty(); }
  bool operator==(const DepthMap&) const = default;
};

struct SceneRecord {
  ImageMeta meta;
  std::vector<ObjectInstance> objects;
  DepthMap depth;
  std::vector<Triplet> triplets;

  const ObjectInstance* find_object(ObjectId id) const;
  bool operator==(const SceneRecord&) const = default;
};

struct Category {
  std::int64_t id = 0;
  std::string name;

  bool operator==(const Category&) const = default;
};

/// The annotation file as a whole: the category table plus one scene skeleton
/// per image, in file order.
struct Dataset {
  std::vector<Category> categories;
  std::vector<SceneRecord> scenes;

  bool operator==(const Dataset&) const = default;
};

Dataset parse_annotations(std::string_view json_text);
Dataset load_dataset(const std::filesystem::path& path);
/// Scene skeletons (no depth attached) from an annotation file.
std::vector<SceneRecord> load_annotations(const std::filesystem::path& path);

std::string serialize_annotations(const Dataset& dataset);
void save_annotations(const Dataset& dataset, const std::filesystem::path& path);

enum class DepthMode { kLinear, kInverse };

std::optional<DepthMode> parse_depth_mode(std::string_view text);
std::string_view to_string(DepthMode mode);

/// Maps one stored 16-bit sample to scene depth.
double decode_depth_sample(std::uint16_t stored, double depth_scale,
                           DepthMode mode);

/// Reads depth_dir / meta.depth_file, a 16-bit single-channel PNG whose size
/// must equal meta.width x meta.height.
DepthMap load_depth(const ImageMeta& meta, const std::filesystem::path& depth_dir,
                    double depth_scale, DepthMode mode);

/// Writes a 16-bit grayscale PNG; the inverse of the raw read in load_depth.
void write_depth_png(const std::filesystem::path& path, int width, int height,
                     std::span<const std::uint16_t> samples);

struct Diagnostic {
  std::string subject;  // "object 7", "triplet 2", "image 3", "depth"
  std::string rule;

  bool operator==(const Diagnostic&) const = default;
};

/// Checks every record invariant. Empty result means the scene may flow
/// downstream. A scene with no depth attached skips the depth checks.
std::vector<Diagnostic> validate_scene(const SceneRecord& scene);

/// Foreground region of an object: the mask when present, else the bbox
/// interior rasterized onto the image grid.
Bitmap object_region(const ObjectInstance& object, int width, int height);

/// Box used for evaluation and conversation output: tight mask box when a
/// mask is present, bbox otherwise.
Box reference_box(const ObjectInstance& object);

}  // namespace forge::scene
