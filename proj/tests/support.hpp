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
// Scene builders and fixtures shared by the unit and acceptance tests.

#ifndef FORGE_TESTS_SUPPORT_HPP_
#define FORGE_TESTS_SUPPORT_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "forge/random.hpp"
#include "forge/scene.hpp"

namespace forge::testing {

struct ObjectSpec {
  scene::ObjectId id = 0;
  std::string label;
  scene::Box box;
  double z_near = 1;  // depth painted on the box's top row
  double z_far = 1;   // depth painted on the box's bottom row
};

inline constexpr double kBackgroundDepth = 40.0;

/// Paints each object's box with a vertical depth ramp, later objects on top.
inline scene::SceneRecord make_scene(scene::ImageId id, int width, int height,
                                     const std::vector<ObjectSpec>& objects,
                                     std::vector<scene::Triplet> triplets = {}) {
  scene::SceneRecord s;
  s.meta = {id, "img" + std::to_string(id) + ".jpg", width, height,
            "img" + std::to_string(id) + ".png"};
  s.depth = {width, height,
             std::vector<double>(static_cast<std::size_t>(width) * height, kBackgroundDepth)};
  std::map<std::string, std::int64_t> categories;
  for (const auto& o : objects) {
    auto [it, fresh] = categories.emplace(o.label, static_cast<std::int64_t>(categories.size() + 1));
    (void)fresh;
    s.objects.push_back({o.id, id, it->second, o.label, o.box, std::nullopt});
    const int x0 = static_cast<int>(o.box.x), y0 = static_cast<int>(o.box.y);
    const int x1 = static_cast<int>(o.box.x + o.box.w), y1 = static_cast<int>(o.box.y + o.box.h);
    for (int v = y0; v < y1; ++v) {
      const double t = y1 - y0 > 1 ? static_cast<double>(v - y0) / (y1 - y0 - 1) : 0.0;
      for (int u = x0; u < x1; ++u) {
        s.depth.values[static_cast<std::size_t>(v) * width + u] = o.z_near + t * (o.z_far - o.z_near);
      }
    }
  }
  s.triplets = std::move(triplets);
  return s;
}

/// Category table consistent with the labels used in `scenes`.
inline scene::Dataset make_dataset(std::vector<scene::SceneRecord> scenes) {
  scene::Dataset d;
  std::map<std::string, std::int64_t> ids;
  for (auto& s : scenes) {
    for (auto& o : s.objects) {
      auto [it, fresh] = ids.emplace(o.label, static_cast<std::int64_t>(ids.size() + 1));
      if (fresh) d.categories.push_back({it->second, o.label});
      o.category_id = it->second;
    }
  }
  d.scenes = std::move(scenes);
  return d;
}

inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> pool{
      "fire hydrant", "snow", "fence", "tree", "building", "man", "child", "dog",
      "car", "bench", "lamp post", "bicycle", "umbrella", "cup", "table", "chair"};
  return pool;
}

inline const std::vector<std::string>& predicate_pool() {
  static const std::vector<std::string> pool{"in front of", "beside", "on", "holding",
                                             "attached to", "behind", "near", "over"};
  return pool;
}

/// Random scene with integer boxes, distinct labels and a few annotated triplets.
inline scene::SceneRecord random_scene(Rng& rng, scene::ImageId id, int n_objects, int width = 96,
                                       int height = 72) {
  std::vector<std::string> labels = label_pool();
  rng.shuffle(labels);
  std::vector<ObjectSpec> specs;
  for (int i = 0; i < n_objects; ++i) {
    const int w = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 2)));
    const int h = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(height / 2)));
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w + 1)));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - h + 1)));
    const double near = 0.5 + static_cast<double>(rng.below(2000)) / 100.0;
    const double extent = static_cast<double>(rng.below(800)) / 100.0;
    std::string label = i < static_cast<int>(labels.size()) ? labels[i]
                                                            : labels[i % labels.size()] + " " + std::to_string(i);
    specs.push_back({id * 1000 + i + 1, std::move(label), {double(x), double(y), double(w), double(h)},
                     near, near + extent});
  }
  std::vector<scene::Triplet> triplets;
  if (n_objects >= 2) {
    const auto& preds = predicate_pool();
    const int n_trip = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_objects)));
    for (int k = 0; k < n_trip; ++k) {
      const auto a = rng.below(static_cast<std::uint64_t>(n_objects));
      auto b = rng.below(static_cast<std::uint64_t>(n_objects - 1));
      if (b >= a) ++b;
      scene::Triplet t{specs[a].id, preds[rng.below(preds.size())], specs[b].id};
      bool dup = false;
      for (const auto& e : triplets) dup = dup || e == t;
      if (!dup) triplets.push_back(t);
    }
  }
  return make_scene(id, width, height, specs, std::move(triplets));
}

/// Writes the annotation file plus one 16-bit PNG per scene, quantized at
/// `depth_scale` units per step. Returns the annotation path.
inline std::filesystem::path write_fixture(const std::filesystem::path& dir,
                                           const std::vector<scene::SceneRecord>& scenes,
                                           double depth_scale = 0.001) {
  std::filesystem::create_directories(dir / "depth");
  for (const auto& s : scenes) {
    std::vector<std::uint16_t> samples;
    samples.reserve(s.depth.values.size());
    for (double z : s.depth.values) {
      samples.push_back(static_cast<std::uint16_t>(std::lround(z / depth_scale)));
    }
    scene::write_depth_png(dir / "depth" / s.meta.depth_file, s.meta.width, s.meta.height, samples);
  }
  const auto path = dir / "annotations.json";
  scene::save_annotations(make_dataset(scenes), path);
  return path;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "forge") {
    static std::atomic<int> counter{0};
    const auto stamp = std::to_string(std::hash<std::string>{}(
        std::to_string(::getpid()) + ":" + std::to_string(counter++)));
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + stamp);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace forge::testing

#endif  // FORGE_TESTS_SUPPORT_HPP_
