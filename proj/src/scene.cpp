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
#include "forge/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::scene {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kImages[] = "images";
constexpr char kCategories[] = "categories";
constexpr char kObjects[] = "objects";
constexpr char kRelations[] = "relations";
constexpr char kId[] = "id";
constexpr char kImageId[] = "image_id";
constexpr char kCategoryId[] = "category_id";
constexpr char kFileName[] = "file_name";
constexpr char kWidth[] = "width";
constexpr char kHeight[] = "height";
constexpr char kDepthFile[] = "depth_file";
constexpr char kName[] = "name";
constexpr char kBbox[] = "bbox";
constexpr char kMask[] = "mask";
constexpr char kSize[] = "size";
constexpr char kCounts[] = "counts";
constexpr char kSubjectId[] = "subject_id";
constexpr char kObjectId[] = "object_id";
constexpr char kPredicate[] = "predicate";

std::string at_index(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& require(const json& node, const char* key, const std::string& path) {
  if (!node.is_object()) throw SchemaError(path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

std::int64_t require_int(const json& node, const char* key, const std::string& path) {
  const json& v = require(node, key, path);
  if (!v.is_number_integer()) throw SchemaError(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::string require_string(const json& node, const char* key, const std::string& path) {
  const json& v = require(node, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const json& require_array(const json& node, const char* key, const std::string& path) {
  const json& v = require(node, key, path);
  if (!v.is_array()) throw SchemaError(path.empty() ? key : path + "." + key, "expected an array");
  return v;
}

RleMask parse_mask(const json& node, const std::string& path) {
  const json& size = require(node, kSize, path);
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw SchemaError(path + ".size", "expected [height, width]");
  }
  const int h = size[0].get<int>();
  const int w = size[1].get<int>();
  if (h <= 0 || w <= 0) throw SchemaError(path + ".size", "dimensions must be positive");
  const json& counts = require(node, kCounts, path);
  RleMask mask;
  if (counts.is_string()) {
    try {
      mask = RleMask::from_string(counts.get<std::string>(), h, w);
    } catch (const Error& e) {
      throw SchemaError(path + ".counts", e.what());
    }
  } else if (counts.is_array()) {
    mask.height = h;
    mask.width = w;
    for (const auto& c : counts) {
      if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
        throw SchemaError(path + ".counts", "run lengths must be non-negative integers");
      }
      mask.counts.push_back(c.get<std::uint32_t>());
    }
  } else {
    throw SchemaError(path + ".counts", "expected run-length text or integer list");
  }
  std::uint64_t total = 0;
  for (auto c : mask.counts) total += c;
  if (total != static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w)) {
    throw SchemaError(path + ".counts", "run lengths do not cover the mask grid");
  }
  return mask;
}

Box parse_bbox(const json& node, const std::string& path) {
  const json& v = require(node, kBbox, path);
  if (!v.is_array() || v.size() != 4) throw SchemaError(path + ".bbox", "expected [x, y, w, h]");
  std::array<double, 4> b{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) throw SchemaError(path + ".bbox", "expected numbers");
    b[i] = v[i].get<double>();
    if (!std::isfinite(b[i])) throw SchemaError(path + ".bbox", "non-finite coordinate");
  }
  return Box{b[0], b[1], b[2], b[3]};
}

}  // namespace

std::size_t Bitmap::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

RleMask RleMask::encode(const Bitmap& bitmap) {
  RleMask rle;
  rle.height = bitmap.height;
  rle.width = bitmap.width;
  std::uint8_t prev = 0;
  std::uint32_t run = 0;
  for (int u = 0; u < bitmap.width; ++u) {
    for (int v = 0; v < bitmap.height; ++v) {
      const std::uint8_t cur = bitmap.at(u, v) ? 1 : 0;
      if (cur != prev) {
        rle.counts.push_back(run);
        run = 0;
        prev = cur;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

// 6 bits per char in the ASCII range 48..111, with deltas against the run two
// positions back after the first three runs.
std::string RleMask::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = counts[i];
    if (i > 2) x -= static_cast<std::int64_t>(counts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

RleMask RleMask::from_string(std::string_view text, int height, int width) {
  RleMask rle;
  rle.height = height;
  rle.width = width;
  std::size_t k = 0;
  while (k < text.size()) {
    std::int64_t x = 0;
    int m = 0;
    bool more = true;
    while (more) {
      if (k >= text.size()) throw Error("truncated run-length text");
      const int c = static_cast<unsigned char>(text[k]) - 48;
      if (c < 0 || c > 63) throw Error("invalid run-length character");
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * m);
      more = (c & 0x20) != 0;
      ++k;
      ++m;
      if (!more && (c & 0x10)) x |= static_cast<std::int64_t>(-1) << (5 * m);
      if (m > 12) throw Error("run length overflow");
    }
    const std::size_t i = rle.counts.size();
    if (i > 2) x += static_cast<std::int64_t>(rle.counts[i - 2]);
    if (x < 0 || x > 0xffffffffLL) throw Error("run length out of range");
    rle.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return rle;
}

Bitmap RleMask::decode() const {
  Bitmap bitmap{width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  std::uint64_t pos = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
  std::uint8_t value = 0;
  for (auto run : counts) {
    for (std::uint32_t j = 0; j < run && pos < total; ++j, ++pos) {
      if (value) {
        const auto u = static_cast<std::size_t>(pos / height);
        const auto v = static_cast<std::size_t>(pos % height);
        bitmap.data[v * width + u] = 1;
      }
    }
    value = !value;
  }
  return bitmap;
}

std::uint64_t RleMask::area() const {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < counts.size(); i += 2) a += counts[i];
  return a;
}

std::optional<Box> RleMask::tight_box() const {
  std::uint64_t pos = 0;
  bool any = false;
  std::uint64_t u_min = 0, u_max = 0, v_min = 0, v_max = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint64_t start = pos;
    pos += counts[i];
    if (i % 2 == 0 || counts[i] == 0) continue;
    const std::uint64_t end = pos - 1;
    const std::uint64_t u0 = start / height, u1 = end / height;
    std::uint64_t lo = start % height, hi = end % height;
    if (u0 != u1) {
      lo = 0;
      hi = static_cast<std::uint64_t>(height) - 1;
    }
    if (!any) {
      u_min = u0, u_max = u1, v_min = lo, v_max = hi;
      any = true;
    } else {
      u_min = std::min(u_min, u0);
      u_max = std::max(u_max, u1);
      v_min = std::min(v_min, lo);
      v_max = std::max(v_max, hi);
    }
  }
  if (!any) return std::nullopt;
  return Box{static_cast<double>(u_min), static_cast<double>(v_min),
             static_cast<double>(u_max - u_min + 1), static_cast<double>(v_max - v_min + 1)};
}

const ObjectInstance* SceneRecord::find_object(ObjectId id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

Dataset parse_annotations(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("<root>", "expected an object");

  Dataset dataset;
  std::map<std::int64_t, std::string> category_names;
  const json& cats = require_array(root, kCategories, "");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string path = at_index(kCategories, i);
    Category c{require_int(cats[i], kId, path), normalize_label(require_string(cats[i], kName, path))};
    if (c.name.empty()) throw SchemaError(path + ".name", "empty category name");
    if (!category_names.emplace(c.id, c.name).second) {
      throw SchemaError(path + ".id", "duplicate category id " + std::to_string(c.id));
    }
    dataset.categories.push_back(std::move(c));
  }

  std::map<ImageId, std::size_t> scene_index;
  const json& images = require_array(root, kImages, "");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = at_index(kImages, i);
    SceneRecord scene;
    scene.meta.id = require_int(images[i], kId, path);
    scene.meta.file_name = require_string(images[i], kFileName, path);
    scene.meta.width = static_cast<int>(require_int(images[i], kWidth, path));
    scene.meta.height = static_cast<int>(require_int(images[i], kHeight, path));
    scene.meta.depth_file = require_string(images[i], kDepthFile, path);
    if (scene.meta.width <= 0) throw SchemaError(path + ".width", "must be positive");
    if (scene.meta.height <= 0) throw SchemaError(path + ".height", "must be positive");
    if (!scene_index.emplace(scene.meta.id, dataset.scenes.size()).second) {
      throw SchemaError(path + ".id", "duplicate image id " + std::to_string(scene.meta.id));
    }
    dataset.scenes.push_back(std::move(scene));
  }

  std::map<ObjectId, ImageId> object_owner;
  const json& objects = require_array(root, kObjects, "");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = at_index(kObjects, i);
    const json& node = objects[i];
    ObjectInstance obj;
    obj.id = require_int(node, kId, path);
    obj.image_id = require_int(node, kImageId, path);
    obj.category_id = require_int(node, kCategoryId, path);
    obj.bbox = parse_bbox(node, path);
    auto cat = category_names.find(obj.category_id);
    if (cat == category_names.end()) {
      throw SchemaError(path + ".category_id",
                        "dangling category reference " + std::to_string(obj.category_id));
    }
    obj.label = cat->second;
    auto scene_it = scene_index.find(obj.image_id);
    if (scene_it == scene_index.end()) {
      throw SchemaError(path + ".image_id",
                        "dangling image reference " + std::to_string(obj.image_id));
    }
    if (node.contains(kMask) && !node[kMask].is_null()) {
      obj.mask = parse_mask(node[kMask], path + ".mask");
    }
    if (!object_owner.emplace(obj.id, obj.image_id).second) {
      throw SchemaError(path + ".id", "duplicate object id " + std::to_string(obj.id));
    }
    dataset.scenes[scene_it->second].objects.push_back(std::move(obj));
  }

  if (root.contains(kRelations)) {
    const json& rels = require_array(root, kRelations, "");
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const std::string path = at_index(kRelations, i);
      const ImageId image_id = require_int(rels[i], kImageId, path);
      Triplet t;
      t.subject_id = require_int(rels[i], kSubjectId, path);
      t.object_id = require_int(rels[i], kObjectId, path);
      t.predicate = normalize_label(require_string(rels[i], kPredicate, path));
      auto scene_it = scene_index.find(image_id);
      if (scene_it == scene_index.end()) {
        throw SchemaError(path + ".image_id", "dangling image reference " + std::to_string(image_id));
      }
      for (auto [key, id] : {std::pair{kSubjectId, t.subject_id}, std::pair{kObjectId, t.object_id}}) {
        auto owner = object_owner.find(id);
        if (owner == object_owner.end()) {
          throw SchemaError(path + "." + key, "dangling object reference " + std::to_string(id));
        }
        if (owner->second != image_id) {
          throw SchemaError(path + "." + key, "object " + std::to_string(id) +
                                                  " belongs to image " +
                                                  std::to_string(owner->second));
        }
      }
      if (t.predicate.empty()) throw SchemaError(path + ".predicate", "empty predicate");
      dataset.scenes[scene_it->second].triplets.push_back(std::move(t));
    }
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotation file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str());
}

std::vector<SceneRecord> load_annotations(const std::filesystem::path& path) {
  return load_dataset(path).scenes;
}

std::string serialize_annotations(const Dataset& dataset) {
  ordered_json root;
  root[kImages] = ordered_json::array();
  root[kCategories] = ordered_json::array();
  root[kObjects] = ordered_json::array();
  root[kRelations] = ordered_json::array();
  for (const auto& c : dataset.categories) {
    root[kCategories].push_back({{kId, c.id}, {kName, c.name}});
  }
  for (const auto& scene : dataset.scenes) {
    const auto& m = scene.meta;
    root[kImages].push_back({{kId, m.id},
                             {kFileName, m.file_name},
                             {kWidth, m.width},
                             {kHeight, m.height},
                             {kDepthFile, m.depth_file}});
    for (const auto& o : scene.objects) {
      ordered_json node{{kId, o.id},
                        {kImageId, o.image_id},
                        {kCategoryId, o.category_id},
                        {kBbox, {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}}};
      if (o.mask) {
        node[kMask] = {{kSize, {o.mask->height, o.mask->width}}, {kCounts, o.mask->to_string()}};
      }
      root[kObjects].push_back(std::move(node));
    }
    for (const auto& t : scene.triplets) {
      root[kRelations].push_back({{kImageId, m.id},
                                  {kSubjectId, t.subject_id},
                                  {kObjectId, t.object_id},
                                  {kPredicate, t.predicate}});
    }
  }
  return root.dump(1);
}

void save_annotations(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_annotations(dataset) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Diagnostic> validate_scene(const SceneRecord& scene) {
  std::vector<Diagnostic> out;
  const auto& meta = scene.meta;
  const std::string image = "image " + std::to_string(meta.id);
  if (meta.width <= 0 || meta.height <= 0) {
    out.push_back({image, "image dimensions must be positive"});
  }

  std::set<ObjectId> seen;
  for (const auto& o : scene.objects) {
    const std::string who = "object " + std::to_string(o.id);
    if (!seen.insert(o.id).second) out.push_back({who, "duplicate object id"});
    if (o.image_id != meta.id) out.push_back({who, "object belongs to a different image"});
    if (!(o.bbox.w > 0) || !(o.bbox.h > 0)) out.push_back({who, "bbox extent must be positive"});
    if (o.bbox.x < 0 || o.bbox.y < 0 || o.bbox.x + o.bbox.w > meta.width ||
        o.bbox.y + o.bbox.h > meta.height) {
      out.push_back({who, "bbox exceeds image bounds"});
    }
    if (o.mask) {
      if (o.mask->height != meta.height || o.mask->width != meta.width) {
        out.push_back({who, "mask dimensions differ from the image"});
      } else {
        std::uint64_t total = 0;
        for (auto c : o.mask->counts) total += c;
        if (total != static_cast<std::uint64_t>(meta.width) * meta.height) {
          out.push_back({who, "mask run lengths do not cover the image"});
        } else if (o.mask->area() == 0) {
          out.push_back({who, "mask is empty"});
        }
      }
    }
    if (o.label.empty()) out.push_back({who, "empty label"});
  }

  for (std::size_t i = 0; i < scene.triplets.size(); ++i) {
    const auto& t = scene.triplets[i];
    const std::string who = "triplet " + std::to_string(i) + " (" + std::to_string(t.subject_id) +
                            ", " + t.predicate + ", " + std::to_string(t.object_id) + ")";
    if (t.subject_id == t.object_id) out.push_back({who, "subject and object are the same object"});
    if (!seen.contains(t.subject_id)) out.push_back({who, "subject does not resolve"});
    if (!seen.contains(t.object_id)) out.push_back({who, "object does not resolve"});
    if (t.predicate.empty()) out.push_back({who, "empty predicate"});
  }

  if (!scene.depth.empty()) {
    if (scene.depth.width != meta.width || scene.depth.height != meta.height) {
      out.push_back({"depth", "depth dimensions differ from the image"});
    }
    if (scene.depth.values.size() !=
        static_cast<std::size_t>(scene.depth.width) * static_cast<std::size_t>(scene.depth.height)) {
      out.push_back({"depth", "depth value count does not match its dimensions"});
    }
    const bool bad = std::any_of(scene.depth.values.begin(), scene.depth.values.end(),
                                 [](double z) { return !std::isfinite(z) || z < 0; });
    if (bad) out.push_back({"depth", "depth values must be finite and non-negative"});
  }
  return out;
}

Bitmap object_region(const ObjectInstance& object, int width, int height) {
  if (object.mask && object.mask->width == width && object.mask->height == height) {
    return object.mask->decode();
  }
  Bitmap bitmap{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  // Pixel (u, v) belongs to the box when its center lies inside it.
  const auto& b = object.bbox;
  int u0 = static_cast<int>(std::ceil(b.x - 0.5));
  int u1 = static_cast<int>(std::ceil(b.x + b.w - 0.5));
  int v0 = static_cast<int>(std::ceil(b.y - 0.5));
  int v1 = static_cast<int>(std::ceil(b.y + b.h - 0.5));
  if (u1 <= u0) {
    u0 = static_cast<int>(std::floor(b.x + b.w / 2));
    u1 = u0 + 1;
  }
  if (v1 <= v0) {
    v0 = static_cast<int>(std::floor(b.y + b.h / 2));
    v1 = v0 + 1;
  }
  u0 = std::max(u0, 0);
  v0 = std::max(v0, 0);
  u1 = std::min(u1, width);
  v1 = std::min(v1, height);
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) bitmap.data[static_cast<std::size_t>(v) * width + u] = 1;
  }
  return bitmap;
}

Box reference_box(const ObjectInstance& object) {
  if (object.mask) {
    if (auto box = object.mask->tight_box()) return *box;
  }
  return object.bbox;
}

}  // namespace forge::scene
