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
#include "forge/spatial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "forge/error.hpp"

namespace forge::spatial {

namespace {

struct KindInfo {
  RelationKind kind;
  std::string_view name;
  std::string_view phrase;
  RelationKind inverse;
};

constexpr std::array<KindInfo, 13> kKinds{{
    {RelationKind::kInFrontOf, "in_front_of", "in front of", RelationKind::kBehind},
    {RelationKind::kBehind, "behind", "behind", RelationKind::kInFrontOf},
    {RelationKind::kCovers, "covers", "covering", RelationKind::kCoveredBy},
    {RelationKind::kCoveredBy, "covered_by", "covered by", RelationKind::kCovers},
    {RelationKind::kAbove, "above", "above", RelationKind::kBelow},
    {RelationKind::kBelow, "below", "below", RelationKind::kAbove},
    {RelationKind::kLeftOf, "left_of", "to the left of", RelationKind::kRightOf},
    {RelationKind::kRightOf, "right_of", "to the right of", RelationKind::kLeftOf},
    {RelationKind::kLargerThan, "larger_than", "larger than", RelationKind::kSmallerThan},
    {RelationKind::kSmallerThan, "smaller_than", "smaller than", RelationKind::kLargerThan},
    {RelationKind::kOccludes, "occludes", "occluding", RelationKind::kOccludedBy},
    {RelationKind::kOccludedBy, "occluded_by", "occluded by", RelationKind::kOccludes},
    {RelationKind::kSameDepth, "same_depth", "at the same depth as", RelationKind::kSameDepth},
}};

const KindInfo& info(RelationKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

bool boxes_intersect(const scene::Box& a, const scene::Box& b) {
  const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return w > 0 && h > 0;
}

}  // namespace

std::string_view to_string(RelationKind kind) { return info(kind).name; }

std::optional<RelationKind> parse_relation_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::string_view phrase(RelationKind kind) { return info(kind).phrase; }

RelationKind inverse(RelationKind kind) { return info(kind).inverse; }

bool is_depth_kind(RelationKind kind) {
  switch (kind) {
    case RelationKind::kInFrontOf:
    case RelationKind::kBehind:
    case RelationKind::kCovers:
    case RelationKind::kCoveredBy:
    case RelationKind::kSameDepth:
      return true;
    default:
      return false;
  }
}

ObjectGeometry describe_object(const scene::ObjectInstance& object, const geometry::ZRange& z) {
  ObjectGeometry g;
  g.id = object.id;
  g.label = object.label;
  g.bbox = object.bbox;
  g.z = z;
  if (object.mask && object.mask->area() > 0) {
    const auto bitmap = object.mask->decode();
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (int v = 0; v < bitmap.height; ++v) {
      for (int u = 0; u < bitmap.width; ++u) {
        if (!bitmap.at(u, v)) continue;
        sx += u + 0.5;
        sy += v + 0.5;
        ++n;
      }
    }
    g.centroid_x = sx / static_cast<double>(n);
    g.centroid_y = sy / static_cast<double>(n);
    g.area = static_cast<double>(n);
  } else {
    g.centroid_x = object.bbox.x + object.bbox.w / 2;
    g.centroid_y = object.bbox.y + object.bbox.h / 2;
    g.area = object.bbox.area();
  }
  return g;
}

bool covers(const geometry::ZRange& a, const geometry::ZRange& b) {
  return a.z_min < b.z_min && a.z_max > b.z_max;
}

SpatialRelation relation_between(ObjectId a, const geometry::ZRange& a_range, ObjectId b,
                                 const geometry::ZRange& b_range, double eps) {
  if (covers(a_range, b_range)) return {RelationKind::kCovers, a, b};
  if (covers(b_range, a_range)) return {RelationKind::kCoveredBy, a, b};
  const double delta = a_range.midpoint() - b_range.midpoint();
  if (std::abs(delta) <= eps) return {RelationKind::kSameDepth, a, b};
  return {delta < 0 ? RelationKind::kInFrontOf : RelationKind::kBehind, a, b};
}

std::vector<SpatialRelation> derive_2d_relations(const ObjectGeometry& a, const ObjectGeometry& b,
                                                 int image_width, int image_height,
                                                 double margin_frac, double eps) {
  std::vector<SpatialRelation> out;
  const double dx = b.centroid_x - a.centroid_x;
  const double dy = b.centroid_y - a.centroid_y;
  if (std::abs(dx) > margin_frac * image_width) {
    out.push_back({dx > 0 ? RelationKind::kLeftOf : RelationKind::kRightOf, a.id, b.id});
  }
  // Image y grows downward, so the smaller y is above.
  if (std::abs(dy) > margin_frac * image_height) {
    out.push_back({dy > 0 ? RelationKind::kAbove : RelationKind::kBelow, a.id, b.id});
  }
  if (a.area > b.area) {
    out.push_back({RelationKind::kLargerThan, a.id, b.id});
  } else if (a.area < b.area) {
    out.push_back({RelationKind::kSmallerThan, a.id, b.id});
  }
  if (boxes_intersect(a.bbox, b.bbox)) {
    const double za = a.z.midpoint();
    const double zb = b.z.midpoint();
    if (zb - za > eps) {
      out.push_back({RelationKind::kOccludes, a.id, b.id});
    } else if (za - zb > eps) {
      out.push_back({RelationKind::kOccludedBy, a.id, b.id});
    }
  }
  return out;
}

double scene_eps(std::span<const geometry::ZRange> ranges, double eps_rel) {
  if (ranges.empty()) return 0;
  double lo = ranges.front().z_min;
  double hi = ranges.front().z_max;
  for (const auto& r : ranges) {
    lo = std::min(lo, r.z_min);
    hi = std::max(hi, r.z_max);
  }
  return eps_rel * (hi - lo);
}

std::vector<SpatialRelation> extract_relations(std::span<const ObjectGeometry> objects,
                                               int image_width, int image_height, double eps,
                                               double margin_frac) {
  std::vector<SpatialRelation> out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const auto& a = objects[i];
      const auto& b = objects[j];
      const auto depth = relation_between(a.id, a.z, b.id, b.z, eps);
      out.push_back(depth);
      out.push_back(depth.inverted());
      for (const auto& r : derive_2d_relations(a, b, image_width, image_height, margin_frac, eps)) {
        out.push_back(r);
        out.push_back(r.inverted());
      }
    }
  }
  return out;
}

bool Layer::contains(ObjectId id) const {
  return basic == id || std::find(members.begin(), members.end(), id) != members.end();
}

std::optional<std::size_t> LayerAssignment::nearest_layer_of(ObjectId id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].contains(id)) return i;
  }
  return std::nullopt;
}

LayerAssignment assign_layers(std::span<const LayerInput> objects) {
  if (objects.empty()) throw Error("cannot assign layers to an empty object list");

  std::vector<const LayerInput*> basics;
  for (const auto& a : objects) {
    const bool covers_any = std::any_of(objects.begin(), objects.end(),
                                        [&](const LayerInput& b) { return covers(a.z, b.z); });
    if (!covers_any) basics.push_back(&a);
  }
  std::sort(basics.begin(), basics.end(), [](const LayerInput* l, const LayerInput* r) {
    if (l->z.z_min != r->z.z_min) return l->z.z_min < r->z.z_min;
    return l->id < r->id;
  });

  LayerAssignment out;
  for (const LayerInput* a : basics) {
    std::vector<const LayerInput*> covering;
    for (const auto& b : objects) {
      if (covers(b.z, a->z)) covering.push_back(&b);
    }
    std::sort(covering.begin(), covering.end(), [](const LayerInput* l, const LayerInput* r) {
      if (l->z.z_min != r->z.z_min) return l->z.z_min < r->z.z_min;
      return l->id < r->id;
    });
    Layer layer{a->id, {}, a->z.z_min};
    for (const auto* b : covering) layer.members.push_back(b->id);
    out.layers.push_back(std::move(layer));
  }
  return out;
}

std::vector<std::vector<scene::Triplet>> group_triplets_by_layer(
    std::span<const scene::Triplet> triplets, const LayerAssignment& layers) {
  std::vector<std::vector<scene::Triplet>> grouped(layers.layers.size());
  for (const auto& t : triplets) {
    const auto subject_layer = layers.nearest_layer_of(t.subject_id);
    const auto object_layer = layers.nearest_layer_of(t.object_id);
    if (!subject_layer || !object_layer) {
      throw Error("triplet (" + std::to_string(t.subject_id) + ", " + t.predicate + ", " +
                  std::to_string(t.object_id) + ") has an endpoint in no layer");
    }
    grouped[*subject_layer].push_back(t);
  }
  return grouped;
}

}  // namespace forge::spatial
