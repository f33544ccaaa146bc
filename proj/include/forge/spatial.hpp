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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/scene.hpp"

namespace forge::spatial {

using scene::ObjectId;

enum class RelationKind {
  kInFrontOf,
  kBehind,
  kCovers,
  kCoveredBy,
  kAbove,
  kBelow,
  kLeftOf,
  kRightOf,
  kLargerThan,
  kSmallerThan,
  kOccludes,
  kOccludedBy,
  kSameDepth,
};

/// Snake-case wire name, e.g. "in_front_of".
std::string_view to_string(RelationKind kind);
std::optional<RelationKind> parse_relation_kind(std::string_view name);
/// Reading of the kind inside "the A is ___ the B".
std::string_view phrase(RelationKind kind);
RelationKind inverse(RelationKind kind);
bool is_depth_kind(RelationKind kind);

struct SpatialRelation {
  RelationKind kind = RelationKind::kSameDepth;
  ObjectId a = 0;
  ObjectId b = 0;

  SpatialRelation inverted() const { return {inverse(kind), b, a}; }
  bool operator==(const SpatialRelation&) const = default;
};

/// Everything the relation rules need about one object.
struct ObjectGeometry {
  ObjectId id = 0;
  std::string label;
  scene::Box bbox;
  double centroid_x = 0;
  double centroid_y = 0;
  double area = 0;
  geometry::ZRange z;
};

/// Centroid and area from the mask when present, from the bbox otherwise.
ObjectGeometry describe_object(const scene::ObjectInstance& object, const geometry::ZRange& z);

/// Strict interval nesting: a starts nearer and ends farther than b.
bool covers(const geometry::ZRange& a, const geometry::ZRange& b);

/// Depth-axis relation of a with respect to b. Coverage wins; otherwise the
/// range midpoints decide, with |difference| <= eps meaning same depth.
SpatialRelation relation_between(ObjectId a, const geometry::ZRange& a_range, ObjectId b,
                                 const geometry::ZRange& b_range, double eps);

/// Image-plane relations of a with respect to b plus occlusion. Occlusion
/// needs overlapping boxes and midpoints more than eps apart.
std::vector<SpatialRelation> derive_2d_relations(const ObjectGeometry& a, const ObjectGeometry& b,
                                                 int image_width, int image_height,
                                                 double margin_frac, double eps = 0);

/// eps_rel times the depth span covered by the given ranges.
double scene_eps(std::span<const geometry::ZRange> ranges, double eps_rel);

/// All pairwise relations in both directions, ordered by object index pair.
std::vector<SpatialRelation> extract_relations(std::span<const ObjectGeometry> objects,
                                               int image_width, int image_height, double eps,
                                               double margin_frac);

struct LayerInput {
  ObjectId id = 0;
  geometry::ZRange z;
};

struct Layer {
  ObjectId basic = 0;
  std::vector<ObjectId> members;
  double depth_key = 0;

  bool contains(ObjectId id) const;
  bool operator==(const Layer&) const = default;
};

struct LayerAssignment {
  std::vector<Layer> layers;

  /// Index of the nearest layer holding `id` as basic or member.
  std::optional<std::size_t> nearest_layer_of(ObjectId id) const;
  bool operator==(const LayerAssignment&) const = default;
};

/// Basic objects are those covering no other object. Each heads a layer whose
/// members are the objects covering it; layers run near to far by the basic
/// object's z_min, ties by ascending id.
LayerAssignment assign_layers(std::span<const LayerInput> objects);

/// Triplets bucketed by the nearest layer containing their subject. The
/// result has one entry per layer.
std::vector<std::vector<scene::Triplet>> group_triplets_by_layer(
    std::span<const scene::Triplet> triplets, const LayerAssignment& layers);

}  // namespace forge::spatial
