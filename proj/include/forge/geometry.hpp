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

#include <array>
#include <optional>
#include <vector>

#include "forge/scene.hpp"

namespace forge::geometry {

struct CameraModel {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
};

/// Row-major 3x3 rotation applied to backprojected points.
using Rotation = std::array<double, 9>;
inline constexpr Rotation kIdentityRotation{1, 0, 0, 0, 1, 0, 0, 0, 1};

struct Point3 {
  double x = 0;
  double y = 0;
  double z = 0;
};

struct PointSet {
  scene::ObjectId owner = 0;
  std::vector<Point3> points;
};

/// Depth interval of one object.
struct ZRange {
  double z_min = 0;
  double z_max = 0;

  double midpoint() const { return 0.5 * (z_min + z_max); }
  ZRange scaled(double s) const { return {z_min * s, z_max * s}; }
  bool operator==(const ZRange&) const = default;
};

/// Symmetric pinhole camera with the principal point at the image center and a
/// horizontal field of view of `fov_deg`.
CameraModel default_intrinsics(int width, int height, double fov_deg);

/// Lifts every region pixel with positive depth to camera space:
/// ((u - cx) z / fx, (v - cy) z / fy, z), then applies `rotation`.
/// Throws when the region holds no positive-depth pixel.
PointSet backproject(const scene::DepthMap& depth, const CameraModel& cam,
                     const scene::Bitmap& region, scene::ObjectId owner = 0,
                     const Rotation& rotation = kIdentityRotation);
PointSet backproject(const scene::DepthMap& depth, const CameraModel& cam,
                     const scene::Box& region, scene::ObjectId owner = 0,
                     const Rotation& rotation = kIdentityRotation);

struct Pixel {
  double u = 0;
  double v = 0;
};

/// Forward projection of a camera-space point.
Pixel project(const CameraModel& cam, const Point3& p);

/// Nearest-rank percentiles trim_pct and 100 - trim_pct of the z values.
ZRange object_z_range(const PointSet& points, double trim_pct);

/// 1-based nearest-rank index ceil(pct / 100 * n), clamped to [1, n].
std::size_t nearest_rank(double pct, std::size_t n);

}  // namespace forge::geometry
