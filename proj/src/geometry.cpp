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
#include "forge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "forge/error.hpp"

namespace forge::geometry {

namespace {

Point3 rotate(const Rotation& r, const Point3& p) {
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z, r[3] * p.x + r[4] * p.y + r[5] * p.z,
          r[6] * p.x + r[7] * p.y + r[8] * p.z};
}

// Tangent of an angle in degrees, exact at 45 where the radian route is off by
// one ulp.
double tan_degrees(double deg) {
  if (deg == 45.0) return 1.0;
  return std::tan(deg * std::numbers::pi / 180.0);
}

void check_camera(const CameraModel& cam) {
  if (!(cam.fx > 0) || !(cam.fy > 0)) throw Error("focal lengths must be positive");
}

}  // namespace

CameraModel default_intrinsics(int width, int height, double fov_deg) {
  if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
  if (!(fov_deg > 0 && fov_deg < 180)) throw Error("fov_deg must lie in (0, 180)");
  const double f = (width / 2.0) / tan_degrees(fov_deg / 2.0);
  return CameraModel{f, f, width / 2.0, height / 2.0};
}

PointSet backproject(const scene::DepthMap& depth, const CameraModel& cam,
                     const scene::Bitmap& region, scene::ObjectId owner,
                     const Rotation& rotation) {
  check_camera(cam);
  if (region.width != depth.width || region.height != depth.height) {
    throw Error("region grid differs from the depth grid");
  }
  const bool identity = rotation == kIdentityRotation;
  PointSet out{owner, {}};
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (!region.at(u, v)) continue;
      const double z = depth.at(u, v);
      if (!(z > 0) || !std::isfinite(z)) continue;
      Point3 p{(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z};
      out.points.push_back(identity ? p : rotate(rotation, p));
    }
  }
  if (out.points.empty()) {
    throw Error("empty region: object " + std::to_string(owner) + " has no positive-depth pixel");
  }
  return out;
}

PointSet backproject(const scene::DepthMap& depth, const CameraModel& cam, const scene::Box& region,
                     scene::ObjectId owner, const Rotation& rotation) {
  if (!(region.w > 0) || !(region.h > 0)) throw Error("empty region");
  if (region.x >= depth.width || region.y >= depth.height || region.x + region.w <= 0 ||
      region.y + region.h <= 0) {
    throw Error("region lies outside the depth grid");
  }
  scene::ObjectInstance stand_in;
  stand_in.id = owner;
  stand_in.bbox = region;
  return backproject(depth, cam, scene::object_region(stand_in, depth.width, depth.height), owner,
                     rotation);
}

Pixel project(const CameraModel& cam, const Point3& p) {
  return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy};
}

std::size_t nearest_rank(double pct, std::size_t n) {
  // The small slack keeps products such as 5 * 100 / 100 on their exact rank.
  const double raw = std::ceil(pct / 100.0 * static_cast<double>(n) - 1e-9);
  const auto rank = raw < 1 ? std::size_t{1} : static_cast<std::size_t>(raw);
  return std::min(rank, n);
}

ZRange object_z_range(const PointSet& points, double trim_pct) {
  if (points.points.empty()) throw Error("cannot take the z-range of an empty point set");
  if (!(trim_pct >= 0 && trim_pct < 50)) throw Error("trim_pct must lie in [0, 50)");
  std::vector<double> z;
  z.reserve(points.points.size());
  for (const auto& p : points.points) z.push_back(p.z);
  const std::size_t n = z.size();
  const std::size_t lo = nearest_rank(trim_pct, n) - 1;
  const std::size_t hi = nearest_rank(100.0 - trim_pct, n) - 1;
  std::nth_element(z.begin(), z.begin() + lo, z.end());
  const double z_min = z[lo];
  std::nth_element(z.begin(), z.begin() + hi, z.end());
  return ZRange{z_min, z[hi]};
}

}  // namespace forge::geometry
