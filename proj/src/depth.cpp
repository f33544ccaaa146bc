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
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "forge/error.hpp"
#include "forge/scene.hpp"

namespace forge::scene {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawDepth {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;
};

void silent_warning(png_structp, png_const_charp) {}

// libpng reports failures through longjmp; nothing with a destructor may live
// between the setjmp and the png_* calls below.
RawDepth read_png16(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open depth file " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }

  RawDepth raw;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  volatile int bit_depth = 0;
  volatile int color_type = 0;
  volatile bool ok = false;
  volatile bool wrong_format = false;

  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
      wrong_format = true;
    } else {
      const std::size_t stride = static_cast<std::size_t>(raw.width) * 2;
      buffer.resize(stride * raw.height);
      rows.resize(raw.height);
      for (int r = 0; r < raw.height; ++r) rows[r] = buffer.data() + stride * r;
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
      ok = true;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (wrong_format) {
    throw IoError("depth file must be 16-bit single-channel, got " + std::to_string(bit_depth) +
                  "-bit color type " + std::to_string(color_type) + ": " + path.string());
  }
  if (!ok) throw IoError("corrupt depth file " + path.string());

  raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height);
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    raw.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  }
  return raw;
}

}  // namespace

std::optional<DepthMode> parse_depth_mode(std::string_view text) {
  if (text == "linear") return DepthMode::kLinear;
  if (text == "inverse") return DepthMode::kInverse;
  return std::nullopt;
}

std::string_view to_string(DepthMode mode) {
  return mode == DepthMode::kLinear ? "linear" : "inverse";
}

double decode_depth_sample(std::uint16_t stored, double depth_scale, DepthMode mode) {
  const double v = stored;
  if (mode == DepthMode::kLinear) return v * depth_scale;
  return depth_scale / std::max(v, 1.0);
}

DepthMap load_depth(const ImageMeta& meta, const std::filesystem::path& depth_dir,
                    double depth_scale, DepthMode mode) {
  if (!(depth_scale > 0) || !std::isfinite(depth_scale)) {
    throw Error("depth_scale must be positive and finite");
  }
  RawDepth raw = read_png16(depth_dir / meta.depth_file);
  if (raw.width != meta.width || raw.height != meta.height) {
    throw Error("depth dimensions " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                " do not match image " + std::to_string(meta.id) + " (" +
                std::to_string(meta.width) + "x" + std::to_string(meta.height) + ")");
  }
  DepthMap depth{raw.width, raw.height, {}};
  depth.values.reserve(raw.samples.size());
  for (auto s : raw.samples) depth.values.push_back(decode_depth_sample(s, depth_scale, mode));
  return depth;
}

void write_depth_png(const std::filesystem::path& path, int width, int height,
                     std::span<const std::uint16_t> samples) {
  if (width <= 0 || height <= 0 ||
      samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error("depth sample count does not match dimensions");
  }
  std::vector<png_byte> buffer(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);
    buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
  }
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) rows[r] = buffer.data() + static_cast<std::size_t>(width) * 2 * r;

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write depth file " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  volatile bool ok = false;
  if (info && setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, info ? &info : nullptr);
  if (!ok) throw IoError("failed to encode depth file " + path.string());
}

}  // namespace forge::scene
