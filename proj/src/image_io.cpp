/* Copyright 2026 The mcda Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <png.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "mcda/boundary.hpp"
#include "mcda/imaging.hpp"

namespace fs = std::filesystem;

namespace mcda {
namespace {

struct PngImageDeleter {
  void operator()(png_image* img) const {
    png_image_free(img);
    delete img;
  }
};
using PngHandle = std::unique_ptr<png_image, PngImageDeleter>;

struct RawPng {
  int width = 0;
  int height = 0;
  bool color = false;
  std::vector<std::uint8_t> bytes;
};

RawPng read_png(const fs::path& path, std::uint32_t format) {
  PngHandle img(new png_image{});
  img->version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(img.get(), path.c_str())) {
    throw LoadError("cannot read PNG " + path.string() + ": " + img->message);
  }
  RawPng out;
  out.color = (img->format & PNG_FORMAT_FLAG_COLOR) != 0;
  img->format = format;
  out.width = static_cast<int>(img->width);
  out.height = static_cast<int>(img->height);
  out.bytes.resize(PNG_IMAGE_SIZE(*img));
  if (!png_image_finish_read(img.get(), nullptr, out.bytes.data(), 0,
                             nullptr)) {
    throw LoadError("cannot decode PNG " + path.string() + ": " +
                    img->message);
  }
  return out;
}

void write_png(const fs::path& path, int width, int height,
               std::uint32_t format, const std::vector<std::uint8_t>& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0,
                               nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw LoadError("cannot write PNG " + path.string() + ": " + msg);
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::map<std::string, fs::path> pngs_by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      out.emplace(e.path().stem().string(), e.path());
    }
  }
  return out;
}

}  // namespace

void validate_raster(const Planes& image) {
  if (image.height() < kMinImageSide || image.width() < kMinImageSide) {
    throw ShapeError("raster smaller than 8x8: " + image.shape_string());
  }
  for (double v : image.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("raster intensity outside [0,1]");
    }
  }
}

void validate_class_mask(const Planes& mask, bool require_nested) {
  if (mask.channels() != kNumClasses) {
    throw ShapeError("class mask must have 2 channels, got " +
                     mask.shape_string());
  }
  for (double v : mask.data()) {
    if (v != 0.0 && v != 1.0) throw ConfigError("class mask is not binary");
  }
  if (!require_nested) return;
  auto disc = mask.plane(kDisc);
  auto cup = mask.plane(kCup);
  for (std::size_t i = 0; i < disc.size(); ++i) {
    if (cup[i] > disc[i]) throw ConfigError("cup pixel outside disc");
  }
}

AnnotatedSample make_sample(std::string name, Planes image, Planes mask) {
  require_same_shape(image.channel(0), mask.channel(0), "make_sample");
  AnnotatedSample s{std::move(name), std::move(image), std::move(mask), {}};
  s.boundary = hard_boundary(s.mask);
  return s;
}

Planes load_image(const fs::path& path) {
  RawPng raw = read_png(path, PNG_FORMAT_RGB);
  Planes img(kImageChannels, raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < kImageChannels; ++c) {
        img.at(c, y, x) =
            raw.bytes[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] /
            255.0;
      }
    }
  }
  validate_raster(img);
  return img;
}

void save_image(const Planes& image, const fs::path& path) {
  if (image.channels() != kImageChannels) {
    throw ShapeError("save_image expects 3 channels");
  }
  const int H = image.height(), W = image.width();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(H) * W * 3);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        bytes[(static_cast<std::size_t>(y) * W + x) * 3 + c] =
            to_byte(image.at(c, y, x));
      }
    }
  }
  write_png(path, W, H, PNG_FORMAT_RGB, bytes);
}

Planes decode_labelmap(const std::vector<std::uint8_t>& gray, int height,
                       int width) {
  if (gray.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("labelmap size does not match dimensions");
  }
  Planes mask(kNumClasses, height, width);
  auto disc = mask.plane(kDisc);
  auto cup = mask.plane(kCup);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const std::uint8_t v = gray[i];
    if (v != kLabelBackground && v != kLabelDisc && v != kLabelCup) {
      throw LoadError("unexpected label value " + std::to_string(v));
    }
    disc[i] = v >= kLabelDisc ? 1.0 : 0.0;
    cup[i] = v == kLabelCup ? 1.0 : 0.0;
  }
  return mask;
}

std::vector<std::uint8_t> encode_labelmap(const Planes& mask) {
  validate_class_mask(mask);
  auto disc = mask.plane(kDisc);
  auto cup = mask.plane(kCup);
  std::vector<std::uint8_t> gray(disc.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = cup[i] > 0 ? kLabelCup
                         : (disc[i] > 0 ? kLabelDisc : kLabelBackground);
  }
  return gray;
}

Planes load_mask(const fs::path& path) {
  RawPng raw = read_png(path, PNG_FORMAT_GRAY);
  if (raw.color) {
    throw LoadError("mask " + path.string() + " is not a grayscale labelmap");
  }
  return decode_labelmap(raw.bytes, raw.height, raw.width);
}

void save_mask(const Planes& mask, const fs::path& path) {
  write_png(path, mask.width(), mask.height(), PNG_FORMAT_GRAY,
            encode_labelmap(mask));
}

AnnotatedSample load_sample(const fs::path& image_path,
                            const fs::path& mask_path) {
  Planes image = load_image(image_path);
  Planes mask = load_mask(mask_path);
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw LoadError("image " + image_path.string() + " is " +
                    std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + " but mask is " +
                    std::to_string(mask.height()) + "x" +
                    std::to_string(mask.width()));
  }
  return make_sample(image_path.stem().string(), std::move(image),
                     std::move(mask));
}

bool dataset_has_masks(const fs::path& dir) {
  auto images = pngs_by_stem(dir / "images");
  auto masks = pngs_by_stem(dir / "masks");
  if (images.empty() || masks.empty()) return false;
  for (const auto& [stem, _] : images) {
    if (!masks.contains(stem)) return false;
  }
  return true;
}

std::vector<AnnotatedSample> load_labeled_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw LoadError("dataset directory not found: " + dir.string());
  }
  auto images = pngs_by_stem(dir / "images");
  auto masks = pngs_by_stem(dir / "masks");
  if (images.empty()) {
    throw LoadError("no images/*.png under " + dir.string());
  }
  std::vector<AnnotatedSample> out;
  out.reserve(images.size());
  for (const auto& [stem, img_path] : images) {
    auto it = masks.find(stem);
    if (it == masks.end()) {
      throw LoadError("missing mask for " + stem + " under " +
                      (dir / "masks").string());
    }
    out.push_back(load_sample(img_path, it->second));
  }
  return out;
}

std::vector<std::pair<std::string, Planes>> load_unlabeled_images(
    const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw LoadError("dataset directory not found: " + dir.string());
  }
  auto images = pngs_by_stem(dir / "images");
  if (images.empty()) {
    throw LoadError("no images/*.png under " + dir.string());
  }
  std::vector<std::pair<std::string, Planes>> out;
  for (const auto& [stem, path] : images) {
    out.emplace_back(stem, load_image(path));
  }
  return out;
}

void write_dataset(const std::vector<AnnotatedSample>& samples,
                   const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  for (const auto& s : samples) {
    save_image(s.image, dir / "images" / (s.name + ".png"));
    save_mask(s.mask, dir / "masks" / (s.name + ".png"));
  }
}

}  // namespace mcda
