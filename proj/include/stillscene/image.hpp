#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "stillscene/common.hpp"

namespace stillscene {

// BT.601 luma weights used for every RGB -> gray conversion in the project.
inline constexpr float kLumaR = 0.299f;
inline constexpr float kLumaG = 0.587f;
inline constexpr float kLumaB = 0.114f;

enum class ValueRange { Unit, Signed };  // [0,1] storage vs [-1,1] network

/// Dense H x W x C intensity grid, channel-interleaved, C in {1,3}.
/// Storage convention is [0,1]; network tensors use [-1,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> data;  // size height*width*channels, row-major, c fastest

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {
    if (h <= 0 || w <= 0 || (c != 1 && c != 3))
      throw ShapeError("Image: bad dimensions " + std::to_string(h) + "x" +
                       std::to_string(w) + "x" + std::to_string(c));
  }

  float& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// H x W grid over {0,1}; 1 marks a dynamic pixel.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int h, int w, uint8_t fill = 0)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
  size_t count() const {
    size_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
  }
};

/// Per-pixel class indices in [0, num_classes), plus the subset of indices
/// known to be dynamic.
struct LabelMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::set<int> dynamic_classes;
  std::vector<uint8_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, int n, std::set<int> dyn)
      : height(h), width(w), num_classes(n), dynamic_classes(std::move(dyn)),
        data(static_cast<size_t>(h) * w, 0) {}

  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

  void validate() const;
};

/// Checks every value against the declared range; throws on violation.
void check_range(const Image& img, ValueRange range, const std::string& what);

/// Luma-weighted RGB -> gray. Single-channel input passes through unchanged.
Image to_grayscale(const Image& img);

/// Affine [0,1] -> [-1,1]; rejects out-of-range input.
Image normalize(const Image& img);
/// Affine [-1,1] -> [0,1]; rejects out-of-range input.
Image denormalize(const Image& img);

/// 1 where the pixel's class index is dynamic, else 0.
BinaryMask mask_from_labels(const LabelMap& labels);

}  // namespace stillscene
