#pragma once

#include <array>

#include "stillscene/common.hpp"
#include "stillscene/sample.hpp"

namespace stillscene {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return lo <= hi; }
  bool is_point(double v) const { return lo == v && hi == v; }
};

/// Photometric + flip augmentation parameters. Degenerate intervals
/// (lo == hi) yield constant draws; the identity configuration
/// (blur 0, noise 0, factors 1, flip 0) reproduces the input bit-exactly.
struct AugmentationConfig {
  Interval blur_sigma{0.0, 0.0};       // Gaussian blur stddev, pixels
  Interval noise_sigma{0.0, 0.0};      // additive Gaussian noise stddev
  Interval brightness{1.0, 1.0};       // multiplicative factor
  Interval contrast{1.0, 1.0};         // factor about mid-gray 0.5
  Interval saturation{1.0, 1.0};       // factor toward/away from luma
  double flip_probability = 0.0;
  uint64_t seed = 0;

  void validate() const;
  bool is_identity() const;
};

/// Applies one random augmentation draw. Photometric transforms use the
/// same sampled parameters (and the same noise field) on both images so the
/// pair stays co-registered in illumination; the horizontal flip is applied
/// jointly to images, mask and labels. The mask stays hard binary.
SamplePair augment(const SamplePair& pair, const AugmentationConfig& cfg, Rng& rng);

/// Separable Gaussian blur with reflect padding; sigma <= 0 is the identity.
Image gaussian_blur(const Image& img, double sigma);

Image flip_horizontal(const Image& img);
BinaryMask flip_horizontal(const BinaryMask& m);
LabelMap flip_horizontal(const LabelMap& l);

}  // namespace stillscene
