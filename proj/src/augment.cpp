#include "stillscene/augment.hpp"

#include <algorithm>
#include <cmath>

namespace stillscene {

void AugmentationConfig::validate() const {
  auto check = [](const Interval& iv, const char* name) {
    if (!iv.valid())
      throw ConfigError(std::string("augment: interval ") + name + " has lo > hi");
  };
  check(blur_sigma, "blur_sigma");
  check(noise_sigma, "noise_sigma");
  check(brightness, "brightness");
  check(contrast, "contrast");
  check(saturation, "saturation");
  if (blur_sigma.lo < 0.0 || noise_sigma.lo < 0.0)
    throw ConfigError("augment: sigma ranges must be non-negative");
  if (flip_probability < 0.0 || flip_probability > 1.0)
    throw ConfigError("augment: flip_probability outside [0,1]");
}

bool AugmentationConfig::is_identity() const {
  return blur_sigma.is_point(0.0) && noise_sigma.is_point(0.0) &&
         brightness.is_point(1.0) && contrast.is_point(1.0) &&
         saturation.is_point(1.0) && flip_probability == 0.0;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (float& k : kernel) k = static_cast<float>(k / sum);

  auto reflect = [](int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
    return std::clamp(i, 0, n - 1);
  };

  Image tmp(img.height, img.width, img.channels);
  Image out(img.height, img.width, img.channels);
  // horizontal pass
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * img.at(y, reflect(x + k, img.width), c);
        tmp.at(y, x, c) = acc;
      }
  // vertical pass
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * tmp.at(reflect(y + k, img.height), x, c);
        out.at(y, x, c) = std::clamp(acc, 0.0f, 1.0f);
      }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

BinaryMask flip_horizontal(const BinaryMask& m) {
  BinaryMask out(m.height, m.width);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) out.at(y, x) = m.at(y, m.width - 1 - x);
  return out;
}

LabelMap flip_horizontal(const LabelMap& l) {
  LabelMap out(l.height, l.width, l.num_classes, l.dynamic_classes);
  for (int y = 0; y < l.height; ++y)
    for (int x = 0; x < l.width; ++x) out.at(y, x) = l.at(y, l.width - 1 - x);
  return out;
}

namespace {

void apply_photometric(Image& img, float brightness, float contrast,
                       float saturation) {
  if (img.channels == 3 && saturation != 1.0f) {
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t i = 0; i < n; ++i) {
      float* p = &img.data[i * 3];
      float luma = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
      for (int c = 0; c < 3; ++c) p[c] = luma + saturation * (p[c] - luma);
    }
  }
  if (brightness != 1.0f)
    for (float& v : img.data) v *= brightness;
  if (contrast != 1.0f)
    for (float& v : img.data) v = (v - 0.5f) * contrast + 0.5f;
  if (brightness != 1.0f || contrast != 1.0f || saturation != 1.0f)
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

void add_noise(Image& img, const std::vector<float>& field) {
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = std::clamp(img.data[i] + field[i], 0.0f, 1.0f);
}

}  // namespace

SamplePair augment(const SamplePair& pair, const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.is_identity()) return pair;

  SamplePair out = pair;

  const bool flip = cfg.flip_probability > 0.0 && rng.bernoulli(cfg.flip_probability);
  const double sigma_blur = rng.uniform(cfg.blur_sigma.lo, cfg.blur_sigma.hi);
  const double sigma_noise = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
  const float brightness = static_cast<float>(rng.uniform(cfg.brightness.lo, cfg.brightness.hi));
  const float contrast = static_cast<float>(rng.uniform(cfg.contrast.lo, cfg.contrast.hi));
  const float saturation = static_cast<float>(rng.uniform(cfg.saturation.lo, cfg.saturation.hi));

  if (flip) {
    out.dynamic_rgb = flip_horizontal(out.dynamic_rgb);
    out.static_rgb = flip_horizontal(out.static_rgb);
    out.mask = flip_horizontal(out.mask);
    out.labels = flip_horizontal(out.labels);
  }

  if (sigma_blur > 0.0) {
    out.dynamic_rgb = gaussian_blur(out.dynamic_rgb, sigma_blur);
    out.static_rgb = gaussian_blur(out.static_rgb, sigma_blur);
  }

  apply_photometric(out.dynamic_rgb, brightness, contrast, saturation);
  apply_photometric(out.static_rgb, brightness, contrast, saturation);

  if (sigma_noise > 0.0) {
    // one shared field keeps the pair photometrically co-registered
    std::vector<float> field(out.dynamic_rgb.size());
    for (float& v : field) v = static_cast<float>(rng.normal(0.0, sigma_noise));
    add_noise(out.dynamic_rgb, field);
    add_noise(out.static_rgb, field);
  }

  return out;
}

}  // namespace stillscene
