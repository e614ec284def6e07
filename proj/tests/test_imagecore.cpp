#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stillscene/augment.hpp"
#include "stillscene/image.hpp"

using namespace stillscene;

TEST_CASE("grayscale: zero image stays zero") {
  Image rgb(4, 4, 3, 0.0f);
  Image g = to_grayscale(rgb);
  CHECK(g.channels == 1);
  for (float v : g.data) CHECK(v == 0.0f);
}

TEST_CASE("grayscale: uniform rgb maps to the same gray value") {
  for (float v : {0.1f, 0.25f, 0.5f, 0.9f, 1.0f}) {
    Image rgb(3, 5, 3, v);
    Image g = to_grayscale(rgb);
    for (float got : g.data) CHECK(got == doctest::Approx(v).epsilon(1e-6));
  }
}

TEST_CASE("grayscale: pure red maps to the BT.601 red weight") {
  Image rgb(1, 1, 3);
  rgb.at(0, 0, 0) = 1.0f;
  Image g = to_grayscale(rgb);
  CHECK(g.at(0, 0) == doctest::Approx(0.299).epsilon(1e-6));
}

TEST_CASE("grayscale: single-channel input passes through (idempotent)") {
  Rng rng(3);
  Image g(6, 7, 1);
  for (float& v : g.data) v = static_cast<float>(rng.uniform());
  Image g2 = to_grayscale(g);
  CHECK(g2.data == g.data);
  Image g3 = to_grayscale(to_grayscale(g2));
  CHECK(g3.data == g2.data);
}

TEST_CASE("normalize: midpoint and endpoints") {
  Image img(1, 3, 1);
  img.at(0, 0) = 0.5f;
  img.at(0, 1) = 0.0f;
  img.at(0, 2) = 1.0f;
  Image n = normalize(img);
  CHECK(n.at(0, 0) == doctest::Approx(0.0));
  CHECK(n.at(0, 1) == doctest::Approx(-1.0));
  CHECK(n.at(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("normalize/denormalize: round trip within 1e-6 on 1000 random values") {
  Rng rng(17);
  Image img(10, 100, 1);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  Image back = denormalize(normalize(img));
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) < 1e-6);
}

TEST_CASE("normalize: out-of-range input is rejected") {
  Image img(1, 1, 1);
  img.at(0, 0) = 1.5f;
  CHECK_THROWS_AS(normalize(img), DataError);
  img.at(0, 0) = -2.0f;
  CHECK_THROWS_AS(denormalize(img), DataError);
}

TEST_CASE("mask_from_labels: constant static and constant dynamic maps") {
  LabelMap l(4, 4, 6, {4, 5});
  for (auto& v : l.data) v = 2;  // road
  BinaryMask m = mask_from_labels(l);
  CHECK(m.count() == 0);
  for (auto& v : l.data) v = 4;  // vehicle
  m = mask_from_labels(l);
  CHECK(m.count() == m.size());
}

TEST_CASE("mask_from_labels: random map equals per-pixel membership oracle") {
  Rng rng(5);
  LabelMap l(16, 16, 6, {4, 5});
  for (auto& v : l.data) v = static_cast<uint8_t>(rng.uniform_int(0, 5));
  BinaryMask m = mask_from_labels(l);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const bool dyn = l.at(y, x) == 4 || l.at(y, x) == 5;
      CHECK(m.at(y, x) == (dyn ? 1 : 0));
    }
}

TEST_CASE("mask_from_labels: invariant to relabeling static classes among themselves") {
  Rng rng(6);
  LabelMap l(8, 8, 6, {4, 5});
  for (auto& v : l.data) v = static_cast<uint8_t>(rng.uniform_int(0, 5));
  LabelMap swapped = l;
  for (auto& v : swapped.data) {
    if (v == 0) v = 3;
    else if (v == 3) v = 0;  // permute two static classes
  }
  CHECK(mask_from_labels(l).data == mask_from_labels(swapped).data);
}

TEST_CASE("label map validation rejects bad dynamic sets") {
  LabelMap l(2, 2, 6, {});
  CHECK_THROWS_AS(l.validate(), DataError);
  LabelMap l2(2, 2, 6, {0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(l2.validate(), DataError);
  LabelMap l3(2, 2, 6, {7});
  CHECK_THROWS_AS(l3.validate(), DataError);
}

namespace {

SamplePair make_pair(uint64_t seed) {
  Rng rng(seed);
  SamplePair p;
  p.dynamic_rgb = Image(8, 8, 3);
  p.static_rgb = Image(8, 8, 3);
  for (float& v : p.dynamic_rgb.data) v = static_cast<float>(rng.uniform());
  for (float& v : p.static_rgb.data) v = static_cast<float>(rng.uniform());
  p.labels = LabelMap(8, 8, 6, {4, 5});
  for (auto& v : p.labels.data) v = static_cast<uint8_t>(rng.uniform_int(0, 5));
  p.mask = mask_from_labels(p.labels);
  p.id = "t";
  return p;
}

bool pairs_equal(const SamplePair& a, const SamplePair& b) {
  return a.dynamic_rgb.data == b.dynamic_rgb.data &&
         a.static_rgb.data == b.static_rgb.data && a.mask.data == b.mask.data &&
         a.labels.data == b.labels.data;
}

}  // namespace

TEST_CASE("augment: identity configuration is bit-exact identity") {
  SamplePair p = make_pair(11);
  AugmentationConfig cfg;  // all defaults are the identity
  Rng rng(99);
  SamplePair out = augment(p, cfg, rng);
  CHECK(pairs_equal(out, p));
}

TEST_CASE("augment: flip with p=1 is an involution") {
  SamplePair p = make_pair(12);
  AugmentationConfig cfg;
  cfg.flip_probability = 1.0;
  Rng r1(1), r2(2);
  SamplePair once = augment(p, cfg, r1);
  CHECK_FALSE(pairs_equal(once, p));
  SamplePair twice = augment(once, cfg, r2);
  CHECK(pairs_equal(twice, p));
}

TEST_CASE("augment: same seed gives identical outputs") {
  SamplePair p = make_pair(13);
  AugmentationConfig cfg;
  cfg.blur_sigma = {0.0, 1.5};
  cfg.noise_sigma = {0.0, 0.05};
  cfg.brightness = {0.8, 1.2};
  cfg.contrast = {0.8, 1.2};
  cfg.saturation = {0.7, 1.3};
  cfg.flip_probability = 0.5;
  Rng r1(42), r2(42), r3(43);
  SamplePair a = augment(p, cfg, r1);
  SamplePair b = augment(p, cfg, r2);
  SamplePair c = augment(p, cfg, r3);
  CHECK(pairs_equal(a, b));
  CHECK_FALSE(pairs_equal(a, c));  // different stream, different draw
}

TEST_CASE("augment: photometric params applied identically to both images") {
  SamplePair p = make_pair(14);
  p.static_rgb = p.dynamic_rgb;  // identical views
  AugmentationConfig cfg;
  cfg.brightness = {0.5, 1.5};
  cfg.contrast = {0.5, 1.5};
  cfg.noise_sigma = {0.02, 0.02};
  Rng rng(7);
  SamplePair out = augment(p, cfg, rng);
  CHECK(out.dynamic_rgb.data == out.static_rgb.data);
}

TEST_CASE("augment: degenerate ranges give constant parameters, mask stays binary") {
  SamplePair p = make_pair(15);
  AugmentationConfig cfg;
  cfg.brightness = {1.2, 1.2};
  Rng r1(100), r2(200);
  SamplePair a = augment(p, cfg, r1);
  SamplePair b = augment(p, cfg, r2);
  CHECK(a.dynamic_rgb.data == b.dynamic_rgb.data);  // no randomness left
  for (uint8_t v : a.mask.data) CHECK((v == 0 || v == 1));
}

TEST_CASE("augment: invalid intervals rejected") {
  AugmentationConfig cfg;
  cfg.blur_sigma = {2.0, 1.0};
  SamplePair p = make_pair(16);
  Rng rng(0);
  CHECK_THROWS_AS(augment(p, cfg, rng), ConfigError);
}

TEST_CASE("gaussian blur: sigma 0 is identity and output stays in range") {
  SamplePair p = make_pair(17);
  CHECK(gaussian_blur(p.dynamic_rgb, 0.0).data == p.dynamic_rgb.data);
  Image b = gaussian_blur(p.dynamic_rgb, 2.0);
  for (float v : b.data) CHECK((v >= 0.0f && v <= 1.0f));
}
