#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stillscene/augment.hpp"
#include "stillscene/common.hpp"
#include "stillscene/sample.hpp"

namespace stillscene::scene {

// class indices are fixed by the default table below
inline constexpr int kSky = 0;
inline constexpr int kBuilding = 1;
inline constexpr int kRoad = 2;
inline constexpr int kSidewalk = 3;
inline constexpr int kVehicle = 4;
inline constexpr int kPedestrian = 5;

struct ClassTable {
  std::vector<std::string> names;
  std::set<int> dynamic;
  std::vector<double> pixel_freq;  // filled by generate_dataset

  int num_classes() const { return static_cast<int>(names.size()); }
  static ClassTable defaults();
};

struct Rgb {
  float r = 0, g = 0, b = 0;
};

struct BuildingSpec {
  int x = 0, width = 0, top = 0;
  Rgb facade;
  int window_cols = 0, window_rows = 0;
  float window_shade = 0.5f;  // multiplier on the facade color
};

struct DynamicObjectSpec {
  enum class Kind { Vehicle, Pedestrian };
  Kind kind = Kind::Vehicle;
  int x = 0;       // left edge of the body
  int base_y = 0;  // ground-contact row
  int width = 0, height = 0;
  Rgb body;
  uint64_t texture_seed = 0;
  bool casts_shadow = true;
};

struct SunSpec {
  double dir_x = 0.4, dir_y = 0.9;  // unit light direction, y points down
  double shadow_opacity = 0.35;     // darkening factor in [0,1]
};

struct LayoutSpec {
  int sidewalk_top = 0;  // first row below the sky/building band
  int road_top = 0;
  int road_bottom = 0;  // exclusive; bottom sidewalk below
  Rgb sky_top, sky_bottom;
  Rgb road_light, road_dark;
  Rgb sidewalk;
  bool lane_marking = true;
  std::vector<BuildingSpec> buildings;
  uint64_t texture_seed = 0;
};

/// Full procedural description of one paired scene; rendering it is a pure
/// function, so equal specs give bit-identical sample pairs.
struct SceneSpec {
  uint64_t seed = 0;
  int height = 64, width = 64;
  LayoutSpec layout;
  std::vector<DynamicObjectSpec> objects;
  SunSpec sun;
};

struct IntRange {
  int lo = 0, hi = 0;
  bool valid() const { return lo <= hi; }
};

/// Sampling ranges for scene generation.
struct GenParams {
  int image_size = 64;
  IntRange object_count{1, 4};
  IntRange building_count{2, 5};
  Interval vehicle_width_frac{0.15, 0.34};  // of image width
  Interval vehicle_aspect{0.35, 0.55};      // body height / width
  Interval pedestrian_height_frac{0.12, 0.22};
  Interval shadow_opacity{0.2, 0.5};
  double pedestrian_prob = 0.4;
  double casts_shadow_prob = 0.9;
  double palette_shift = 0.0;  // hue offset separating split regimes

  void validate() const;
};

LayoutSpec sample_layout(Rng& rng, const GenParams& params);
std::vector<DynamicObjectSpec> sample_objects(Rng& rng, const GenParams& params,
                                              const LayoutSpec& layout, int h, int w);

/// Draws a full SceneSpec from the parameter ranges.
SceneSpec sample_scene(Rng& rng, const GenParams& params);

/// Same layout under one rng, objects under another; used by the
/// place-recognition pilot to render the same location with different
/// dynamic content (and vice versa).
SceneSpec sample_scene_split(Rng& layout_rng, Rng& object_rng, const GenParams& params);

struct RenderResult {
  SamplePair pair;
  BinaryMask changed;  // object bodies plus visible shadow pixels
};

/// Renders the paired static/dynamic views with labels and dynamic mask.
/// Outside `changed` the two images are bit-identical; shadow pixels are in
/// `changed` but not in the mask.
RenderResult render_pair(const SceneSpec& spec);

}  // namespace stillscene::scene
