#include "stillscene/scene.hpp"

#include <algorithm>
#include <cmath>

namespace stillscene::scene {

namespace {

// deterministic per-pixel value noise in [0,1)
double noise01(uint64_t seed, int y, int x) {
  return static_cast<double>(mix64(seed ^ (static_cast<uint64_t>(y) * 0x9E3779B1ULL) ^
                                   (static_cast<uint64_t>(x) * 0x85EBCA77ULL)) >>
                             11) *
         0x1.0p-53;
}

// palette floor keeps every static pixel bright enough that a multiplicative
// shadow always changes its 8-bit value
constexpr float kFloor = 0.10f;

float clampf(float v) { return std::clamp(v, kFloor, 1.0f); }

void put(Image& img, int y, int x, Rgb c) {
  img.at(y, x, 0) = clampf(c.r);
  img.at(y, x, 1) = clampf(c.g);
  img.at(y, x, 2) = clampf(c.b);
}

Rgb jitter(Rgb c, double amp, uint64_t seed, int y, int x) {
  const float d = static_cast<float>((noise01(seed, y, x) - 0.5) * 2.0 * amp);
  return {c.r + d, c.g + d, c.b + d};
}

Rgb scale(Rgb c, float f) { return {c.r * f, c.g * f, c.b * f}; }

}  // namespace

ClassTable ClassTable::defaults() {
  ClassTable t;
  t.names = {"sky", "building", "road", "sidewalk", "vehicle", "pedestrian"};
  t.dynamic = {kVehicle, kPedestrian};
  return t;
}

void GenParams::validate() const {
  if (image_size < 16)
    throw ConfigError("scene params: image_size must be >= 16");
  if (!object_count.valid() || object_count.lo < 0)
    throw ConfigError("scene params: object_count range invalid");
  if (!building_count.valid() || building_count.lo < 0)
    throw ConfigError("scene params: building_count range invalid");
  auto check01 = [](const Interval& iv, const char* name) {
    if (!iv.valid() || iv.lo < 0.0)
      throw ConfigError(std::string("scene params: range ") + name + " invalid");
  };
  check01(vehicle_width_frac, "vehicle_width_frac");
  check01(vehicle_aspect, "vehicle_aspect");
  check01(pedestrian_height_frac, "pedestrian_height_frac");
  check01(shadow_opacity, "shadow_opacity");
  if (vehicle_width_frac.hi > 0.95)
    throw ConfigError("scene params: vehicle_width_frac allows objects larger than the frame");
  if (pedestrian_height_frac.hi > 0.6)
    throw ConfigError("scene params: pedestrian_height_frac allows objects larger than the frame");
  if (shadow_opacity.hi > 0.9)
    throw ConfigError("scene params: shadow_opacity must stay below 0.9");
  if (pedestrian_prob < 0.0 || pedestrian_prob > 1.0 || casts_shadow_prob < 0.0 ||
      casts_shadow_prob > 1.0)
    throw ConfigError("scene params: probabilities outside [0,1]");
}

LayoutSpec sample_layout(Rng& rng, const GenParams& params) {
  const int sz = params.image_size;
  LayoutSpec l;
  l.texture_seed = rng.next_u64();
  l.sidewalk_top = static_cast<int>(rng.uniform_int(sz * 45 / 100, sz * 55 / 100));
  l.road_top = l.sidewalk_top + std::max(2, sz / 16);
  l.road_bottom = sz - std::max(2, sz / 12);
  const float shift = static_cast<float>(params.palette_shift);
  l.sky_top = {0.35f + 0.1f * static_cast<float>(rng.uniform()) - shift * 0.1f,
               0.55f + 0.1f * static_cast<float>(rng.uniform()),
               0.75f + 0.2f * static_cast<float>(rng.uniform()) + shift * 0.1f};
  l.sky_bottom = {l.sky_top.r + 0.15f, l.sky_top.g + 0.12f, l.sky_top.b + 0.05f};
  const float road_base = 0.30f + 0.1f * static_cast<float>(rng.uniform());
  l.road_light = {road_base, road_base, road_base + 0.02f};
  l.road_dark = scale(l.road_light, 0.75f);
  const float side = 0.5f + 0.12f * static_cast<float>(rng.uniform());
  l.sidewalk = {side, side * (0.95f + shift * 0.05f), side * 0.9f};
  l.lane_marking = rng.bernoulli(0.85);

  const int n_buildings =
      static_cast<int>(rng.uniform_int(params.building_count.lo, params.building_count.hi));
  int cursor = -sz / 8;
  for (int i = 0; i < n_buildings && cursor < sz; ++i) {
    BuildingSpec b;
    b.width = static_cast<int>(rng.uniform_int(sz / 5, sz / 2));
    b.x = cursor + static_cast<int>(rng.uniform_int(0, sz / 10));
    b.top = static_cast<int>(rng.uniform_int(sz / 16, l.sidewalk_top / 2 + sz / 8));
    const float base = 0.3f + 0.4f * static_cast<float>(rng.uniform());
    b.facade = {base * (1.0f + shift * 0.2f), base * (0.9f + 0.2f * static_cast<float>(rng.uniform())),
                base * (0.8f + 0.2f * static_cast<float>(rng.uniform()))};
    b.window_cols = static_cast<int>(rng.uniform_int(2, 5));
    b.window_rows = static_cast<int>(rng.uniform_int(2, 6));
    b.window_shade = 0.4f + 0.3f * static_cast<float>(rng.uniform());
    l.buildings.push_back(b);
    cursor = b.x + b.width + static_cast<int>(rng.uniform_int(0, sz / 12));
  }
  return l;
}

std::vector<DynamicObjectSpec> sample_objects(Rng& rng, const GenParams& params,
                                              const LayoutSpec& layout, int h, int w) {
  const int n = static_cast<int>(
      rng.uniform_int(params.object_count.lo, params.object_count.hi));
  std::vector<DynamicObjectSpec> objects;
  static const Rgb kVehiclePalette[] = {
      {0.75f, 0.2f, 0.2f}, {0.2f, 0.3f, 0.75f}, {0.8f, 0.7f, 0.25f},
      {0.85f, 0.85f, 0.85f}, {0.2f, 0.55f, 0.3f}, {0.45f, 0.25f, 0.55f}};
  static const Rgb kPedestrianPalette[] = {
      {0.7f, 0.35f, 0.3f}, {0.3f, 0.45f, 0.6f}, {0.55f, 0.5f, 0.3f}, {0.6f, 0.3f, 0.5f}};
  for (int i = 0; i < n; ++i) {
    DynamicObjectSpec o;
    o.texture_seed = rng.next_u64();
    o.casts_shadow = rng.bernoulli(params.casts_shadow_prob);
    if (rng.bernoulli(params.pedestrian_prob)) {
      o.kind = DynamicObjectSpec::Kind::Pedestrian;
      o.height = std::max(4, static_cast<int>(std::lround(
                                 rng.uniform(params.pedestrian_height_frac.lo,
                                             params.pedestrian_height_frac.hi) *
                                 h)));
      o.width = std::max(2, o.height / 3);
      // pedestrians walk on either sidewalk band
      o.base_y = rng.bernoulli(0.5)
                     ? static_cast<int>(rng.uniform_int(layout.road_top - 1, layout.road_top))
                     : static_cast<int>(rng.uniform_int(layout.road_bottom + 1,
                                                        std::max(layout.road_bottom + 1, h - 2)));
      o.body = kPedestrianPalette[rng.uniform_int(0, 3)];
    } else {
      o.kind = DynamicObjectSpec::Kind::Vehicle;
      o.width = std::max(6, static_cast<int>(std::lround(
                                rng.uniform(params.vehicle_width_frac.lo,
                                            params.vehicle_width_frac.hi) *
                                w)));
      o.height = std::max(4, static_cast<int>(std::lround(
                                 o.width * rng.uniform(params.vehicle_aspect.lo,
                                                       params.vehicle_aspect.hi))));
      o.base_y = static_cast<int>(
          rng.uniform_int(layout.road_top + 1, std::max(layout.road_top + 1, layout.road_bottom - 1)));
      o.body = kVehiclePalette[rng.uniform_int(0, 5)];
    }
    // keep at least a third of the body inside the frame horizontally
    o.x = static_cast<int>(rng.uniform_int(-o.width / 3, w - 1 - (2 * o.width) / 3));
    o.base_y = std::clamp(o.base_y, 2, h - 1);
    objects.push_back(o);
  }
  return objects;
}

SceneSpec sample_scene(Rng& rng, const GenParams& params) {
  return sample_scene_split(rng, rng, params);
}

SceneSpec sample_scene_split(Rng& layout_rng, Rng& object_rng, const GenParams& params) {
  params.validate();
  SceneSpec spec;
  spec.seed = layout_rng.next_u64();
  spec.height = spec.width = params.image_size;
  spec.layout = sample_layout(layout_rng, params);
  spec.objects =
      sample_objects(object_rng, params, spec.layout, spec.height, spec.width);
  const double angle = object_rng.uniform(-0.9, 0.9);
  spec.sun.dir_x = std::sin(angle);
  spec.sun.dir_y = std::cos(angle);
  spec.sun.shadow_opacity =
      object_rng.uniform(params.shadow_opacity.lo, params.shadow_opacity.hi);
  return spec;
}

namespace {

// collects the painted pixel set of one object body
void paint_object(const DynamicObjectSpec& o, int h, int w,
                  std::vector<std::pair<int, int>>& body,
                  std::vector<Rgb>& colors) {
  auto emit = [&](int y, int x, Rgb c) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    body.emplace_back(y, x);
    colors.push_back(c);
  };
  if (o.kind == DynamicObjectSpec::Kind::Vehicle) {
    const int top = o.base_y - o.height + 1;
    const int cabin_top = top - std::max(2, o.height / 2);
    const int cabin_x0 = o.x + o.width / 5;
    const int cabin_x1 = o.x + o.width - o.width / 5;
    for (int y = cabin_top; y <= o.base_y; ++y)
      for (int x = o.x; x < o.x + o.width; ++x) {
        const bool in_cabin = y < top && x >= cabin_x0 && x < cabin_x1;
        const bool in_body = y >= top;
        if (!in_cabin && !in_body) continue;
        Rgb c = o.body;
        if (in_cabin && y < top - 1 && x > cabin_x0 && x < cabin_x1 - 1)
          c = scale(c, 0.55f);  // window glass
        c = jitter(c, 0.02, o.texture_seed, y, x);
        emit(y, x, c);
      }
    // wheels
    const int wheel_r = std::max(1, o.height / 4);
    for (int cx : {o.x + o.width / 5, o.x + o.width - o.width / 5 - 1})
      for (int y = o.base_y - wheel_r; y <= o.base_y; ++y)
        for (int x = cx - wheel_r; x <= cx + wheel_r; ++x) {
          const double dy = y - (o.base_y - wheel_r / 2.0), dx = x - cx;
          if (dy * dy + dx * dx <= wheel_r * wheel_r) emit(y, x, {0.12f, 0.12f, 0.12f});
        }
  } else {
    const int head_r = std::max(1, o.height / 5);
    const int head_cy = o.base_y - o.height + head_r;
    const int cx = o.x + o.width / 2;
    for (int y = head_cy - head_r; y <= head_cy + head_r; ++y)
      for (int x = cx - head_r; x <= cx + head_r; ++x) {
        const double dy = y - head_cy, dx = x - cx;
        if (dy * dy + dx * dx <= head_r * head_r)
          emit(y, x, jitter({0.8f, 0.65f, 0.5f}, 0.02, o.texture_seed, y, x));
      }
    for (int y = head_cy + head_r + 1; y <= o.base_y; ++y)
      for (int x = o.x; x < o.x + o.width; ++x)
        emit(y, x, jitter(o.body, 0.03, o.texture_seed, y, x));
  }
}

}  // namespace

RenderResult render_pair(const SceneSpec& spec) {
  const int h = spec.height, w = spec.width;
  ClassTable table = ClassTable::defaults();
  Image statik(h, w, 3);
  LabelMap labels(h, w, table.num_classes(), table.dynamic);

  const LayoutSpec& l = spec.layout;
  // sky
  for (int y = 0; y < l.sidewalk_top; ++y) {
    const float t = l.sidewalk_top > 1 ? static_cast<float>(y) / (l.sidewalk_top - 1) : 0.0f;
    for (int x = 0; x < w; ++x) {
      Rgb c = {l.sky_top.r + t * (l.sky_bottom.r - l.sky_top.r),
               l.sky_top.g + t * (l.sky_bottom.g - l.sky_top.g),
               l.sky_top.b + t * (l.sky_bottom.b - l.sky_top.b)};
      put(statik, y, x, c);
      labels.at(y, x) = kSky;
    }
  }
  // buildings
  for (const auto& b : l.buildings) {
    for (int y = std::max(0, b.top); y < l.sidewalk_top; ++y)
      for (int x = std::max(0, b.x); x < std::min(w, b.x + b.width); ++x) {
        Rgb c = jitter(b.facade, 0.03, l.texture_seed, y, x);
        // window grid
        const int bh = l.sidewalk_top - b.top;
        if (b.window_cols > 0 && bh > 4) {
          const int cw = b.width / (b.window_cols * 2 + 1);
          const int ch = bh / (b.window_rows * 2 + 1);
          if (cw >= 1 && ch >= 1) {
            const int lx = x - b.x, ly = y - b.top;
            if ((lx / cw) % 2 == 1 && (ly / ch) % 2 == 1 && lx / cw < 2 * b.window_cols &&
                ly / ch < 2 * b.window_rows)
              c = scale(c, b.window_shade);
          }
        }
        put(statik, y, x, c);
        labels.at(y, x) = kBuilding;
      }
  }
  // sidewalk band, road, bottom sidewalk
  for (int y = l.sidewalk_top; y < h; ++y) {
    const bool on_road = y >= l.road_top && y < l.road_bottom;
    for (int x = 0; x < w; ++x) {
      if (on_road) {
        const float t = static_cast<float>(y - l.road_top) /
                        std::max(1, l.road_bottom - 1 - l.road_top);
        Rgb c = {l.road_light.r + t * (l.road_dark.r - l.road_light.r),
                 l.road_light.g + t * (l.road_dark.g - l.road_light.g),
                 l.road_light.b + t * (l.road_dark.b - l.road_light.b)};
        const int mid = (l.road_top + l.road_bottom) / 2;
        if (l.lane_marking && (y == mid || y == mid + 1) && (x / 4) % 2 == 0)
          c = {0.85f, 0.85f, 0.8f};
        put(statik, y, x, jitter(c, 0.02, l.texture_seed, y, x));
        labels.at(y, x) = kRoad;
      } else {
        Rgb c = jitter(l.sidewalk, 0.025, l.texture_seed, y, x);
        // curb line
        if (y == l.road_top - 1 || y == l.road_bottom) c = scale(c, 0.8f);
        put(statik, y, x, c);
        labels.at(y, x) = kSidewalk;
      }
    }
  }

  // object bodies (painted later onto the dynamic image; needed now to know
  // which shadow pixels stay visible)
  std::vector<std::vector<std::pair<int, int>>> bodies(spec.objects.size());
  std::vector<std::vector<Rgb>> colors(spec.objects.size());
  std::vector<uint8_t> body_any(static_cast<size_t>(h) * w, 0);
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    paint_object(spec.objects[i], h, w, bodies[i], colors[i]);
    if (bodies[i].empty())
      throw DataError("render_pair: object " + std::to_string(i) +
                      " lies entirely outside the frame");
    for (auto [y, x] : bodies[i]) body_any[static_cast<size_t>(y) * w + x] = 1;
  }

  Image dynamic = statik;
  BinaryMask changed(h, w);

  // shadows: sheared, squashed silhouette below the ground-contact row
  const double shear = spec.sun.dir_y > 0.1 ? spec.sun.dir_x / spec.sun.dir_y
                                            : (spec.sun.dir_x >= 0 ? 1.0 : -1.0) * 0.9;
  const float factor = static_cast<float>(1.0 - spec.sun.shadow_opacity);
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& o = spec.objects[i];
    if (!o.casts_shadow) continue;
    std::vector<uint8_t> applied(static_cast<size_t>(h) * w, 0);
    for (auto [y, x] : bodies[i]) {
      const int rise = o.base_y - y;
      if (rise < 0) continue;
      const int sy = o.base_y + 1 + static_cast<int>(std::lround(0.35 * rise));
      const int sx = x + static_cast<int>(std::lround(shear * (rise + 1)));
      if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
      const size_t idx = static_cast<size_t>(sy) * w + sx;
      if (body_any[idx] || applied[idx]) continue;
      applied[idx] = 1;
      for (int c = 0; c < 3; ++c) dynamic.at(sy, sx, c) *= factor;
      changed.at(sy, sx) = 1;
    }
  }

  // bodies over shadows
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    const int cls = spec.objects[i].kind == DynamicObjectSpec::Kind::Vehicle
                        ? kVehicle
                        : kPedestrian;
    for (size_t k = 0; k < bodies[i].size(); ++k) {
      auto [y, x] = bodies[i][k];
      put(dynamic, y, x, colors[i][k]);
      labels.at(y, x) = static_cast<uint8_t>(cls);
      changed.at(y, x) = 1;
    }
  }

  RenderResult out;
  out.pair.dynamic_rgb = std::move(dynamic);
  out.pair.static_rgb = std::move(statik);
  out.pair.labels = std::move(labels);
  out.pair.mask = mask_from_labels(out.pair.labels);
  out.changed = std::move(changed);
  return out;
}

}  // namespace stillscene::scene
