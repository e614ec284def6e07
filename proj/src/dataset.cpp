#include "stillscene/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "stillscene/pngio.hpp"
#include "stillscene/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stillscene::scene {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json class_table_json(const ClassTable& t) {
  json arr = json::array();
  for (int i = 0; i < t.num_classes(); ++i)
    arr.push_back({{"name", t.names[i]},
                   {"index", i},
                   {"dynamic", t.dynamic.count(i) > 0}});
  return arr;
}

ClassTable class_table_from_json(const json& arr) {
  ClassTable t;
  t.names.resize(arr.size());
  for (const auto& e : arr) {
    const int idx = e.at("index").get<int>();
    if (idx < 0 || idx >= static_cast<int>(arr.size()))
      throw DataError("manifest: class index out of range");
    t.names[idx] = e.at("name").get<std::string>();
    if (e.at("dynamic").get<bool>()) t.dynamic.insert(idx);
  }
  return t;
}

json params_json(const GenParams& p) {
  return json{{"image_size", p.image_size},
              {"object_count", {p.object_count.lo, p.object_count.hi}},
              {"building_count", {p.building_count.lo, p.building_count.hi}},
              {"vehicle_width_frac", {p.vehicle_width_frac.lo, p.vehicle_width_frac.hi}},
              {"vehicle_aspect", {p.vehicle_aspect.lo, p.vehicle_aspect.hi}},
              {"pedestrian_height_frac",
               {p.pedestrian_height_frac.lo, p.pedestrian_height_frac.hi}},
              {"shadow_opacity", {p.shadow_opacity.lo, p.shadow_opacity.hi}},
              {"pedestrian_prob", p.pedestrian_prob},
              {"casts_shadow_prob", p.casts_shadow_prob},
              {"palette_shift", p.palette_shift}};
}

json read_manifest_file(const fs::path& root) {
  const fs::path p = root / "manifest.json";
  if (!fs::exists(p)) return json::object();
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  json j;
  in >> j;
  return j;
}

void write_manifest_file(const fs::path& root, const json& j) {
  const fs::path p = root / "manifest.json";
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

}  // namespace

DatasetManifest DatasetManifest::load(const fs::path& root, const std::string& split) {
  const json j = read_manifest_file(root);
  if (j.empty()) throw DataError("no manifest.json under " + root.string());
  if (!j.contains("splits") || !j.at("splits").contains(split))
    throw DataError("manifest has no split '" + split + "' under " + root.string());
  const json& s = j.at("splits").at(split);
  DatasetManifest m;
  m.root = root;
  m.split = split;
  m.image_size = s.at("image_size").get<int>();
  m.global_seed = s.at("seed").get<uint64_t>();
  m.generator_version = j.value("generator_version", "");
  m.class_table = class_table_from_json(j.at("class_table"));
  if (s.contains("class_pixel_freq"))
    m.class_table.pixel_freq = s.at("class_pixel_freq").get<std::vector<double>>();
  m.ids = s.at("ids").get<std::vector<std::string>>();
  return m;
}

DatasetManifest generate_dataset(int n, uint64_t seed, const GenParams& params,
                                 const fs::path& out_root, const std::string& split) {
  params.validate();
  if (n < 0) throw ConfigError("generate_dataset: n must be >= 0");
  const fs::path base = out_root / split;
  std::error_code ec;
  for (const char* sub : {"dynamic", "static", "labels", "mask"}) {
    fs::create_directories(base / sub, ec);
    if (ec)
      throw DataError("cannot create " + (base / sub).string() + ": " + ec.message());
  }

  ClassTable table = ClassTable::defaults();
  std::vector<std::string> ids(n);
  std::vector<std::vector<int64_t>> histograms(
      std::max(n, 1), std::vector<int64_t>(table.num_classes(), 0));

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
    const SceneSpec spec = sample_scene(rng, params);
    RenderResult r = render_pair(spec);
    const std::string id = zero_pad(i, 6);
    ids[i] = id;
    io::write_image_png((base / "dynamic" / (id + ".png")).string(), r.pair.dynamic_rgb);
    io::write_image_png((base / "static" / (id + ".png")).string(), r.pair.static_rgb);
    io::write_labels_png((base / "labels" / (id + ".png")).string(), r.pair.labels);
    io::write_mask_png((base / "mask" / (id + ".png")).string(), r.pair.mask);
    for (uint8_t v : r.pair.labels.data) histograms[i][v]++;
  }

  std::vector<double> freq(table.num_classes(), 0.0);
  int64_t total = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < table.num_classes(); ++c) {
      freq[c] += static_cast<double>(histograms[i][c]);
      total += histograms[i][c];
    }
  if (total > 0)
    for (double& f : freq) f /= static_cast<double>(total);
  table.pixel_freq = freq;

  json root_json = read_manifest_file(out_root);
  root_json["format_version"] = 1;
  root_json["generator_version"] = kVersion;
  if (root_json.contains("class_table")) {
    // the table must stay consistent across splits of one root
    ClassTable existing = class_table_from_json(root_json.at("class_table"));
    if (existing.names != table.names || existing.dynamic != table.dynamic)
      throw DataError("generate_dataset: class table mismatch with existing manifest");
  }
  root_json["class_table"] = class_table_json(table);
  root_json["splits"][split] = {{"seed", seed},
                                {"count", n},
                                {"image_size", params.image_size},
                                {"ids", ids},
                                {"class_pixel_freq", freq},
                                {"params", params_json(params)}};
  write_manifest_file(out_root, root_json);

  DatasetManifest m;
  m.root = out_root;
  m.split = split;
  m.ids = std::move(ids);
  m.image_size = params.image_size;
  m.class_table = table;
  m.generator_version = kVersion;
  m.global_seed = seed;
  return m;
}

Dataset Dataset::load(const fs::path& root, const std::string& split,
                      const LoadOptions& opts) {
  Dataset ds;
  ds.manifest_ = DatasetManifest::load(root, split);
  const ClassTable& table = ds.manifest_.class_table;
  const fs::path base = root / split;
  ds.pairs_.reserve(ds.manifest_.ids.size());
  for (const std::string& id : ds.manifest_.ids) {
    SamplePair p;
    p.id = id;
    const fs::path dyn = base / "dynamic" / (id + ".png");
    if (!fs::exists(dyn))
      throw DataError("sample " + id + ": missing " + dyn.string());
    p.dynamic_rgb = io::read_image_png(dyn.string());

    const fs::path stat = base / "static" / (id + ".png");
    if (fs::exists(stat)) {
      p.static_rgb = io::read_image_png(stat.string());
    } else if (opts.unpaired_ok) {
      // unpaired real sample: no static ground truth; reconstruct-identity
      p.static_rgb = p.dynamic_rgb;
      p.real_data = true;
    } else {
      throw DataError("sample " + id + ": missing " + stat.string());
    }

    const fs::path lab = base / "labels" / (id + ".png");
    const fs::path msk = base / "mask" / (id + ".png");
    if (fs::exists(lab) && fs::exists(msk)) {
      p.labels = io::read_labels_png(lab.string(), table.num_classes(), table.dynamic);
      p.mask = io::read_mask_png(msk.string());
    } else if (p.real_data) {
      p.labels = LabelMap(p.dynamic_rgb.height, p.dynamic_rgb.width,
                          table.num_classes(), table.dynamic);
      p.mask = BinaryMask(p.dynamic_rgb.height, p.dynamic_rgb.width, 0);
    } else {
      throw DataError("sample " + id + ": missing labels or mask file");
    }

    if (opts.validate) {
      const int h = ds.manifest_.image_size;
      auto bad = [&](const std::string& what) {
        throw DataError("sample " + id + ": " + what);
      };
      if (p.dynamic_rgb.height != h || p.dynamic_rgb.width != h)
        bad("dynamic image size mismatch");
      if (!p.dynamic_rgb.same_shape(p.static_rgb)) bad("static image size mismatch");
      if (p.mask.height != h || p.mask.width != h) bad("mask size mismatch");
      if (p.labels.height != h || p.labels.width != h) bad("label map size mismatch");
      if (!p.real_data) {
        const BinaryMask derived = mask_from_labels(p.labels);
        if (derived.data != p.mask.data) bad("mask does not match label membership");
      }
    }
    ds.pairs_.push_back(std::move(p));
  }
  return ds;
}

std::string dataset_hash(const fs::path& root, const std::string& split) {
  DatasetManifest m = DatasetManifest::load(root, split);
  uint64_t h = mix64(m.global_seed ^ m.ids.size());
  h = hash_combine(h, static_cast<uint64_t>(m.image_size));
  for (const std::string& id : m.ids)
    for (const char* sub : {"dynamic", "static", "labels", "mask"}) {
      const fs::path p = root / split / sub / (id + ".png");
      if (!fs::exists(p)) continue;
      std::ifstream in(p, std::ios::binary);
      std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
      uint64_t fh = 1469598103934665603ULL;
      for (char c : buf) fh = (fh ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
      h = hash_combine(h, fh);
    }
  char out[17];
  snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

}  // namespace stillscene::scene
