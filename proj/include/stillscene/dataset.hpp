#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stillscene/sample.hpp"
#include "stillscene/scene.hpp"

namespace stillscene::scene {

/// On-disk layout: <root>/<split>/{dynamic,static,labels,mask}/<id>.png plus
/// one manifest.json at the root holding every split's section.
struct DatasetManifest {
  std::filesystem::path root;
  std::string split;
  std::vector<std::string> ids;
  int image_size = 0;
  ClassTable class_table;
  std::string generator_version;
  uint64_t global_seed = 0;

  static DatasetManifest load(const std::filesystem::path& root, const std::string& split);
};

/// Renders and writes n sample pairs. Each sample's rng stream derives from
/// hash(seed, index), so results do not depend on write order or worker
/// count; reruns with the same arguments produce byte-identical trees.
DatasetManifest generate_dataset(int n, uint64_t seed, const GenParams& params,
                                 const std::filesystem::path& out_root,
                                 const std::string& split);

struct LoadOptions {
  bool validate = true;    // check per-sample invariants while loading
  bool unpaired_ok = false;  // accept samples without static ground truth
};

/// In-memory split. Pairs follow manifest order.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root, const std::string& split,
                      const LoadOptions& opts = {});

  const std::vector<SamplePair>& pairs() const { return pairs_; }
  const DatasetManifest& manifest() const { return manifest_; }
  const ClassTable& class_table() const { return manifest_.class_table; }
  size_t size() const { return pairs_.size(); }
  const SamplePair& operator[](size_t i) const { return pairs_[i]; }

 private:
  std::vector<SamplePair> pairs_;
  DatasetManifest manifest_;
};

/// Content hash over the manifest's split section plus all sample files;
/// identifies a dataset in reports and cache keys.
std::string dataset_hash(const std::filesystem::path& root, const std::string& split);

}  // namespace stillscene::scene
