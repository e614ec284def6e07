#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stillscene/image.hpp"

namespace stillscene::eval {

/// Per-image mean absolute errors as percentages of the intensity range.
/// l1_mask/l1_no_mask are absent when their region is empty.
struct SampleMetrics {
  std::string id;
  double l1 = 0.0;
  std::optional<double> l1_mask;
  std::optional<double> l1_no_mask;
  long mask_pixels = 0;
  long total_pixels = 0;
};

struct MetricsReport {
  std::string method;
  std::string dataset_id;
  std::vector<SampleMetrics> per_image;
  double l1 = 0.0;
  double l1_mask = 0.0;
  double l1_no_mask = 0.0;
  long count = 0;
  long mask_count = 0;     // images contributing to l1_mask
  long no_mask_count = 0;  // images contributing to l1_no_mask

  /// Aggregates = mean of per-image values (over images where defined).
  void finalize();
};

/// L1 / L1_mask / L1_no_mask for one prediction, in [0,100]. Multi-channel
/// images broadcast the mask across channels.
SampleMetrics compute_metrics(const Image& pred, const Image& target,
                              const BinaryMask& mask);

}  // namespace stillscene::eval
