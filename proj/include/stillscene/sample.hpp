#pragma once

#include <string>

#include "stillscene/image.hpp"

namespace stillscene {

/// Co-registered training sample: the scene with dynamic objects, the same
/// scene without them, per-pixel labels of the dynamic view, and the binary
/// dynamic mask. Cast shadows differ between the two images but are not
/// part of the mask. `real_data` marks unpaired samples where no static
/// ground truth exists (static_rgb is then a copy of dynamic_rgb).
struct SamplePair {
  Image dynamic_rgb;
  Image static_rgb;
  LabelMap labels;
  BinaryMask mask;
  std::string id;
  bool real_data = false;
};

}  // namespace stillscene
