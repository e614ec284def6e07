#pragma once

#include <string>

#include "stillscene/image.hpp"

namespace stillscene::io {

/// 8-bit PNG round trip. Images quantize with round-to-nearest; masks are
/// stored as {0,255}; label maps as raw class indices.
void write_image_png(const std::string& path, const Image& img);
void write_mask_png(const std::string& path, const BinaryMask& mask);
void write_labels_png(const std::string& path, const LabelMap& labels);

Image read_image_png(const std::string& path);           // 1 or 3 channels
BinaryMask read_mask_png(const std::string& path);       // >127 -> 1
LabelMap read_labels_png(const std::string& path, int num_classes,
                         const std::set<int>& dynamic_classes);

/// Quantizes an image exactly the way write_image_png does; used when a
/// freshly rendered pair must be compared with its on-disk form.
Image quantize_u8(const Image& img);

}  // namespace stillscene::io
