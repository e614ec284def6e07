#include "stillscene/image.hpp"

namespace stillscene {

void LabelMap::validate() const {
  if (num_classes < 2) throw DataError("LabelMap: need at least 2 classes");
  if (dynamic_classes.empty())
    throw DataError("LabelMap: dynamic class set is empty");
  if (static_cast<int>(dynamic_classes.size()) >= num_classes)
    throw DataError("LabelMap: dynamic classes must be a strict subset");
  for (int c : dynamic_classes)
    if (c < 0 || c >= num_classes)
      throw DataError("LabelMap: dynamic class index out of range");
  for (uint8_t v : data)
    if (v >= num_classes)
      throw DataError("LabelMap: pixel class index " + std::to_string(v) +
                      " >= " + std::to_string(num_classes));
}

void check_range(const Image& img, ValueRange range, const std::string& what) {
  const float lo = range == ValueRange::Unit ? 0.0f : -1.0f;
  const float hi = 1.0f;
  for (float v : img.data) {
    if (!(v >= lo && v <= hi))
      throw DataError(what + ": value " + std::to_string(v) +
                      " outside [" + std::to_string(lo) + ",1]");
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  check_range(img, ValueRange::Unit, "to_grayscale");
  Image out(img.height, img.width, 1);
  const size_t n = static_cast<size_t>(img.height) * img.width;
  for (size_t i = 0; i < n; ++i) {
    const float* p = &img.data[i * 3];
    float v = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
    out.data[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  return out;
}

Image normalize(const Image& img) {
  check_range(img, ValueRange::Unit, "normalize");
  Image out = img;
  for (float& v : out.data) v = v * 2.0f - 1.0f;
  return out;
}

Image denormalize(const Image& img) {
  check_range(img, ValueRange::Signed, "denormalize");
  Image out = img;
  for (float& v : out.data) v = (v + 1.0f) * 0.5f;
  return out;
}

BinaryMask mask_from_labels(const LabelMap& labels) {
  labels.validate();
  BinaryMask mask(labels.height, labels.width);
  for (size_t i = 0; i < labels.data.size(); ++i)
    mask.data[i] = labels.dynamic_classes.count(labels.data[i]) ? 1 : 0;
  return mask;
}

}  // namespace stillscene
