#include "stillscene/pngio.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>

namespace stillscene::io {

namespace {

uint8_t to_u8(float v) {
  const long q = std::lround(static_cast<double>(v) * 255.0);
  return static_cast<uint8_t>(std::clamp(q, 0L, 255L));
}

void write_or_throw(const std::string& path, const cv::Mat& m) {
  if (!cv::imwrite(path, m))
    throw DataError("failed to write " + path);
}

cv::Mat read_or_throw(const std::string& path, int flags) {
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw DataError("failed to read " + path);
  return m;
}

}  // namespace

Image quantize_u8(const Image& img) {
  Image out = img;
  for (float& v : out.data) v = to_u8(v) / 255.0f;
  return out;
}

void write_image_png(const std::string& path, const Image& img) {
  if (img.channels == 1) {
    cv::Mat m(img.height, img.width, CV_8UC1);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        m.at<uint8_t>(y, x) = to_u8(img.at(y, x));
    write_or_throw(path, m);
  } else {
    cv::Mat m(img.height, img.width, CV_8UC3);  // OpenCV stores BGR
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        m.at<cv::Vec3b>(y, x) = {to_u8(img.at(y, x, 2)), to_u8(img.at(y, x, 1)),
                                 to_u8(img.at(y, x, 0))};
    write_or_throw(path, m);
  }
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
  cv::Mat m(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      m.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  write_or_throw(path, m);
}

void write_labels_png(const std::string& path, const LabelMap& labels) {
  cv::Mat m(labels.height, labels.width, CV_8UC1);
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x) m.at<uint8_t>(y, x) = labels.at(y, x);
  write_or_throw(path, m);
}

Image read_image_png(const std::string& path) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
  if (m.depth() != CV_8U) throw DataError(path + ": expected 8-bit PNG");
  if (m.channels() == 1) {
    Image img(m.rows, m.cols, 1);
    for (int y = 0; y < m.rows; ++y)
      for (int x = 0; x < m.cols; ++x)
        img.at(y, x) = m.at<uint8_t>(y, x) / 255.0f;
    return img;
  }
  if (m.channels() != 3 && m.channels() != 4)
    throw DataError(path + ": unsupported channel count");
  Image img(m.rows, m.cols, 3);
  const int nc = m.channels();
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const uint8_t* px = m.ptr<uint8_t>(y) + x * nc;
      img.at(y, x, 0) = px[2] / 255.0f;
      img.at(y, x, 1) = px[1] / 255.0f;
      img.at(y, x, 2) = px[0] / 255.0f;
    }
  return img;
}

BinaryMask read_mask_png(const std::string& path) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
  BinaryMask mask(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) mask.at(y, x) = m.at<uint8_t>(y, x) > 127 ? 1 : 0;
  return mask;
}

LabelMap read_labels_png(const std::string& path, int num_classes,
                         const std::set<int>& dynamic_classes) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
  LabelMap labels(m.rows, m.cols, num_classes, dynamic_classes);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) labels.at(y, x) = m.at<uint8_t>(y, x);
  labels.validate();
  return labels;
}

}  // namespace stillscene::io
