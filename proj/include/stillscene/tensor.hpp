#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "stillscene/common.hpp"

namespace stillscene::nn {

/// Dense row-major tensor; layout for feature maps is [N, C, H, W].
template <typename T>
struct Tensor {
  std::vector<long> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<long> s, T fill = T(0)) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), fill);
  }

  static long count(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) n *= d;
    return n;
  }

  long size() const { return static_cast<long>(data.size()); }
  long dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  // [N,C,H,W] accessor for tests and glue code
  T& at(long n, long c, long h, long w) {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  T at(long n, long c, long h, long w) const {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  void fill_normal(Rng& rng, double mu, double sigma) {
    for (T& v : data) v = static_cast<T>(rng.normal(mu, sigma));
  }

  Tensor& operator+=(const Tensor& o) {
    for (long i = 0; i < size(); ++i) data[i] += o.data[i];
    return *this;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

/// Named trainable parameter with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  void init(std::string n, std::vector<long> shape) {
    name = std::move(n);
    value = Tensor<T>(shape);
    grad = Tensor<T>(shape);
  }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace stillscene::nn
