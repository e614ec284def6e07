#pragma once

#include <cmath>
#include <functional>

#include "stillscene/tensor.hpp"

namespace testutil {

using stillscene::nn::Tensor;

// loss = sum(y .* r) with a fixed random projection r makes every output
// element contribute to the scalar under test
template <typename T>
double weighted_sum(const Tensor<T>& y, const Tensor<T>& r) {
  double acc = 0.0;
  for (long i = 0; i < y.size(); ++i)
    acc += static_cast<double>(y.data[i]) * static_cast<double>(r.data[i]);
  return acc;
}

struct GradCheckStats {
  double max_rel = 0.0;
  long checked = 0;
  long worst_index = -1;
};

// central finite differences on every element of `values`, compared against
// `analytic`; loss() must recompute the scalar from current values
inline GradCheckStats check_grads(std::vector<double>& values,
                                  const std::vector<double>& analytic,
                                  const std::function<double()>& loss,
                                  double h = 1e-5) {
  GradCheckStats s;
  for (size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double lp = loss();
    values[i] = keep - h;
    const double lm = loss();
    values[i] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    const double ga = analytic[i];
    const double denom = std::max({std::abs(fd), std::abs(ga), 1e-6});
    const double rel = std::abs(fd - ga) / denom;
    if (rel > s.max_rel) {
      s.max_rel = rel;
      s.worst_index = static_cast<long>(i);
    }
    ++s.checked;
  }
  return s;
}

}  // namespace testutil
