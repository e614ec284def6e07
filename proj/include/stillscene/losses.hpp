#pragma once

#include <optional>
#include <vector>

#include "stillscene/image.hpp"
#include "stillscene/nets.hpp"
#include "stillscene/tensor.hpp"

namespace stillscene::losses {

using nn::PatchGeometry;
using nn::Tensor;

/// Mixing weights of the combined objectives. gamma is the mask-emphasis
/// factor of the weighted patch loss; class_weights are the per-class
/// cross-entropy weights.
struct LossWeights {
  double lambda1 = 100.0;  // L1 mixing weight in the generator objective
  double lambda2 = 1.0;    // cross-entropy mixing weight in the seg objective
  double gamma = 2.0;      // patch-loss emphasis on masked areas
  double eps = 1e-7;       // probability clamp at both boundaries
  std::vector<double> class_weights;

  void validate(int num_classes) const {
    if (lambda1 < 0.0 || lambda2 < 0.0)
      throw ConfigError("loss: lambda weights must be >= 0");
    if (gamma < 1.0) throw ConfigError("loss: gamma must be >= 1");
    if (!class_weights.empty()) {
      if (static_cast<int>(class_weights.size()) != num_classes)
        throw ConfigError("loss: class_weights size != class count");
      for (double w : class_weights)
        if (w <= 0.0) throw ConfigError("loss: class weights must be positive");
    }
  }
};

/// Per-patch emphasis weights 1 + mean_coverage * (gamma - 1), one cell per
/// discriminator score. Coverage is the fractional mask mean over the cell's
/// receptive-field rectangle, so entries always lie in [1, gamma].
template <typename T>
Tensor<T> patch_weight_map(const BinaryMask& mask, const PatchGeometry& geom,
                           double gamma) {
  if (mask.height != geom.img_h || mask.width != geom.img_w)
    throw ShapeError("patch_weight_map: mask " + std::to_string(mask.height) +
                     "x" + std::to_string(mask.width) +
                     " does not match patch geometry image " +
                     std::to_string(geom.img_h) + "x" + std::to_string(geom.img_w));
  if (gamma < 1.0) throw ConfigError("patch_weight_map: gamma must be >= 1");
  // summed-area table for O(1) rectangle means
  const int H = mask.height, W = mask.width;
  std::vector<double> sat(static_cast<size_t>(H + 1) * (W + 1), 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      sat[(y + 1) * (W + 1) + (x + 1)] = mask.at(y, x) +
                                         sat[y * (W + 1) + (x + 1)] +
                                         sat[(y + 1) * (W + 1) + x] -
                                         sat[y * (W + 1) + x];
  Tensor<T> wmap({geom.grid_h, geom.grid_w});
  for (long i = 0; i < geom.grid_h; ++i)
    for (long j = 0; j < geom.grid_w; ++j) {
      const auto r = geom.rect(i, j);
      const double area = static_cast<double>(r.y1 - r.y0) * (r.x1 - r.x0);
      const double s = sat[static_cast<size_t>(r.y1) * (W + 1) + r.x1] -
                       sat[static_cast<size_t>(r.y0) * (W + 1) + r.x1] -
                       sat[static_cast<size_t>(r.y1) * (W + 1) + r.x0] +
                       sat[static_cast<size_t>(r.y0) * (W + 1) + r.x0];
      const double coverage = area > 0.0 ? s / area : 0.0;
      wmap.data[i * geom.grid_w + j] = static_cast<T>(1.0 + coverage * (gamma - 1.0));
    }
  return wmap;
}

/// Values and analytic gradients of the adversarial objective on one batch
/// of patch score grids. Gradients are w.r.t. the raw (unclamped) scores.
template <typename T>
struct AdversarialResult {
  double loss_d = 0.0;      // -mean[w log s_r] - mean[w log(1 - s_f)]
  double loss_g_adv = 0.0;  // -mean[w log s_f]  (non-saturating form)
  Tensor<T> d_real;         // d loss_d / d s_r
  Tensor<T> d_fake;         // d loss_d / d s_f
  Tensor<T> g_fake;         // d loss_g_adv / d s_f
};

/// Weighted per-patch binary cross-entropy, averaged over every patch of
/// every sample. An empty weight tensor means uniform weights (the plain
/// conditional-GAN objective); with weights identically 1 the two agree
/// bit for bit.
template <typename T>
AdversarialResult<T> weighted_adversarial_loss(const Tensor<T>& real,
                                               const Tensor<T>& fake,
                                               const Tensor<T>& weights,
                                               double eps = 1e-7) {
  if (!real.same_shape(fake))
    throw ShapeError("adversarial loss: score grids differ " + real.shape_str() +
                     " vs " + fake.shape_str());
  const bool weighted = weights.size() != 0;
  if (weighted && weights.size() != real.size())
    throw ShapeError("adversarial loss: weight map size mismatch");
  AdversarialResult<T> out;
  out.d_real = Tensor<T>(real.shape);
  out.d_fake = Tensor<T>(real.shape);
  out.g_fake = Tensor<T>(real.shape);
  const long P = real.size();
  const double inv_p = 1.0 / static_cast<double>(P);
  double acc_d = 0.0, acc_g = 0.0;
  for (long i = 0; i < P; ++i) {
    const double w = weighted ? static_cast<double>(weights.data[i]) : 1.0;
    const double sr =
        std::clamp(static_cast<double>(real.data[i]), eps, 1.0 - eps);
    const double sf =
        std::clamp(static_cast<double>(fake.data[i]), eps, 1.0 - eps);
    acc_d += w * (-std::log(sr) - std::log(1.0 - sf));
    acc_g += w * (-std::log(sf));
    out.d_real.data[i] = static_cast<T>(-w / sr * inv_p);
    out.d_fake.data[i] = static_cast<T>(w / (1.0 - sf) * inv_p);
    out.g_fake.data[i] = static_cast<T>(-w / sf * inv_p);
  }
  out.loss_d = acc_d * inv_p;
  out.loss_g_adv = acc_g * inv_p;
  return out;
}

/// Unweighted conditional-GAN objective.
template <typename T>
AdversarialResult<T> cgan_loss(const Tensor<T>& real, const Tensor<T>& fake,
                               double eps = 1e-7) {
  return weighted_adversarial_loss<T>(real, fake, Tensor<T>(), eps);
}

struct L1Result {
  double value = 0.0;
  bool empty_region = false;
  long count = 0;
};

/// Mean absolute difference, optionally restricted to region > 0.5. The
/// region grid is [N,1,H,W] and broadcasts across channels.
template <typename T>
L1Result l1_loss(const Tensor<T>& a, const Tensor<T>& b,
                 const Tensor<T>* region = nullptr) {
  if (!a.same_shape(b))
    throw ShapeError("l1_loss: shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  L1Result r;
  double acc = 0.0;
  if (!region) {
    for (long i = 0; i < a.size(); ++i)
      acc += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
    r.count = a.size();
  } else {
    const long N = a.dim(0), C = a.dim(1), HW = a.dim(2) * a.dim(3);
    if (region->size() != N * HW)
      throw ShapeError("l1_loss: region size mismatch");
    for (long n = 0; n < N; ++n)
      for (long c = 0; c < C; ++c)
        for (long i = 0; i < HW; ++i)
          if (region->data[n * HW + i] > T(0.5)) {
            const long idx = (n * C + c) * HW + i;
            acc += std::abs(static_cast<double>(a.data[idx]) -
                            static_cast<double>(b.data[idx]));
            ++r.count;
          }
  }
  if (r.count == 0) {
    r.empty_region = true;
    r.value = 0.0;
  } else {
    r.value = acc / static_cast<double>(r.count);
  }
  return r;
}

/// d l1 / d a, scaled by `scale` (sign subgradient; zero at exact ties).
template <typename T>
Tensor<T> l1_backward(const Tensor<T>& a, const Tensor<T>& b, double scale) {
  Tensor<T> g(a.shape);
  const double inv = scale / static_cast<double>(a.size());
  for (long i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    g.data[i] = static_cast<T>(d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0));
  }
  return g;
}

template <typename T>
struct CEResult {
  double value = 0.0;
  Tensor<T> dlogits;
};

/// Class-weighted cross entropy over per-pixel logits, averaged over all
/// pixels: mean of w[class] * (log sum_j exp(logits_j) - logits_class).
template <typename T>
CEResult<T> segmentation_loss(const Tensor<T>& logits,
                              const std::vector<uint8_t>& labels,
                              const std::vector<double>& class_w) {
  const long N = logits.dim(0), C = logits.dim(1), HW = logits.dim(2) * logits.dim(3);
  if (static_cast<long>(labels.size()) != N * HW)
    throw ShapeError("segmentation_loss: label grid size mismatch");
  std::vector<double> w(class_w);
  if (w.empty()) w.assign(C, 1.0);
  if (static_cast<long>(w.size()) != C)
    throw ConfigError("segmentation_loss: class weight count != channels");
  CEResult<T> out;
  out.dlogits = Tensor<T>(logits.shape);
  const double inv_pix = 1.0 / static_cast<double>(N * HW);
  double acc = 0.0;
  for (long n = 0; n < N; ++n) {
    const T* lp = logits.ptr() + n * C * HW;
    T* dp = out.dlogits.ptr() + n * C * HW;
    for (long i = 0; i < HW; ++i) {
      const int cls = labels[n * HW + i];
      if (cls >= C) throw DataError("segmentation_loss: label index out of range");
      double mx = lp[i];
      for (long c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(lp[c * HW + i]));
      double denom = 0.0;
      for (long c = 0; c < C; ++c) denom += std::exp(static_cast<double>(lp[c * HW + i]) - mx);
      const double lse = mx + std::log(denom);
      acc += w[cls] * (lse - static_cast<double>(lp[cls * HW + i]));
      const double scale = w[cls] * inv_pix;
      for (long c = 0; c < C; ++c) {
        const double p = std::exp(static_cast<double>(lp[c * HW + i]) - lse);
        dp[c * HW + i] = static_cast<T>(scale * (p - (c == cls ? 1.0 : 0.0)));
      }
    }
  }
  out.value = acc * inv_pix;
  return out;
}

/// Inverse log-frequency class weights: w = 1 / ln(c + freq).
inline std::vector<double> class_weights_from_freq(const std::vector<double>& freq,
                                                   double c = 1.02) {
  std::vector<double> w(freq.size());
  for (size_t i = 0; i < freq.size(); ++i) w[i] = 1.0 / std::log(c + freq[i]);
  return w;
}

struct GeneratorObjective {
  double total = 0.0;
  double adv = 0.0;
  double l1 = 0.0;
};

inline GeneratorObjective generator_objective(double loss_g_adv, double l1_value,
                                              double lambda1) {
  GeneratorObjective o;
  o.adv = loss_g_adv;
  o.l1 = l1_value;
  o.total = loss_g_adv + lambda1 * l1_value;
  return o;
}

struct SegmentationObjective {
  double total = 0.0;
  double adv = 0.0;
  double ce = 0.0;
};

inline SegmentationObjective segmentation_objective(double loss_adv, double ce_value,
                                                    double lambda2) {
  SegmentationObjective o;
  o.adv = loss_adv;
  o.ce = ce_value;
  o.total = loss_adv + lambda2 * ce_value;
  return o;
}

}  // namespace stillscene::losses
