#pragma once

#include <cmath>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "stillscene/image.hpp"
#include "stillscene/layers.hpp"

namespace stillscene::nn {

/// Sequential chain of layers with a shared forward/backward walk.
template <typename T>
class Block : public Layer<T> {
 public:
  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      g = (*it)->backward(g);
    return g;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->collect_params(out);
  }

  void set_train_all(bool t) {
    this->set_train(t);
    for (auto& l : layers_) l->set_train(t);
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  int image_channels = 1;  // 1 = gray, 3 = rgb
  int base_width = 64;
  int depth = 6;           // stride-2 levels; input size must divide 2^depth
  bool use_mask = true;    // false zero-fills the mask channel (ablation)

  int in_channels() const { return image_channels + 1; }
  long width_at(int level) const {
    long m = 1;
    for (int i = 0; i < level && m < 8; ++i) m *= 2;
    return base_width * std::min<long>(m, 8);
  }
};

/// Builds the [N, image_channels+1, H, W] generator input. The mask channel
/// is encoded in [-1,1] like the image; a disabled mask becomes all zeros.
template <typename T>
Tensor<T> make_translation_input(const Tensor<T>& img, const Tensor<T>& mask01,
                                 bool use_mask) {
  const long N = img.dim(0), H = img.dim(2), W = img.dim(3);
  Tensor<T> m({N, 1, H, W});
  if (use_mask) {
    if (mask01.size() != m.size())
      throw ShapeError("make_translation_input: mask shape mismatch");
    for (long i = 0; i < m.size(); ++i)
      m.data[i] = mask01.data[i] * T(2) - T(1);
  }
  return concat_channels(img, m);
}

/// pix2pix-style U-Net: stride-2 conv encoder, transposed-conv decoder,
/// skip connections at every level, tanh output head.
template <typename T>
class UNetGenerator {
 public:
  UNetGenerator(GeneratorConfig cfg, Rng& rng) : cfg_(cfg) {
    const int d = cfg.depth;
    if (d < 1) throw ConfigError("generator: depth must be >= 1");
    enc_.resize(d);
    dec_.resize(d);
    for (int i = 0; i < d; ++i) {
      auto& e = enc_[i];
      e = std::make_unique<Block<T>>();
      const long cin = i == 0 ? cfg.in_channels() : cfg.width_at(i - 1);
      const long cout = cfg.width_at(i);
      if (i > 0) e->template add<LeakyReLU<T>>(0.2);
      e->template add<Conv2d<T>>("g.enc" + std::to_string(i), cin, cout,
                                 ConvSpec{}, rng);
      if (i > 0 && i < d - 1)
        e->template add<InstanceNorm2d<T>>("g.enc" + std::to_string(i) + ".norm", cout);
    }
    for (int i = d - 1; i >= 0; --i) {
      auto& u = dec_[i];
      u = std::make_unique<Block<T>>();
      const long cin = (i == d - 1) ? cfg.width_at(i) : 2 * cfg.width_at(i);
      const long cout = i == 0 ? cfg.image_channels : cfg.width_at(i - 1);
      u->template add<ReLU<T>>();
      u->template add<ConvTranspose2d<T>>("g.dec" + std::to_string(i), cin, cout,
                                          ConvSpec{}, rng);
      if (i > 0)
        u->template add<InstanceNorm2d<T>>("g.dec" + std::to_string(i) + ".norm", cout);
      else
        u->template add<Tanh<T>>();
    }
  }

  /// x: [N, image_channels+1, H, W] in [-1,1]; H and W must divide 2^depth.
  Tensor<T> forward(const Tensor<T>& x) {
    const long H = x.dim(2), W = x.dim(3);
    const long div = 1L << cfg_.depth;
    if (H % div != 0 || W % div != 0)
      throw ShapeError("generator: input " + std::to_string(H) + "x" +
                       std::to_string(W) + " must be divisible by 2^depth = " +
                       std::to_string(div));
    const int d = cfg_.depth;
    e_out_.assign(d, Tensor<T>());
    Tensor<T> h = x;
    for (int i = 0; i < d; ++i) {
      h = enc_[i]->forward(h);
      e_out_[i] = h;
    }
    Tensor<T> u = dec_[d - 1]->forward(e_out_[d - 1]);
    for (int i = d - 2; i >= 0; --i)
      u = dec_[i]->forward(concat_channels(u, e_out_[i]));
    return u;
  }

  /// Returns gradient w.r.t. the full input (image + mask channels).
  Tensor<T> backward(const Tensor<T>& dy) {
    const int d = cfg_.depth;
    std::vector<Tensor<T>> skip_grad(d);
    Tensor<T> du = dy;
    for (int i = 0; i <= d - 2; ++i) {
      Tensor<T> dcat = dec_[i]->backward(du);
      Tensor<T> next_du, dskip;
      split_channels(dcat, dcat.dim(1) - e_out_[i].dim(1), next_du, dskip);
      skip_grad[i] = std::move(dskip);
      du = std::move(next_du);
    }
    Tensor<T> g = dec_[d - 1]->backward(du);
    for (int i = d - 1; i >= 1; --i) {
      Tensor<T> below = enc_[i]->backward(g);
      below += skip_grad[i - 1];
      g = std::move(below);
    }
    return enc_[0]->backward(g);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& e : enc_) e->collect_params(out);
    for (auto& u : dec_) u->collect_params(out);
    return out;
  }

  void set_train(bool t) {
    for (auto& e : enc_) e->set_train_all(t);
    for (auto& u : dec_) u->set_train_all(t);
  }

  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  std::vector<std::unique_ptr<Block<T>>> enc_, dec_;
  std::vector<Tensor<T>> e_out_;
};

// ---------------------------------------------------------------------------
// Discriminator
// ---------------------------------------------------------------------------

/// Maps each patch-grid cell back to the input-pixel rectangle it scores.
struct PatchGeometry {
  long grid_h = 0, grid_w = 0;
  long img_h = 0, img_w = 0;
  double center0 = 0.0;  // input coordinate of cell (0,0)'s center
  double jump = 1.0;     // input-pixel stride between adjacent cells
  int receptive_field = 1;

  struct Rect {
    int y0, x0, y1, x1;  // half-open [y0,y1) x [x0,x1), clipped to the image
  };

  Rect rect(long i, long j) const {
    const double half = (receptive_field - 1) / 2.0;  // in pixel centers
    const double cy = center0 + i * jump;
    const double cx = center0 + j * jump;
    Rect r;
    r.y0 = std::max(0, static_cast<int>(std::ceil(cy - half - 1e-9)));
    r.x0 = std::max(0, static_cast<int>(std::ceil(cx - half - 1e-9)));
    r.y1 = static_cast<int>(std::min<long>(img_h, static_cast<long>(std::floor(cy + half + 1e-9)) + 1));
    r.x1 = static_cast<int>(std::min<long>(img_w, static_cast<long>(std::floor(cx + half + 1e-9)) + 1));
    return r;
  }
};

template <typename T>
struct PatchResponse {
  Tensor<T> scores;  // [N,1,h,w], entries in (0,1)
  PatchGeometry geometry;
};

struct DiscriminatorConfig {
  int image_channels = 1;
  int base_width = 64;
  int n_down = 3;        // stride-2 blocks; 3 gives the 70x70 receptive field
  bool use_mask = true;  // false zero-fills the mask channel (ablation)

  int in_channels() const { return 2 * image_channels + 1; }  // x + m + y
};

/// Patch classifier over concat(condition image, mask, candidate image).
template <typename T>
class PatchDiscriminator {
 public:
  PatchDiscriminator(DiscriminatorConfig cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.n_down < 1) throw ConfigError("discriminator: n_down must be >= 1");
    long cin = cfg.in_channels();
    long w = cfg.base_width;
    for (int i = 0; i < cfg.n_down; ++i) {
      const long cout = w * std::min(1L << i, 8L);
      net_.template add<Conv2d<T>>("d.conv" + std::to_string(i), cin, cout,
                                   ConvSpec{4, 4, 2, 2, 1, 1}, rng);
      specs_.push_back(ConvSpec{4, 4, 2, 2, 1, 1});
      if (i > 0)
        net_.template add<InstanceNorm2d<T>>("d.conv" + std::to_string(i) + ".norm", cout);
      net_.template add<LeakyReLU<T>>(0.2);
      cin = cout;
    }
    const long cpen = cfg.base_width * std::min(1L << cfg.n_down, 8L);
    net_.template add<Conv2d<T>>("d.conv" + std::to_string(cfg.n_down), cin, cpen,
                                 ConvSpec{4, 4, 1, 1, 1, 1}, rng);
    specs_.push_back(ConvSpec{4, 4, 1, 1, 1, 1});
    net_.template add<InstanceNorm2d<T>>("d.conv" + std::to_string(cfg.n_down) + ".norm", cpen);
    net_.template add<LeakyReLU<T>>(0.2);
    net_.template add<Conv2d<T>>("d.score", cpen, 1, ConvSpec{4, 4, 1, 1, 1, 1}, rng);
    specs_.push_back(ConvSpec{4, 4, 1, 1, 1, 1});
    net_.template add<Sigmoid<T>>();
  }

  /// x: [N, 2*image_channels+1, H, W] (condition, mask, candidate).
  PatchResponse<T> forward(const Tensor<T>& x) {
    PatchResponse<T> r;
    r.scores = net_.forward(x);
    r.geometry = geometry(x.dim(2), x.dim(3));
    return r;
  }

  Tensor<T> backward(const Tensor<T>& dscores) { return net_.backward(dscores); }

  PatchGeometry geometry(long img_h, long img_w) const {
    PatchGeometry g;
    g.img_h = img_h;
    g.img_w = img_w;
    double r = 1.0, jump = 1.0, center = 0.0;
    long h = img_h, w = img_w;
    for (const auto& sp : specs_) {
      center += ((sp.kh - 1) / 2.0 - sp.ph) * jump;
      r += (sp.kh - 1) * jump;
      jump *= sp.sh;
      h = conv_out(h, sp.kh, sp.sh, sp.ph);
      w = conv_out(w, sp.kw, sp.sw, sp.pw);
      if (h <= 0 || w <= 0)
        throw ShapeError("discriminator: input too small for patch stack");
    }
    g.grid_h = h;
    g.grid_w = w;
    g.center0 = center;  // recursion tracks the center of cell (0,0)'s field
    g.jump = jump;
    g.receptive_field = static_cast<int>(r);
    return g;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    net_.collect_params(out);
    return out;
  }

  void set_train(bool t) { net_.set_train_all(t); }
  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  Block<T> net_;
  std::vector<ConvSpec> specs_;
};

/// Assembles the [N, 2*image_channels+1, H, W] discriminator input.
template <typename T>
Tensor<T> make_discriminator_input(const Tensor<T>& cond, const Tensor<T>& mask01,
                                   const Tensor<T>& candidate, bool use_mask) {
  Tensor<T> xm = make_translation_input(cond, mask01, use_mask);
  return concat_channels(xm, candidate);
}

// ---------------------------------------------------------------------------
// Segmentation network
// ---------------------------------------------------------------------------

struct SegConfig {
  int num_classes = 6;
  int base_width = 16;
};

/// Residual block with factorized 3x1 / 1x3 convolutions.
template <typename T>
class FactorizedResBlock : public Layer<T> {
 public:
  FactorizedResBlock(std::string name, long ch, Rng& rng)
      : conv_a_(name + ".a", ch, ch, ConvSpec{3, 1, 1, 1, 1, 0}, rng),
        conv_b_(name + ".b", ch, ch, ConvSpec{1, 3, 1, 1, 0, 1}, rng),
        norm_(name + ".norm", ch) {}

  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> t = conv_a_.forward(x);
    t = relu_a_.forward(t);
    t = conv_b_.forward(t);
    t = norm_.forward(t);
    Tensor<T> s = x;
    s += t;
    return relu_out_.forward(s);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> d = relu_out_.backward(dy);
    Tensor<T> dt = norm_.backward(d);
    dt = conv_b_.backward(dt);
    dt = relu_a_.backward(dt);
    dt = conv_a_.backward(dt);
    dt += d;
    return dt;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    conv_a_.collect_params(out);
    conv_b_.collect_params(out);
    norm_.collect_params(out);
  }

 private:
  Conv2d<T> conv_a_, conv_b_;
  ReLU<T> relu_a_, relu_out_;
  InstanceNorm2d<T> norm_;
};

/// Compact encoder-decoder producing per-pixel class logits from the RGB
/// dynamic image. Two stride-2 stages down, two transposed-conv stages up.
template <typename T>
class SegNet {
 public:
  SegNet(SegConfig cfg, Rng& rng) : cfg_(cfg) {
    const long w = cfg.base_width;
    net_.template add<Conv2d<T>>("ss.down0", 3, w, ConvSpec{3, 3, 2, 2, 1, 1}, rng);
    net_.template add<InstanceNorm2d<T>>("ss.down0.norm", w);
    net_.template add<ReLU<T>>();
    net_.template add<FactorizedResBlock<T>>("ss.res0", w, rng);
    net_.template add<FactorizedResBlock<T>>("ss.res1", w, rng);
    net_.template add<Conv2d<T>>("ss.down1", w, 2 * w, ConvSpec{3, 3, 2, 2, 1, 1}, rng);
    net_.template add<InstanceNorm2d<T>>("ss.down1.norm", 2 * w);
    net_.template add<ReLU<T>>();
    net_.template add<FactorizedResBlock<T>>("ss.res2", 2 * w, rng);
    net_.template add<FactorizedResBlock<T>>("ss.res3", 2 * w, rng);
    net_.template add<ConvTranspose2d<T>>("ss.up0", 2 * w, w, ConvSpec{}, rng);
    net_.template add<InstanceNorm2d<T>>("ss.up0.norm", w);
    net_.template add<ReLU<T>>();
    net_.template add<FactorizedResBlock<T>>("ss.res4", w, rng);
    net_.template add<ConvTranspose2d<T>>("ss.up1", w, w, ConvSpec{}, rng);
    net_.template add<InstanceNorm2d<T>>("ss.up1.norm", w);
    net_.template add<ReLU<T>>();
    net_.template add<Conv2d<T>>("ss.head", w, cfg.num_classes,
                                 ConvSpec{1, 1, 1, 1, 0, 0}, rng);
  }

  /// rgb: [N,3,H,W] in [-1,1]; H and W must divide 4. Returns raw logits.
  Tensor<T> forward(const Tensor<T>& rgb) {
    if (rgb.dim(1) != 3) throw ShapeError("segnet: expected 3-channel input");
    if (rgb.dim(2) % 4 != 0 || rgb.dim(3) % 4 != 0)
      throw ShapeError("segnet: input size must be divisible by 4");
    return net_.forward(rgb);
  }

  Tensor<T> backward(const Tensor<T>& dlogits) { return net_.backward(dlogits); }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    net_.collect_params(out);
    return out;
  }

  void set_train(bool t) { net_.set_train_all(t); }
  const SegConfig& config() const { return cfg_; }

 private:
  SegConfig cfg_;
  Block<T> net_;
};

// ---------------------------------------------------------------------------
// Dynamic-class extraction head
// ---------------------------------------------------------------------------

/// Fixed 1x1 convolution over softmax class probabilities followed by tanh.
/// Dynamic channels carry weight (n - n_dyn)/n, static channels -n_dyn/n;
/// the weights sum to zero and are never updated by any optimizer.
template <typename T>
class DynamicHead {
 public:
  DynamicHead(int num_classes, std::set<int> dynamic_classes, double threshold = 0.0)
      : n_(num_classes), dynamic_(std::move(dynamic_classes)), tau_(threshold) {
    const int n_dyn = static_cast<int>(dynamic_.size());
    if (n_dyn == 0 || n_dyn >= n_)
      throw ConfigError("dynamic head: dynamic classes must be a nonempty strict subset");
    weights_.resize(n_);
    for (int c = 0; c < n_; ++c)
      weights_[c] = dynamic_.count(c) ? dyn_weight(n_, n_dyn) : stat_weight(n_, n_dyn);
  }

  static double dyn_weight(int n, int n_dyn) {
    return static_cast<double>(n - n_dyn) / n;
  }
  static double stat_weight(int n, int n_dyn) {
    return -static_cast<double>(n_dyn) / n;
  }

  /// logits: [N,n,H,W] -> soft mask [N,1,H,W] with values in (-1,1).
  Tensor<T> forward(const Tensor<T>& logits) {
    if (logits.dim(1) != n_)
      throw ShapeError("dynamic head: expected " + std::to_string(n_) + " channels");
    const long N = logits.dim(0), H = logits.dim(2), W = logits.dim(3);
    const long HW = H * W;
    p_ = Tensor<T>(logits.shape);
    soft_ = Tensor<T>({N, 1, H, W});
    for (long nb = 0; nb < N; ++nb) {
      const T* in = logits.ptr() + nb * n_ * HW;
      T* pp = p_.ptr() + nb * n_ * HW;
      T* sp = soft_.ptr() + nb * HW;
      for (long i = 0; i < HW; ++i) {
        T mx = in[i];
        for (int c = 1; c < n_; ++c) mx = std::max(mx, in[c * HW + i]);
        T denom = T(0);
        for (int c = 0; c < n_; ++c) {
          const T e = std::exp(in[c * HW + i] - mx);
          pp[c * HW + i] = e;
          denom += e;
        }
        T pre = T(0);
        for (int c = 0; c < n_; ++c) {
          pp[c * HW + i] /= denom;
          pre += static_cast<T>(weights_[c]) * pp[c * HW + i];
        }
        sp[i] = std::tanh(pre);
      }
    }
    return soft_;
  }

  /// dsoft: [N,1,H,W] -> dlogits [N,n,H,W].
  Tensor<T> backward(const Tensor<T>& dsoft) {
    const long N = dsoft.dim(0), H = dsoft.dim(2), W = dsoft.dim(3);
    const long HW = H * W;
    Tensor<T> dlogits({N, static_cast<long>(n_), H, W});
    for (long nb = 0; nb < N; ++nb) {
      const T* pp = p_.ptr() + nb * n_ * HW;
      const T* sp = soft_.ptr() + nb * HW;
      const T* dsp = dsoft.ptr() + nb * HW;
      T* dl = dlogits.ptr() + nb * n_ * HW;
      for (long i = 0; i < HW; ++i) {
        const T dpre = dsp[i] * (T(1) - sp[i] * sp[i]);
        T dot = T(0);
        for (int c = 0; c < n_; ++c)
          dot += static_cast<T>(weights_[c]) * pp[c * HW + i];
        for (int c = 0; c < n_; ++c) {
          const T dp_c = static_cast<T>(weights_[c]) * dpre;
          dl[c * HW + i] = pp[c * HW + i] * (dp_c - dpre * dot);
        }
      }
    }
    return dlogits;
  }

  /// Hard mask via the decision threshold tau.
  BinaryMask hard_mask(const Tensor<T>& soft, long sample) const {
    const long H = soft.dim(2), W = soft.dim(3);
    BinaryMask m(static_cast<int>(H), static_cast<int>(W));
    const T* sp = soft.ptr() + sample * H * W;
    for (long i = 0; i < H * W; ++i)
      m.data[i] = sp[i] > static_cast<T>(tau_) ? 1 : 0;
    return m;
  }

  const std::vector<double>& weights() const { return weights_; }
  int num_classes() const { return n_; }
  const std::set<int>& dynamic_classes() const { return dynamic_; }
  double threshold() const { return tau_; }

 private:
  int n_;
  std::set<int> dynamic_;
  double tau_;
  std::vector<double> weights_;
  Tensor<T> p_, soft_;
};

}  // namespace stillscene::nn
