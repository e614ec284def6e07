#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "stillscene/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stillscene::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

/// Base for all differentiable layers. forward() caches whatever backward()
/// needs; backward() consumes the cache and accumulates parameter gradients.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect_params(std::vector<Param<T>*>& out) { (void)out; }
  void set_train(bool t) { train_mode_ = t; }

 protected:
  bool train_mode_ = true;
};

struct ConvSpec {
  int kh = 4, kw = 4;
  int sh = 2, sw = 2;
  int ph = 1, pw = 1;
};

inline long conv_out(long in, int k, int s, int p) {
  return (in + 2L * p - k) / s + 1;
}

/// im2col for one sample: x[C,H,W] -> cols[C*kh*kw, Ho*Wo].
template <typename T>
void im2col(const T* x, long C, long H, long W, const ConvSpec& sp, long Ho,
            long Wo, T* cols) {
  const long P = Ho * Wo;
  for (long c = 0; c < C; ++c) {
    for (int i = 0; i < sp.kh; ++i) {
      for (int j = 0; j < sp.kw; ++j) {
        T* row = cols + ((c * sp.kh + i) * sp.kw + j) * P;
        for (long oh = 0; oh < Ho; ++oh) {
          const long ih = oh * sp.sh - sp.ph + i;
          if (ih < 0 || ih >= H) {
            std::fill(row + oh * Wo, row + (oh + 1) * Wo, T(0));
            continue;
          }
          const T* src = x + (c * H + ih) * W;
          for (long ow = 0; ow < Wo; ++ow) {
            const long iw = ow * sp.sw - sp.pw + j;
            row[oh * Wo + ow] = (iw >= 0 && iw < W) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds cols back into x[C,H,W].
template <typename T>
void col2im(const T* cols, long C, long H, long W, const ConvSpec& sp, long Ho,
            long Wo, T* x) {
  const long P = Ho * Wo;
  for (long c = 0; c < C; ++c) {
    for (int i = 0; i < sp.kh; ++i) {
      for (int j = 0; j < sp.kw; ++j) {
        const T* row = cols + ((c * sp.kh + i) * sp.kw + j) * P;
        for (long oh = 0; oh < Ho; ++oh) {
          const long ih = oh * sp.sh - sp.ph + i;
          if (ih < 0 || ih >= H) continue;
          T* dst = x + (c * H + ih) * W;
          for (long ow = 0; ow < Wo; ++ow) {
            const long iw = ow * sp.sw - sp.pw + j;
            if (iw >= 0 && iw < W) dst[iw] += row[oh * Wo + ow];
          }
        }
      }
    }
  }
}

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::string name, long in_ch, long out_ch, ConvSpec spec, Rng& rng,
         double init_std = 0.02)
      : in_ch_(in_ch), out_ch_(out_ch), spec_(spec) {
    w_.init(name + ".w", {out_ch, in_ch, spec.kh, spec.kw});
    b_.init(name + ".b", {out_ch});
    w_.value.fill_normal(rng, 0.0, init_std);
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    const long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C != in_ch_)
      throw ShapeError(w_.name + ": expected " + std::to_string(in_ch_) +
                       " input channels, got " + std::to_string(C));
    Ho_ = conv_out(H, spec_.kh, spec_.sh, spec_.ph);
    Wo_ = conv_out(W, spec_.kw, spec_.sw, spec_.pw);
    if (Ho_ <= 0 || Wo_ <= 0)
      throw ShapeError(w_.name + ": input " + x.shape_str() + " too small");
    in_h_ = H;
    in_w_ = W;
    const long K = in_ch_ * spec_.kh * spec_.kw;
    const long P = Ho_ * Wo_;
    cols_ = Tensor<T>({N, K, P});
    Tensor<T> y({N, out_ch_, Ho_, Wo_});
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      T* cols_n = cols_.ptr() + n * K * P;
      im2col(x.ptr() + n * C * H * W, C, H, W, spec_, Ho_, Wo_, cols_n);
      CMapM<T> wm(w_.value.ptr(), out_ch_, K);
      CMapM<T> cm(cols_n, K, P);
      MapM<T> ym(y.ptr() + n * out_ch_ * P, out_ch_, P);
      ym.noalias() = wm * cm;
      for (long co = 0; co < out_ch_; ++co)
        ym.row(co).array() += b_.value.data[co];
    }
    if (!this->train_mode_) cols_ = Tensor<T>();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const long N = dy.dim(0);
    const long K = in_ch_ * spec_.kh * spec_.kw;
    const long P = Ho_ * Wo_;
    Tensor<T> dx({N, in_ch_, in_h_, in_w_});
    // per-sample weight-gradient buffers reduced in sample order keep the
    // result bitwise independent of thread count
    Tensor<T> gw_n({N, out_ch_, K});
    Tensor<T> gb_n({N, out_ch_});
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      CMapM<T> dym(dy.ptr() + n * out_ch_ * P, out_ch_, P);
      CMapM<T> cm(cols_.ptr() + n * K * P, K, P);
      MapM<T> gwm(gw_n.ptr() + n * out_ch_ * K, out_ch_, K);
      gwm.noalias() = dym * cm.transpose();
      for (long co = 0; co < out_ch_; ++co)
        gb_n.data[n * out_ch_ + co] = dym.row(co).sum();
      MatRM<T> dcols(K, P);
      CMapM<T> wm(w_.value.ptr(), out_ch_, K);
      dcols.noalias() = wm.transpose() * dym;
      col2im(dcols.data(), in_ch_, in_h_, in_w_, spec_, Ho_, Wo_,
             dx.ptr() + n * in_ch_ * in_h_ * in_w_);
    }
    for (long n = 0; n < N; ++n) {
      T* gw = w_.grad.ptr();
      const T* src = gw_n.ptr() + n * out_ch_ * K;
      for (long i = 0; i < out_ch_ * K; ++i) gw[i] += src[i];
      for (long co = 0; co < out_ch_; ++co)
        b_.grad.data[co] += gb_n.data[n * out_ch_ + co];
    }
    return dx;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

  const ConvSpec& spec() const { return spec_; }

 private:
  long in_ch_, out_ch_;
  ConvSpec spec_;
  Param<T> w_, b_;
  Tensor<T> cols_;
  long in_h_ = 0, in_w_ = 0, Ho_ = 0, Wo_ = 0;
};

template <typename T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(std::string name, long in_ch, long out_ch, ConvSpec spec,
                  Rng& rng, double init_std = 0.02)
      : in_ch_(in_ch), out_ch_(out_ch), spec_(spec) {
    w_.init(name + ".w", {in_ch, out_ch, spec.kh, spec.kw});
    b_.init(name + ".b", {out_ch});
    w_.value.fill_normal(rng, 0.0, init_std);
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    const long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C != in_ch_)
      throw ShapeError(w_.name + ": expected " + std::to_string(in_ch_) +
                       " input channels, got " + std::to_string(C));
    in_h_ = H;
    in_w_ = W;
    out_h_ = (H - 1) * spec_.sh - 2 * spec_.ph + spec_.kh;
    out_w_ = (W - 1) * spec_.sw - 2 * spec_.pw + spec_.kw;
    const long K = out_ch_ * spec_.kh * spec_.kw;
    const long P = H * W;
    if (this->train_mode_) x_ = x;
    Tensor<T> y({N, out_ch_, out_h_, out_w_});
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      MatRM<T> cols(K, P);
      CMapM<T> wm(w_.value.ptr(), in_ch_, K);
      CMapM<T> xm(x.ptr() + n * C * P, C, P);
      cols.noalias() = wm.transpose() * xm;
      T* yp = y.ptr() + n * out_ch_ * out_h_ * out_w_;
      col2im(cols.data(), out_ch_, out_h_, out_w_, spec_, H, W, yp);
      for (long co = 0; co < out_ch_; ++co) {
        T* row = yp + co * out_h_ * out_w_;
        for (long i = 0; i < out_h_ * out_w_; ++i) row[i] += b_.value.data[co];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const long N = dy.dim(0);
    const long K = out_ch_ * spec_.kh * spec_.kw;
    const long P = in_h_ * in_w_;
    Tensor<T> dx({N, in_ch_, in_h_, in_w_});
    Tensor<T> gw_n({N, in_ch_, K});
    Tensor<T> gb_n({N, out_ch_});
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      MatRM<T> dcols(K, P);
      im2col(dy.ptr() + n * out_ch_ * out_h_ * out_w_, out_ch_, out_h_, out_w_,
             spec_, in_h_, in_w_, dcols.data());
      CMapM<T> wm(w_.value.ptr(), in_ch_, K);
      MapM<T> dxm(dx.ptr() + n * in_ch_ * P, in_ch_, P);
      dxm.noalias() = wm * dcols;
      CMapM<T> xm(x_.ptr() + n * in_ch_ * P, in_ch_, P);
      MapM<T> gwm(gw_n.ptr() + n * in_ch_ * K, in_ch_, K);
      gwm.noalias() = xm * dcols.transpose();
      const T* dyp = dy.ptr() + n * out_ch_ * out_h_ * out_w_;
      for (long co = 0; co < out_ch_; ++co) {
        T s = T(0);
        for (long i = 0; i < out_h_ * out_w_; ++i) s += dyp[co * out_h_ * out_w_ + i];
        gb_n.data[n * out_ch_ + co] = s;
      }
    }
    for (long n = 0; n < N; ++n) {
      T* gw = w_.grad.ptr();
      const T* src = gw_n.ptr() + n * in_ch_ * K;
      for (long i = 0; i < in_ch_ * K; ++i) gw[i] += src[i];
      for (long co = 0; co < out_ch_; ++co)
        b_.grad.data[co] += gb_n.data[n * out_ch_ + co];
    }
    return dx;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

 private:
  long in_ch_, out_ch_;
  ConvSpec spec_;
  Param<T> w_, b_;
  Tensor<T> x_;
  long in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
};

/// Per-sample, per-channel normalization with affine parameters.
template <typename T>
class InstanceNorm2d : public Layer<T> {
 public:
  InstanceNorm2d(std::string name, long ch, double eps = 1e-5)
      : ch_(ch), eps_(static_cast<T>(eps)) {
    gamma_.init(name + ".gamma", {ch});
    beta_.init(name + ".beta", {ch});
    std::fill(gamma_.value.data.begin(), gamma_.value.data.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    const long N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    xhat_ = Tensor<T>(x.shape);
    inv_std_ = Tensor<T>({N, C});
    Tensor<T> y(x.shape);
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      for (long c = 0; c < C; ++c) {
        const T* xp = x.ptr() + (n * C + c) * HW;
        T* xh = xhat_.ptr() + (n * C + c) * HW;
        T* yp = y.ptr() + (n * C + c) * HW;
        T mean = T(0);
        for (long i = 0; i < HW; ++i) mean += xp[i];
        mean /= static_cast<T>(HW);
        T var = T(0);
        for (long i = 0; i < HW; ++i) {
          T d = xp[i] - mean;
          var += d * d;
        }
        var /= static_cast<T>(HW);
        const T istd = T(1) / std::sqrt(var + eps_);
        inv_std_.data[n * C + c] = istd;
        const T g = gamma_.value.data[c], b = beta_.value.data[c];
        for (long i = 0; i < HW; ++i) {
          xh[i] = (xp[i] - mean) * istd;
          yp[i] = g * xh[i] + b;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const long N = dy.dim(0), C = dy.dim(1), HW = dy.dim(2) * dy.dim(3);
    Tensor<T> dx(dy.shape);
    Tensor<T> gg_n({N, C}), gb_n({N, C});
#pragma omp parallel for schedule(static)
    for (long n = 0; n < N; ++n) {
      for (long c = 0; c < C; ++c) {
        const T* dyp = dy.ptr() + (n * C + c) * HW;
        const T* xh = xhat_.ptr() + (n * C + c) * HW;
        T* dxp = dx.ptr() + (n * C + c) * HW;
        T sum_dy = T(0), sum_dy_xh = T(0);
        for (long i = 0; i < HW; ++i) {
          sum_dy += dyp[i];
          sum_dy_xh += dyp[i] * xh[i];
        }
        gb_n.data[n * C + c] = sum_dy;
        gg_n.data[n * C + c] = sum_dy_xh;
        const T g = gamma_.value.data[c];
        const T istd = inv_std_.data[n * C + c];
        const T m_dy = sum_dy / static_cast<T>(HW);
        const T m_dy_xh = sum_dy_xh / static_cast<T>(HW);
        for (long i = 0; i < HW; ++i)
          dxp[i] = g * istd * (dyp[i] - m_dy - xh[i] * m_dy_xh);
      }
    }
    for (long n = 0; n < N; ++n)
      for (long c = 0; c < C; ++c) {
        gamma_.grad.data[c] += gg_n.data[n * C + c];
        beta_.grad.data[c] += gb_n.data[n * C + c];
      }
    return dx;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  long ch_;
  T eps_;
  Param<T> gamma_, beta_;
  Tensor<T> xhat_, inv_std_;
};

template <typename T>
class LeakyReLU : public Layer<T> {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(static_cast<T>(slope)) {}
  Tensor<T> forward(const Tensor<T>& x) override {
    x_ = x;
    Tensor<T> y(x.shape);
    for (long i = 0; i < x.size(); ++i)
      y.data[i] = x.data[i] > T(0) ? x.data[i] : slope_ * x.data[i];
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.size(); ++i)
      dx.data[i] = x_.data[i] > T(0) ? dy.data[i] : slope_ * dy.data[i];
    return dx;
  }

 private:
  T slope_;
  Tensor<T> x_;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    x_ = x;
    Tensor<T> y(x.shape);
    for (long i = 0; i < x.size(); ++i) y.data[i] = std::max(x.data[i], T(0));
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.size(); ++i)
      dx.data[i] = x_.data[i] > T(0) ? dy.data[i] : T(0);
    return dx;
  }

 private:
  Tensor<T> x_;
};

template <typename T>
class Tanh : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    y_ = Tensor<T>(x.shape);
    for (long i = 0; i < x.size(); ++i) y_.data[i] = std::tanh(x.data[i]);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.size(); ++i)
      dx.data[i] = dy.data[i] * (T(1) - y_.data[i] * y_.data[i]);
    return dx;
  }

 private:
  Tensor<T> y_;
};

template <typename T>
class Sigmoid : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    y_ = Tensor<T>(x.shape);
    for (long i = 0; i < x.size(); ++i)
      y_.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.size(); ++i)
      dx.data[i] = dy.data[i] * y_.data[i] * (T(1) - y_.data[i]);
    return dx;
  }

 private:
  Tensor<T> y_;
};

/// Channel concatenation helpers for skip connections.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ShapeError("concat_channels: spatial/batch mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  const long N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), HW = a.dim(2) * a.dim(3);
  Tensor<T> out({N, Ca + Cb, a.dim(2), a.dim(3)});
  for (long n = 0; n < N; ++n) {
    std::copy(a.ptr() + n * Ca * HW, a.ptr() + (n + 1) * Ca * HW,
              out.ptr() + n * (Ca + Cb) * HW);
    std::copy(b.ptr() + n * Cb * HW, b.ptr() + (n + 1) * Cb * HW,
              out.ptr() + n * (Ca + Cb) * HW + Ca * HW);
  }
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& dcat, long Ca, Tensor<T>& da, Tensor<T>& db) {
  const long N = dcat.dim(0), C = dcat.dim(1), HW = dcat.dim(2) * dcat.dim(3);
  const long Cb = C - Ca;
  da = Tensor<T>({N, Ca, dcat.dim(2), dcat.dim(3)});
  db = Tensor<T>({N, Cb, dcat.dim(2), dcat.dim(3)});
  for (long n = 0; n < N; ++n) {
    std::copy(dcat.ptr() + n * C * HW, dcat.ptr() + n * C * HW + Ca * HW,
              da.ptr() + n * Ca * HW);
    std::copy(dcat.ptr() + n * C * HW + Ca * HW, dcat.ptr() + (n + 1) * C * HW,
              db.ptr() + n * Cb * HW);
  }
}

/// Adam with per-parameter first/second moment state.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param<T>*> params, double lr, double beta1, double beta2,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->grad.zero();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      Param<T>* p = params_[k];
      for (long i = 0; i < p->value.size(); ++i) {
        const double g = static_cast<double>(p->grad.data[i]);
        double m = beta1_ * static_cast<double>(m_[k].data[i]) + (1.0 - beta1_) * g;
        double v = beta2_ * static_cast<double>(v_[k].data[i]) + (1.0 - beta2_) * g * g;
        m_[k].data[i] = static_cast<T>(m);
        v_[k].data[i] = static_cast<T>(v);
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        p->value.data[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  const std::vector<Param<T>*>& params() const { return params_; }
  std::vector<Tensor<T>>& moment1() { return m_; }
  std::vector<Tensor<T>>& moment2() { return v_; }
  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }
  double lr() const { return lr_; }

 private:
  std::vector<Param<T>*> params_;
  double lr_ = 2e-4, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<Tensor<T>> m_, v_;
  long t_ = 0;
};

}  // namespace stillscene::nn
