#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stillscene/layers.hpp"
#include "testutil.hpp"

using namespace stillscene;
using namespace stillscene::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<long> shape, Rng& rng, double scale = 1.0) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data) v = static_cast<T>(rng.normal(0.0, scale));
  return t;
}

// reference convolution, plain loops
template <typename T>
Tensor<T> naive_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                     const ConvSpec& sp) {
  const long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long Co = w.dim(0);
  const long Ho = conv_out(H, sp.kh, sp.sh, sp.ph);
  const long Wo = conv_out(W, sp.kw, sp.sw, sp.pw);
  Tensor<T> y({N, Co, Ho, Wo});
  for (long n = 0; n < N; ++n)
    for (long co = 0; co < Co; ++co)
      for (long oh = 0; oh < Ho; ++oh)
        for (long ow = 0; ow < Wo; ++ow) {
          double acc = b.data[co];
          for (long c = 0; c < C; ++c)
            for (int i = 0; i < sp.kh; ++i)
              for (int j = 0; j < sp.kw; ++j) {
                const long ih = oh * sp.sh - sp.ph + i;
                const long iw = ow * sp.sw - sp.pw + j;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += static_cast<double>(x.at(n, c, ih, iw)) *
                       static_cast<double>(w.data[((co * C + c) * sp.kh + i) * sp.kw + j]);
              }
          y.at(n, co, oh, ow) = static_cast<T>(acc);
        }
  return y;
}

// runs finite differences over every element of every parameter of `layer`
template <typename LayerT>
void gradcheck_layer(LayerT& layer, Tensor<double>& x, Rng& rng,
                     double tol = 1e-6) {
  std::vector<Param<double>*> params;
  layer.collect_params(params);
  Tensor<double> y = layer.forward(x);
  Tensor<double> r = random_tensor<double>(y.shape, rng);
  for (auto* p : params) p->grad.zero();
  Tensor<double> dx = layer.backward(r);

  auto loss = [&]() { return testutil::weighted_sum(layer.forward(x), r); };

  for (auto* p : params) {
    auto stats = testutil::check_grads(p->value.data, p->grad.data, loss);
    INFO("param ", p->name, " worst index ", stats.worst_index);
    CHECK(stats.max_rel < tol);
  }
  auto stats = testutil::check_grads(x.data, dx.data, loss);
  INFO("input grad, worst index ", stats.worst_index);
  CHECK(stats.max_rel < tol);
}

}  // namespace

TEST_CASE("conv2d forward matches naive loop oracle") {
  Rng rng(1);
  for (const ConvSpec sp : {ConvSpec{4, 4, 2, 2, 1, 1}, ConvSpec{3, 3, 1, 1, 1, 1},
                            ConvSpec{3, 1, 1, 1, 1, 0}, ConvSpec{1, 3, 1, 1, 0, 1},
                            ConvSpec{4, 4, 1, 1, 1, 1}}) {
    Conv2d<double> conv("t", 3, 5, sp, rng);
    std::vector<Param<double>*> ps;
    conv.collect_params(ps);
    for (auto* p : ps)
      for (auto& v : p->value.data) v = rng.normal(0.0, 0.5);
    Tensor<double> x = random_tensor<double>({2, 3, 8, 10}, rng);
    Tensor<double> got = conv.forward(x);
    Tensor<double> want = naive_conv(x, ps[0]->value, ps[1]->value, sp);
    REQUIRE(got.shape == want.shape);
    for (long i = 0; i < got.size(); ++i)
      CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("conv transpose is the exact adjoint of conv with tied weights") {
  Rng rng(2);
  const ConvSpec sp{4, 4, 2, 2, 1, 1};
  Conv2d<double> conv("c", 3, 5, sp, rng);
  ConvTranspose2d<double> convT("ct", 5, 3, sp, rng);
  std::vector<Param<double>*> pc, pt;
  conv.collect_params(pc);
  convT.collect_params(pt);
  // conv weight [5,3,k,k]; transpose weight [5,3,k,k]: same layout, tie them
  pt[0]->value = pc[0]->value;
  pc[1]->value.zero();
  pt[1]->value.zero();

  Tensor<double> x = random_tensor<double>({2, 3, 8, 8}, rng);
  Tensor<double> y = random_tensor<double>({2, 5, 4, 4}, rng);
  Tensor<double> cx = conv.forward(x);
  Tensor<double> cty = convT.forward(y);
  REQUIRE(cx.shape == y.shape);
  REQUIRE(cty.shape == x.shape);
  double lhs = 0.0, rhs = 0.0;
  for (long i = 0; i < cx.size(); ++i) lhs += cx.data[i] * y.data[i];
  for (long i = 0; i < x.size(); ++i) rhs += x.data[i] * cty.data[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(3);
  Conv2d<double> conv("c", 2, 3, ConvSpec{3, 3, 2, 2, 1, 1}, rng, 0.3);
  Tensor<double> x = random_tensor<double>({2, 2, 6, 6}, rng);
  gradcheck_layer(conv, x, rng);
}

TEST_CASE("conv transpose gradients match finite differences") {
  Rng rng(4);
  ConvTranspose2d<double> convT("ct", 3, 2, ConvSpec{4, 4, 2, 2, 1, 1}, rng, 0.3);
  Tensor<double> x = random_tensor<double>({2, 3, 4, 4}, rng);
  gradcheck_layer(convT, x, rng);
}

TEST_CASE("instance norm: per-channel statistics and finite differences") {
  Rng rng(5);
  InstanceNorm2d<double> norm("n", 3);
  Tensor<double> x = random_tensor<double>({2, 3, 5, 5}, rng, 2.0);
  Tensor<double> y = norm.forward(x);
  // unit gamma, zero beta: each (n,c) slice has mean 0 and variance ~1
  for (long n = 0; n < 2; ++n)
    for (long c = 0; c < 3; ++c) {
      double mean = 0.0, var = 0.0;
      for (long h = 0; h < 5; ++h)
        for (long w = 0; w < 5; ++w) mean += y.at(n, c, h, w);
      mean /= 25.0;
      for (long h = 0; h < 5; ++h)
        for (long w = 0; w < 5; ++w) {
          const double d = y.at(n, c, h, w) - mean;
          var += d * d;
        }
      var /= 25.0;
      CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
      CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
  gradcheck_layer(norm, x, rng, 1e-5);
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(6);
  Tensor<double> x = random_tensor<double>({2, 3, 4, 4}, rng);
  {
    LeakyReLU<double> a(0.2);
    gradcheck_layer(a, x, rng);
  }
  {
    ReLU<double> a;
    gradcheck_layer(a, x, rng);
  }
  {
    Tanh<double> a;
    gradcheck_layer(a, x, rng);
  }
  {
    Sigmoid<double> a;
    gradcheck_layer(a, x, rng);
  }
}

TEST_CASE("concat/split channels round trip") {
  Rng rng(7);
  Tensor<float> a = random_tensor<float>({2, 3, 4, 4}, rng);
  Tensor<float> b = random_tensor<float>({2, 2, 4, 4}, rng);
  Tensor<float> cat = concat_channels(a, b);
  CHECK(cat.dim(1) == 5);
  Tensor<float> a2, b2;
  split_channels(cat, 3, a2, b2);
  CHECK(a2.data == a.data);
  CHECK(b2.data == b.data);
}

TEST_CASE("adam: one step matches the update rule by hand") {
  Rng rng(8);
  Param<double> p;
  p.init("w", {2});
  p.value.data = {1.0, -2.0};
  p.grad.data = {0.5, -0.25};
  Adam<double> opt({&p}, 1e-2, 0.9, 0.999);
  opt.step();
  for (int i = 0; i < 2; ++i) {
    const double g = i == 0 ? 0.5 : -0.25;
    const double m = 0.1 * g, v = 0.001 * g * g;
    const double mhat = m / (1 - 0.9), vhat = v / (1 - 0.999);
    const double want = (i == 0 ? 1.0 : -2.0) - 1e-2 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p.value.data[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("forward passes are deterministic given fixed parameters") {
  Rng rng(9);
  Conv2d<float> conv("c", 3, 4, ConvSpec{}, rng);
  Tensor<float> x = random_tensor<float>({3, 3, 8, 8}, rng);
  Tensor<float> y1 = conv.forward(x);
  Tensor<float> y2 = conv.forward(x);
  CHECK(y1.data == y2.data);
}
