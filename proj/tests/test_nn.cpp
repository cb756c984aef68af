// Copyright 2026 The RSIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <functional>

#include "doctest.h"
#include "oracles.hpp"
#include "rsic/nn.hpp"

using namespace rsic;
using namespace rsic::nn;

namespace {

// Checks d(sum(w * f(x)))/dx against central differences, with a random w so
// every output element contributes.
void check_unary_op(const std::function<Var(const Var&)>& op, Shape shape, std::uint64_t seed,
                    double tol = 1e-6) {
  Rng rng(seed);
  const Tensor x0 = rng.normal_like(shape);
  Var probe = op(constant(x0));
  const Tensor weights = rng.normal_like(probe.shape());

  auto f = [&](const Tensor& x) {
    NoGradGuard guard;
    const Tensor y = op(constant(x)).value();
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += weights[i] * y[i];
    return s;
  };
  Var x = variable(x0);
  backward(sum(mul(op(x), constant(weights))));
  const Tensor numeric = oracle::central_difference(f, x0, 1e-5);
  CHECK(oracle::relative_error(x.grad(), numeric) < tol);
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(3);
  ParameterSet params;
  for (int stride : {1, 2}) {
    for (int kernel : {1, 3}) {
      const Conv2d conv(params, "c" + std::to_string(stride) + std::to_string(kernel), 3, 5, kernel,
                        stride, rng);
      check_unary_op([&](const Var& v) { return conv(v); }, {3, 5, 6}, 10 + stride * 3 + kernel);
    }
  }
}

TEST_CASE("conv2d weight gradient matches finite differences") {
  Rng rng(4);
  const Tensor x = rng.normal_like({2, 4, 4});
  const Tensor w0 = rng.normal_like({3, 2, 9});
  const Tensor b = rng.normal_like({3, 1, 1});
  auto f = [&](const Tensor& w) {
    NoGradGuard guard;
    return sum(leaky_relu(conv2d(constant(x), constant(w), constant(b), 2, 1))).value()[0];
  };
  Var w = variable(w0);
  backward(sum(leaky_relu(conv2d(constant(x), w, constant(b), 2, 1))));
  CHECK(oracle::relative_error(w.grad(), oracle::central_difference(f, w0, 1e-6)) < 1e-6);
}

TEST_CASE("elementwise and shape ops match finite differences") {
  check_unary_op([](const Var& v) { return silu(v); }, {2, 3, 3}, 1);
  check_unary_op([](const Var& v) { return sigmoid(v); }, {2, 3, 3}, 2);
  check_unary_op([](const Var& v) { return softplus(v); }, {2, 3, 3}, 3);
  check_unary_op([](const Var& v) { return mul(v, v); }, {2, 3, 3}, 4);
  check_unary_op([](const Var& v) { return upsample_nearest(v, 2, 5, 6); }, {2, 3, 3}, 5);
  check_unary_op([](const Var& v) { return concat_channels(v, scale(v, 2.0)); }, {2, 3, 3}, 6);
  check_unary_op([](const Var& v) { return slice_channels(v, 1, 2); }, {3, 2, 2}, 7);
  check_unary_op([](const Var& v) { return mul_spatial(v, slice_channels(v, 0, 1)); }, {3, 2, 2}, 8);
  check_unary_op(
      [](const Var& v) {
        return add_channel(v, constant(Tensor(2, 1, 1, 0.5)));
      },
      {2, 3, 3}, 9);
}

TEST_CASE("gaussian_bits gradient in value and scale") {
  Rng rng(11);
  Tensor v0 = rng.normal_like({1, 4, 4});
  Tensor s0(1, 4, 4);
  for (double& s : s0.values()) s = rng.uniform(0.3, 3.0);
  auto f_v = [&](const Tensor& v) {
    NoGradGuard g;
    return sum(gaussian_bits(constant(v), constant(s0))).value()[0];
  };
  auto f_s = [&](const Tensor& s) {
    NoGradGuard g;
    return sum(gaussian_bits(constant(v0), constant(s))).value()[0];
  };
  Var v = variable(v0);
  Var s = variable(s0);
  backward(sum(gaussian_bits(v, s)));
  CHECK(oracle::relative_error(v.grad(), oracle::central_difference(f_v, v0, 1e-6)) < 1e-6);
  CHECK(oracle::relative_error(s.grad(), oracle::central_difference(f_s, s0, 1e-6)) < 1e-6);
}

TEST_CASE("gaussian_bits of a certain bin is near zero") {
  const Var bits = gaussian_bits(constant(Tensor(1, 1, 1, 0.0)), constant(Tensor(1, 1, 1, 0.01)));
  CHECK(bits.value()[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("no-grad guard stops graph recording") {
  Var x = variable(Tensor(1, 2, 2, 1.0));
  NoGradGuard guard;
  const Var y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("adam reduces a quadratic") {
  ParameterSet params;
  Var p = params.add("p", Tensor(1, 1, 3, 5.0));
  Adam opt(params, {.learning_rate = 0.1});
  for (int i = 0; i < 300; ++i) {
    backward(sum(mul(p, p)));
    opt.step();
  }
  CHECK(p.value().max_abs() < 0.05);
}
