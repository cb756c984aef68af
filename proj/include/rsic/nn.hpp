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

// Minimal reverse-mode automatic differentiation over rsic::Tensor.
//
// Every op returns a Var that records its parents and a backward closure when
// gradient recording is enabled and at least one input requires a gradient.
// Graphs are built per forward pass and released with the last Var handle.

#ifndef RSIC_NN_HPP_
#define RSIC_NN_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rsic/rng.hpp"
#include "rsic/tensor.hpp"

namespace rsic::nn {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate_grad(const Tensor& g);
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  // Gradient accumulated by backward(); zero tensor of matching shape if none flowed.
  Tensor grad() const;
  void zero_grad() { node_->grad = Tensor(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Leaf constructors.
Var constant(Tensor value);
Var variable(Tensor value);  // leaf that receives a gradient

bool grad_enabled();

// Disables graph recording for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Back-propagates d(loss)/d(.) into every reachable Var. `loss` must hold a
// single element.
void backward(const Var& loss);

// ---- ops -------------------------------------------------------------------

// weight shape: (out_channels, in_channels, k*k); bias shape: (out_channels, 1, 1).
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
// x: (C, H, W); v: (C, 1, 1).
Var add_channel(const Var& x, const Var& v);
// x: (C, H, W); m: (1, H, W), broadcast across channels.
Var mul_spatial(const Var& x, const Var& m);

Var leaky_relu(const Var& x, double slope = 0.1);
Var silu(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);

Var concat_channels(const Var& a, const Var& b);
Var slice_channels(const Var& x, int start, int count);
// Nearest-neighbour replication by `factor`, cropped to (out_h, out_w).
Var upsample_nearest(const Var& x, int factor, int out_h, int out_w);

Var sum(const Var& x);
Var mean(const Var& x);

// Elementwise -log2 of the mass a zero-mean Gaussian with scale `sigma` puts on
// [v - 1/2, v + 1/2]. Mass is floored at 1e-9.
Var gaussian_bits(const Var& v, const Var& sigma);

// table: (V, D, 1). Mean of the selected rows as a (D, 1, 1) vector; zero
// vector when `rows` is empty.
Var embedding_mean(const Var& table, const std::vector<int>& rows);

// ---- parameters ------------------------------------------------------------

struct NamedParameter {
  std::string name;
  Var var;
};

// Ordered collection of trainable tensors. Order is the serialization order.
class ParameterSet {
 public:
  Var add(const std::string& name, Tensor init);
  const std::vector<NamedParameter>& items() const { return items_; }
  std::vector<NamedParameter>& items() { return items_; }
  const Var& get(const std::string& name) const;
  std::size_t count() const;
  void zero_grad();
  bool all_finite() const;

 private:
  std::vector<NamedParameter> items_;
};

// Convolution layer with He-uniform initialisation.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterSet& params, const std::string& name, int in_channels, int out_channels,
         int kernel, int stride, Rng& rng, double init_gain = 1.0);

  Var operator()(const Var& x) const;
  int out_channels() const { return out_channels_; }

 private:
  Var weight_;
  Var bias_;
  int out_channels_ = 0;
  int stride_ = 1;
  int padding_ = 0;
};

// Adam with optional global-norm gradient clipping.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0;  // 0 disables clipping
  };

  Adam(ParameterSet& params, Options options);

  // Applies one update using gradients divided by `batch_size`, then zeroes them.
  // Returns the pre-clipping gradient norm.
  double step(double batch_size = 1.0);
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  ParameterSet& params_;
  Options options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace rsic::nn

#endif  // RSIC_NN_HPP_
