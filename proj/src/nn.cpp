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

#include "rsic/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace rsic::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

thread_local bool g_grad_enabled = true;

using BackwardFn = std::function<void(Node&)>;

Var make_result(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Var& in : inputs) {
      if (in.requires_grad()) node->parents.push_back(in.node());
    }
    if (!node->parents.empty()) {
      node->requires_grad = true;
      node->backward_fn = std::move(fn);
    }
  }
  return Var(std::move(node));
}

void check_same(const Var& a, const Var& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

template <typename F>
Var unary(const Var& x, F forward, double (*derivative)(double in, double out)) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return make_result(std::move(out), {x}, [x, derivative](Node& self) {
    Tensor& g = x.node()->grad_buffer();
    const Tensor& in = x.value();
    for (std::size_t i = 0; i < in.size(); ++i) {
      g[i] += self.grad[i] * derivative(in[i], self.value[i]);
    }
  });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2)); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * (1.0 / std::numbers::sqrt2));
}

}  // namespace

// ---- Node / Var ------------------------------------------------------------

Tensor& Node::grad_buffer() {
  if (grad.empty() || grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

void Node::accumulate_grad(const Tensor& g) { grad_buffer() += g; }

Tensor Var::grad() const {
  if (node_->grad.empty()) return Tensor(node_->value.shape());
  return node_->grad;
}

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var variable(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& loss) {
  if (loss.value().size() != 1) throw InvalidArgument("backward: loss must be a scalar");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

// ---- convolution -----------------------------------------------------------

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding) {
  const Tensor& in = x.value();
  const int cin = in.channels();
  const int h = in.height();
  const int w = in.width();
  const int cout = weight.shape().channels;
  const int kk = weight.shape().width;
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kk))));
  if (weight.shape().height != cin || k * k != kk) {
    throw InvalidArgument("conv2d: weight " + weight.shape().str() + " incompatible with input " +
                          in.shape().str());
  }
  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (w + 2 * padding - k) / stride + 1;
  if (oh <= 0 || ow <= 0) throw InvalidArgument("conv2d: input too small " + in.shape().str());
  const int rows = cin * kk;
  const int npix = oh * ow;
  const bool direct = (k == 1 && stride == 1 && padding == 0);

  auto cols = std::make_shared<AlignedBuffer>();
  if (!direct) {
    cols->assign(static_cast<std::size_t>(rows) * npix, 0.0);
    for (int c = 0; c < cin; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double* dst = cols->data() + static_cast<std::size_t>((c * k + ky) * k + kx) * npix;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - padding + kx;
              if (ix >= 0 && ix < w) dst[oy * ow + ox] = in.at(c, iy, ix);
            }
          }
        }
      }
    }
  }
  const double* col_data = direct ? in.data() : cols->data();

  Tensor out(cout, oh, ow);
  {
    ConstMatrixMap wm(weight.value().data(), cout, rows);
    ConstMatrixMap cm(col_data, rows, npix);
    MatrixMap om(out.data(), cout, npix);
    om.noalias() = wm * cm;
    for (int o = 0; o < cout; ++o) om.row(o).array() += bias.value()[o];
  }

  return make_result(std::move(out), {x, weight, bias},
                     [x, weight, bias, cols, direct, cin, h, w, cout, k, stride, padding, oh, ow,
                      rows, npix](Node& self) {
                       const double* col_data = direct ? x.value().data() : cols->data();
                       ConstMatrixMap gm(self.grad.data(), cout, npix);
                       if (weight.requires_grad()) {
                         MatrixMap gw(weight.node()->grad_buffer().data(), cout, rows);
                         ConstMatrixMap cm(col_data, rows, npix);
                         gw.noalias() += gm * cm.transpose();
                       }
                       if (bias.requires_grad()) {
                         Tensor& gb = bias.node()->grad_buffer();
                         for (int o = 0; o < cout; ++o) gb[o] += gm.row(o).sum();
                       }
                       if (x.requires_grad()) {
                         ConstMatrixMap wm(weight.value().data(), cout, rows);
                         Tensor& gx = x.node()->grad_buffer();
                         if (direct) {
                           MatrixMap gxm(gx.data(), rows, npix);
                           gxm.noalias() += wm.transpose() * gm;
                           return;
                         }
                         RowMatrix gcols = wm.transpose() * gm;
                         for (int c = 0; c < cin; ++c) {
                           for (int ky = 0; ky < k; ++ky) {
                             for (int kx = 0; kx < k; ++kx) {
                               const double* src = gcols.data() +
                                                   static_cast<std::size_t>((c * k + ky) * k + kx) * npix;
                               for (int oy = 0; oy < oh; ++oy) {
                                 const int iy = oy * stride - padding + ky;
                                 if (iy < 0 || iy >= h) continue;
                                 for (int ox = 0; ox < ow; ++ox) {
                                   const int ix = ox * stride - padding + kx;
                                   if (ix >= 0 && ix < w) gx.at(c, iy, ix) += src[oy * ow + ox];
                                 }
                               }
                             }
                           }
                         }
                       }
                     });
}

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  check_same(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [a, b](Node& self) {
    if (a.requires_grad()) a.node()->accumulate_grad(self.grad);
    if (b.requires_grad()) b.node()->accumulate_grad(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [a, b](Node& self) {
    if (a.requires_grad()) a.node()->accumulate_grad(self.grad);
    if (b.requires_grad()) b.node()->grad_buffer() -= self.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  check_same(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    if (a.requires_grad()) {
      Tensor& g = a.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      Tensor& g = b.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.value()[i];
    }
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [a, s](Node& self) {
    Tensor& g = a.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v += s;
  return make_result(std::move(out), {a},
                     [a](Node& self) { a.node()->accumulate_grad(self.grad); });
}

Var add_channel(const Var& x, const Var& v) {
  const Shape s = x.shape();
  if (v.shape() != Shape{s.channels, 1, 1}) {
    throw InvalidArgument("add_channel: vector " + v.shape().str() + " vs " + s.str());
  }
  Tensor out = x.value();
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  for (int c = 0; c < s.channels; ++c) {
    double* p = out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += v.value()[c];
  }
  return make_result(std::move(out), {x, v}, [x, v, plane](Node& self) {
    if (x.requires_grad()) x.node()->accumulate_grad(self.grad);
    if (v.requires_grad()) {
      Tensor& g = v.node()->grad_buffer();
      for (int c = 0; c < g.channels(); ++c) {
        const double* p = self.grad.data() + c * plane;
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        g[c] += s;
      }
    }
  });
}

Var mul_spatial(const Var& x, const Var& m) {
  const Shape s = x.shape();
  if (m.shape() != Shape{1, s.height, s.width}) {
    throw InvalidArgument("mul_spatial: map " + m.shape().str() + " vs " + s.str());
  }
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  Tensor out(s);
  for (int c = 0; c < s.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = x.value()[c * plane + i] * m.value()[i];
  }
  return make_result(std::move(out), {x, m}, [x, m, plane](Node& self) {
    const int channels = x.shape().channels;
    if (x.requires_grad()) {
      Tensor& g = x.node()->grad_buffer();
      for (int c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) g[c * plane + i] += self.grad[c * plane + i] * m.value()[i];
      }
    }
    if (m.requires_grad()) {
      Tensor& g = m.node()->grad_buffer();
      for (int c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) g[i] += self.grad[c * plane + i] * x.value()[c * plane + i];
      }
    }
  });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.value()[i];
    out[i] = v > 0.0 ? v : slope * v;
  }
  return make_result(std::move(out), {x}, [x, slope](Node& self) {
    Tensor& g = x.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * (x.value()[i] > 0.0 ? 1.0 : slope);
    }
  });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double out) { return out * (1.0 - out); });
}

Var silu(const Var& x) {
  return unary(
      x, [](double v) { return v / (1.0 + std::exp(-v)); },
      [](double in, double) {
        const double s = 1.0 / (1.0 + std::exp(-in));
        return s * (1.0 + in * (1.0 - s));
      });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double in, double) { return 1.0 / (1.0 + std::exp(-in)); });
}

// ---- shape ops ---------------------------------------------------------------

Var concat_channels(const Var& a, const Var& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.height != sb.height || sa.width != sb.width) {
    throw InvalidArgument("concat_channels: " + sa.str() + " vs " + sb.str());
  }
  Tensor out(sa.channels + sb.channels, sa.height, sa.width);
  std::copy(a.value().data(), a.value().data() + sa.size(), out.data());
  std::copy(b.value().data(), b.value().data() + sb.size(), out.data() + sa.size());
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    const std::size_t na = a.value().size();
    if (a.requires_grad()) {
      Tensor& g = a.node()->grad_buffer();
      for (std::size_t i = 0; i < na; ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad()) {
      Tensor& g = b.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
    }
  });
}

Var slice_channels(const Var& x, int start, int count) {
  const Shape s = x.shape();
  if (start < 0 || count <= 0 || start + count > s.channels) {
    throw InvalidArgument("slice_channels: range out of bounds for " + s.str());
  }
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  Tensor out(count, s.height, s.width);
  std::copy(x.value().data() + start * plane, x.value().data() + (start + count) * plane, out.data());
  return make_result(std::move(out), {x}, [x, start, plane](Node& self) {
    Tensor& g = x.node()->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * plane + i] += self.grad[i];
  });
}

Var upsample_nearest(const Var& x, int factor, int out_h, int out_w) {
  const Shape s = x.shape();
  if (factor < 1 || out_h <= 0 || out_w <= 0 || out_h > s.height * factor || out_w > s.width * factor) {
    throw InvalidArgument("upsample_nearest: bad target for " + s.str());
  }
  Tensor out(s.channels, out_h, out_w);
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int xx = 0; xx < out_w; ++xx) out.at(c, y, xx) = x.value().at(c, y / factor, xx / factor);
    }
  }
  return make_result(std::move(out), {x}, [x, factor](Node& self) {
    Tensor& g = x.node()->grad_buffer();
    const Shape o = self.value.shape();
    for (int c = 0; c < o.channels; ++c) {
      for (int y = 0; y < o.height; ++y) {
        for (int xx = 0; xx < o.width; ++xx) g.at(c, y / factor, xx / factor) += self.grad.at(c, y, xx);
      }
    }
  });
}

Var sum(const Var& x) {
  Tensor out(1, 1, 1, x.value().sum());
  return make_result(std::move(out), {x}, [x](Node& self) {
    Tensor& g = x.node()->grad_buffer();
    const double s = self.grad[0];
    for (double& v : g.values()) v += s;
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var gaussian_bits(const Var& v, const Var& sigma) {
  check_same(v, sigma, "gaussian_bits");
  constexpr double kFloor = 1e-9;
  const std::size_t n = v.value().size();
  Tensor out(v.shape());
  auto mass = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigma.value()[i];
    // Evaluate in the lower tail where erfc is accurate.
    const double a = -std::abs(v.value()[i]);
    const double p = normal_cdf((a + 0.5) / s) - normal_cdf((a - 0.5) / s);
    (*mass)[i] = std::max(p, kFloor);
    out[i] = -std::log2((*mass)[i]);
  }
  return make_result(std::move(out), {v, sigma}, [v, sigma, mass](Node& self) {
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigma.value()[i];
      const double u = (v.value()[i] + 0.5) / s;
      const double l = (v.value()[i] - 0.5) / s;
      const double coef = -self.grad[i] / ((*mass)[i] * std::numbers::ln2);
      if (v.requires_grad()) {
        v.node()->grad_buffer()[i] += coef * (normal_pdf(u) - normal_pdf(l)) / s;
      }
      if (sigma.requires_grad()) {
        sigma.node()->grad_buffer()[i] += coef * -(normal_pdf(u) * u - normal_pdf(l) * l) / s;
      }
    }
  });
}

Var embedding_mean(const Var& table, const std::vector<int>& rows) {
  const int vocab = table.shape().channels;
  const int dim = table.shape().height;
  Tensor out(dim, 1, 1);
  for (int r : rows) {
    if (r < 0 || r >= vocab) throw InvalidArgument("embedding_mean: row out of range");
    for (int d = 0; d < dim; ++d) out[d] += table.value()[static_cast<std::size_t>(r) * dim + d];
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  out *= inv;
  return make_result(std::move(out), {table}, [table, rows, dim, inv](Node& self) {
    Tensor& g = table.node()->grad_buffer();
    for (int r : rows) {
      for (int d = 0; d < dim; ++d) g[static_cast<std::size_t>(r) * dim + d] += inv * self.grad[d];
    }
  });
}

// ---- parameters ------------------------------------------------------------

Var ParameterSet::add(const std::string& name, Tensor init) {
  for (const auto& p : items_) {
    if (p.name == name) throw InvalidArgument("duplicate parameter name: " + name);
  }
  Var v = variable(std::move(init));
  items_.push_back({name, v});
  return v;
}

const Var& ParameterSet::get(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return p.var;
  }
  throw InvalidArgument("unknown parameter: " + name);
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var.zero_grad();
}

bool ParameterSet::all_finite() const {
  return std::all_of(items_.begin(), items_.end(),
                     [](const NamedParameter& p) { return p.var.value().all_finite(); });
}

Conv2d::Conv2d(ParameterSet& params, const std::string& name, int in_channels, int out_channels,
               int kernel, int stride, Rng& rng, double init_gain)
    : out_channels_(out_channels), stride_(stride), padding_(kernel / 2) {
  const int fan_in = in_channels * kernel * kernel;
  const double bound = init_gain * std::sqrt(6.0 / fan_in);
  Tensor w(out_channels, in_channels, kernel * kernel);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  weight_ = params.add(name + ".weight", std::move(w));
  bias_ = params.add(name + ".bias", Tensor(out_channels, 1, 1));
}

Var Conv2d::operator()(const Var& x) const { return conv2d(x, weight_, bias_, stride_, padding_); }

Adam::Adam(ParameterSet& params, Options options) : params_(params), options_(options) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

double Adam::step(double batch_size) {
  const double inv_batch = 1.0 / batch_size;
  double norm2 = 0.0;
  for (const auto& p : params_.items()) {
    const Tensor g = p.var.grad();
    norm2 += squared_norm(g) * inv_batch * inv_batch;
  }
  const double norm = std::sqrt(norm2);
  double clip = 1.0;
  if (options_.clip_norm > 0.0 && norm > options_.clip_norm) clip = options_.clip_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  auto& items = params_.items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    const Tensor g = items[k].var.grad();
    Tensor& value = items[k].var.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = g[i] * inv_batch * clip;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      value[i] -= options_.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.epsilon);
    }
    items[k].var.zero_grad();
  }
  return norm;
}

}  // namespace rsic::nn
