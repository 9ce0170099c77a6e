#pragma once

// Thin stateful wrappers over the functional ops so sequential chains can be
// assembled once and run forward/backward repeatedly. A layer caches what its
// backward needs only when the forward ran in training mode.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "c3ae/nn/ops.hpp"

namespace c3ae::nn {

template <class T>
struct NamedParam {
  std::string name;
  Tensor<T>* tensor;
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) = 0;
  virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
  virtual void collect_params(std::vector<NamedParam<T>>& out) { (void)out; }

  /// First layer of a chain can skip producing an input gradient.
  bool need_input_grad = true;
};

template <class T>
class Conv2dLayer final : public Layer<T> {
 public:
  Conv2dLayer(std::string name, int in_ch, int out_ch, int k)
      : name_(std::move(name)),
        weight(Tensor<T>({out_ch, in_ch, k, k})),
        bias(Tensor<T>({out_ch})) {}

  /// He-normal weights, zero biases.
  void init_he(Rng& rng) {
    const double fan_in = static_cast<double>(weight.dim(1)) * weight.dim(2) *
                          weight.dim(3);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : weight.data) v = static_cast<T>(rng.normal(0.0, stddev));
    std::fill(bias.data.begin(), bias.data.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng&) override {
    return conv2d(x, weight, bias, training ? &ctx_ : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    weight.ensure_grad();
    bias.ensure_grad();
    return conv2d_backward(gy, weight, ctx_, weight.grad, bias.grad,
                           this->need_input_grad);
  }
  void collect_params(std::vector<NamedParam<T>>& out) override {
    out.push_back({name_ + ".weight", &weight});
    out.push_back({name_ + ".bias", &bias});
  }

  Tensor<T> weight;
  Tensor<T> bias;

 private:
  std::string name_;
  Conv2dCtx<T> ctx_;
};

template <class T>
class ReluLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng&) override {
    if (training) input_ = x;
    return relu(x);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return relu_backward(gy, input_);
  }

 private:
  Tensor<T> input_;
};

template <class T>
class SigmoidLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng&) override {
    Tensor<T> y = sigmoid(x);
    if (training) output_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return sigmoid_backward(gy, output_);
  }

 private:
  Tensor<T> output_;
};

template <class T>
class MaxPool2Layer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng&) override {
    return maxpool2(x, training ? &ctx_ : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return maxpool2_backward(gy, ctx_);
  }

 private:
  MaxPool2Ctx<T> ctx_;
};

template <class T>
class Upsample2Layer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    return upsample2_nearest(x);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return upsample2_nearest_backward(gy);
  }
};

template <class T>
class GlobalAvgPoolLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng&) override {
    return global_avg_pool(x, training ? &ctx_ : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return global_avg_pool_backward(gy, ctx_);
  }

 private:
  GlobalAvgPoolCtx<T> ctx_;
};

template <class T>
class DropoutLayer final : public Layer<T> {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {}
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) override {
    return dropout(x, rate_, training, rng, training ? &ctx_ : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return dropout_backward(gy, ctx_);
  }

 private:
  double rate_;
  DropoutCtx<T> ctx_;
};

template <class T>
class Sequential {
 public:
  template <class L, class... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor<T> forward(Tensor<T> x, bool training, Rng& rng) {
    for (auto& l : layers_) x = l->forward(x, training, rng);
    return x;
  }
  Tensor<T> backward(Tensor<T> gy) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      gy = (*it)->backward(gy);
    return gy;
  }
  void collect_params(std::vector<NamedParam<T>>& out) {
    for (auto& l : layers_) l->collect_params(out);
  }
  bool empty() const { return layers_.empty(); }
  Layer<T>* front() { return layers_.empty() ? nullptr : layers_.front().get(); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace c3ae::nn
