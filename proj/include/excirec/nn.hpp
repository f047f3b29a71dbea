#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "excirec/common.hpp"
#include "excirec/dataset.hpp"
#include "excirec/rng.hpp"

namespace excirec {
namespace nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Feature maps are stored row-major per sample as (channel, row, column),
// one sample per matrix row. 1D signals are (1, len, 1).
struct Shape {
  int c = 1;
  int h = 1;
  int w = 1;
  int size() const { return c * h * w; }
  bool operator==(const Shape& o) const {
    return c == o.c && h == o.h && w == o.w;
  }
};

enum class LayerKind { conv, relu, avgpool, flatten, dense };
enum class Padding { same, valid };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int kernel = 3;    // conv kernel edge; applied to width only when w > 1
  int channels = 1;  // conv output channels
  int stride = 1;
  Padding padding = Padding::same;
  int width = 2;     // avgpool window
  int units = 1;     // dense output size
};

inline LayerSpec conv_spec(int kernel, int channels, int stride = 1,
                           Padding padding = Padding::same) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.kernel = kernel;
  s.channels = channels;
  s.stride = stride;
  s.padding = padding;
  return s;
}

inline LayerSpec relu_spec() { return LayerSpec{}; }

inline LayerSpec avgpool_spec(int width) {
  LayerSpec s;
  s.kind = LayerKind::avgpool;
  s.width = width;
  return s;
}

inline LayerSpec flatten_spec() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

inline LayerSpec dense_spec(int units) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  return s;
}

struct NetworkConfig {
  Shape input;
  std::vector<LayerSpec> layers;
};

// The reference regression stack used throughout:
// Conv(9,16) relu Pool(2) Conv(9,32) relu Pool(2) Conv(5,32) relu
// Flatten Dense(256) relu Dense(n_out), followed by output normalization.
inline NetworkConfig reference_config_1d(int input_len, int n_out) {
  NetworkConfig cfg;
  cfg.input = Shape{1, input_len, 1};
  cfg.layers = {conv_spec(9, 16),  relu_spec(),      avgpool_spec(2),
                conv_spec(9, 32),  relu_spec(),      avgpool_spec(2),
                conv_spec(5, 32),  relu_spec(),      flatten_spec(),
                dense_spec(256),   relu_spec(),      dense_spec(n_out)};
  return cfg;
}

template <typename S>
struct Param {
  Mat<S> value;
  Mat<S> grad;
};

namespace detail {

// (c, y, x) of one sample unrolled to kernel-tap rows x output-position
// columns; out-of-range taps contribute zero.
template <typename S>
void im2col(const S* x, const Shape& in, int kh, int kw, int sh, int sw,
            int pad_h, int pad_w, int out_h, int out_w, Mat<S>& col) {
  for (int c = 0; c < in.c; ++c)
    for (int dy = 0; dy < kh; ++dy)
      for (int dx = 0; dx < kw; ++dx) {
        const int r = (c * kh + dy) * kw + dx;
        S* dst = col.row(r).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int y = oy * sh - pad_h + dy;
          for (int ox = 0; ox < out_w; ++ox) {
            const int xx = ox * sw - pad_w + dx;
            dst[oy * out_w + ox] =
                (y >= 0 && y < in.h && xx >= 0 && xx < in.w)
                    ? x[(c * in.h + y) * in.w + xx]
                    : S(0);
          }
        }
      }
}

template <typename S>
void col2im(const Mat<S>& col, const Shape& in, int kh, int kw, int sh, int sw,
            int pad_h, int pad_w, int out_h, int out_w, S* dx) {
  std::fill(dx, dx + in.size(), S(0));
  for (int c = 0; c < in.c; ++c)
    for (int dy = 0; dy < kh; ++dy)
      for (int dx_k = 0; dx_k < kw; ++dx_k) {
        const int r = (c * kh + dy) * kw + dx_k;
        const S* src = col.row(r).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int y = oy * sh - pad_h + dy;
          if (y < 0 || y >= in.h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int xx = ox * sw - pad_w + dx_k;
            if (xx < 0 || xx >= in.w) continue;
            dx[(c * in.h + y) * in.w + xx] += src[oy * out_w + ox];
          }
        }
      }
}

}  // namespace detail

template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  // Computes output shape and allocates parameters; called once.
  virtual Shape build(const Shape& in) = 0;
  virtual void init(Rng& rng) {}
  virtual void forward(const Mat<S>& x, Mat<S>& y, bool training) = 0;
  // dy -> dx using caches from the last training-mode forward.
  virtual void backward(const Mat<S>& dy, Mat<S>& dx) = 0;
  virtual std::vector<Param<S>*> params() { return {}; }
  virtual const LayerSpec& spec() const { return spec_; }

 protected:
  explicit Layer(const LayerSpec& spec) : spec_(spec) {}
  LayerSpec spec_;
};

template <typename S>
class ConvLayer final : public Layer<S> {
 public:
  explicit ConvLayer(const LayerSpec& spec) : Layer<S>(spec) {}

  Shape build(const Shape& in) override {
    in_ = in;
    kh_ = this->spec_.kernel;
    kw_ = in.w > 1 ? this->spec_.kernel : 1;
    sh_ = this->spec_.stride;
    sw_ = in.w > 1 ? this->spec_.stride : 1;
    if (kh_ < 1 || sh_ < 1) throw config_error("conv kernel/stride must be >= 1");
    if (this->spec_.padding == Padding::same) {
      out_ = Shape{this->spec_.channels, (in.h + sh_ - 1) / sh_,
                   (in.w + sw_ - 1) / sw_};
      pad_h_ = std::max(0, (out_.h - 1) * sh_ + kh_ - in.h) / 2;
      pad_w_ = std::max(0, (out_.w - 1) * sw_ + kw_ - in.w) / 2;
    } else {
      if (in.h < kh_ || in.w < kw_)
        throw config_error("conv kernel larger than its input");
      out_ = Shape{this->spec_.channels, (in.h - kh_) / sh_ + 1,
                   (in.w - kw_) / sw_ + 1};
      pad_h_ = pad_w_ = 0;
    }
    weight_.value.resize(out_.c, in.c * kh_ * kw_);
    weight_.grad.setZero(out_.c, in.c * kh_ * kw_);
    bias_.value.resize(1, out_.c);
    bias_.grad.setZero(1, out_.c);
    col_.resize(in.c * kh_ * kw_, out_.h * out_.w);
    return out_;
  }

  void init(Rng& rng) override {
    const double std = std::sqrt(2.0 / weight_.value.cols());
    for (Eigen::Index i = 0; i < weight_.value.rows(); ++i)
      for (Eigen::Index j = 0; j < weight_.value.cols(); ++j)
        weight_.value(i, j) = static_cast<S>(std * rng.gaussian());
    bias_.value.setZero();
  }

  void forward(const Mat<S>& x, Mat<S>& y, bool training) override {
    const int batch = static_cast<int>(x.rows());
    y.resize(batch, out_.size());
    if (training) x_cache_ = x;
    const int p = out_.h * out_.w;
    for (int b = 0; b < batch; ++b) {
      detail::im2col(x.row(b).data(), in_, kh_, kw_, sh_, sw_, pad_h_, pad_w_,
                     out_.h, out_.w, col_);
      Eigen::Map<Mat<S>> out_map(y.row(b).data(), out_.c, p);
      out_map.noalias() = weight_.value * col_;
      out_map.colwise() += bias_.value.row(0).transpose();
    }
  }

  void backward(const Mat<S>& dy, Mat<S>& dx) override {
    const int batch = static_cast<int>(dy.rows());
    const int p = out_.h * out_.w;
    dx.resize(batch, in_.size());
    Mat<S> dcol(in_.c * kh_ * kw_, p);
    for (int b = 0; b < batch; ++b) {
      detail::im2col(x_cache_.row(b).data(), in_, kh_, kw_, sh_, sw_, pad_h_,
                     pad_w_, out_.h, out_.w, col_);
      Eigen::Map<const Mat<S>> dy_map(dy.row(b).data(), out_.c, p);
      weight_.grad.noalias() += dy_map * col_.transpose();
      bias_.grad.row(0).transpose() += dy_map.rowwise().sum();
      dcol.noalias() = weight_.value.transpose() * dy_map;
      detail::col2im(dcol, in_, kh_, kw_, sh_, sw_, pad_h_, pad_w_, out_.h,
                     out_.w, dx.row(b).data());
    }
  }

  std::vector<Param<S>*> params() override { return {&weight_, &bias_}; }

 private:
  Shape in_, out_;
  int kh_ = 1, kw_ = 1, sh_ = 1, sw_ = 1, pad_h_ = 0, pad_w_ = 0;
  Param<S> weight_, bias_;
  Mat<S> col_;
  Mat<S> x_cache_;
};

template <typename S>
class ReluLayer final : public Layer<S> {
 public:
  explicit ReluLayer(const LayerSpec& spec) : Layer<S>(spec) {}
  Shape build(const Shape& in) override { return in; }

  void forward(const Mat<S>& x, Mat<S>& y, bool training) override {
    y = x.cwiseMax(S(0));
    if (training) y_cache_ = y;
  }

  void backward(const Mat<S>& dy, Mat<S>& dx) override {
    dx = ((y_cache_.array() > S(0)).template cast<S>() * dy.array()).matrix();
  }

 private:
  Mat<S> y_cache_;
};

template <typename S>
class AvgPoolLayer final : public Layer<S> {
 public:
  explicit AvgPoolLayer(const LayerSpec& spec) : Layer<S>(spec) {}

  Shape build(const Shape& in) override {
    in_ = in;
    ph_ = this->spec_.width;
    pw_ = in.w > 1 ? this->spec_.width : 1;
    if (ph_ < 1) throw config_error("pool width must be >= 1");
    out_ = Shape{in.c, in.h / ph_, in.w / pw_};
    if (out_.h < 1 || out_.w < 1)
      throw config_error("pool window larger than its input");
    return out_;
  }

  void forward(const Mat<S>& x, Mat<S>& y, bool) override {
    const int batch = static_cast<int>(x.rows());
    y.setZero(batch, out_.size());
    const S scale = S(1) / static_cast<S>(ph_ * pw_);
    for (int b = 0; b < batch; ++b) {
      const S* xp = x.row(b).data();
      S* yp = y.row(b).data();
      for (int c = 0; c < in_.c; ++c)
        for (int oy = 0; oy < out_.h; ++oy)
          for (int ox = 0; ox < out_.w; ++ox) {
            S acc = S(0);
            for (int dy = 0; dy < ph_; ++dy)
              for (int dx = 0; dx < pw_; ++dx)
                acc += xp[(c * in_.h + oy * ph_ + dy) * in_.w + ox * pw_ + dx];
            yp[(c * out_.h + oy) * out_.w + ox] = acc * scale;
          }
    }
  }

  void backward(const Mat<S>& dy, Mat<S>& dx) override {
    const int batch = static_cast<int>(dy.rows());
    dx.setZero(batch, in_.size());
    const S scale = S(1) / static_cast<S>(ph_ * pw_);
    for (int b = 0; b < batch; ++b) {
      const S* gp = dy.row(b).data();
      S* dp = dx.row(b).data();
      for (int c = 0; c < in_.c; ++c)
        for (int oy = 0; oy < out_.h; ++oy)
          for (int ox = 0; ox < out_.w; ++ox) {
            const S g = gp[(c * out_.h + oy) * out_.w + ox] * scale;
            for (int dy_k = 0; dy_k < ph_; ++dy_k)
              for (int dx_k = 0; dx_k < pw_; ++dx_k)
                dp[(c * in_.h + oy * ph_ + dy_k) * in_.w + ox * pw_ + dx_k] +=
                    g;
          }
    }
  }

 private:
  Shape in_, out_;
  int ph_ = 1, pw_ = 1;
};

template <typename S>
class FlattenLayer final : public Layer<S> {
 public:
  explicit FlattenLayer(const LayerSpec& spec) : Layer<S>(spec) {}
  Shape build(const Shape& in) override { return Shape{in.size(), 1, 1}; }
  void forward(const Mat<S>& x, Mat<S>& y, bool) override { y = x; }
  void backward(const Mat<S>& dy, Mat<S>& dx) override { dx = dy; }
};

template <typename S>
class DenseLayer final : public Layer<S> {
 public:
  explicit DenseLayer(const LayerSpec& spec) : Layer<S>(spec) {}

  Shape build(const Shape& in) override {
    in_size_ = in.size();
    if (this->spec_.units < 1) throw config_error("dense units must be >= 1");
    weight_.value.resize(this->spec_.units, in_size_);
    weight_.grad.setZero(this->spec_.units, in_size_);
    bias_.value.resize(1, this->spec_.units);
    bias_.grad.setZero(1, this->spec_.units);
    return Shape{this->spec_.units, 1, 1};
  }

  void init(Rng& rng) override {
    const double std = std::sqrt(2.0 / in_size_);
    for (Eigen::Index i = 0; i < weight_.value.rows(); ++i)
      for (Eigen::Index j = 0; j < weight_.value.cols(); ++j)
        weight_.value(i, j) = static_cast<S>(std * rng.gaussian());
    bias_.value.setZero();
  }

  void forward(const Mat<S>& x, Mat<S>& y, bool training) override {
    if (training) x_cache_ = x;
    y.noalias() = x * weight_.value.transpose();
    y.rowwise() += bias_.value.row(0);
  }

  void backward(const Mat<S>& dy, Mat<S>& dx) override {
    weight_.grad.noalias() += dy.transpose() * x_cache_;
    bias_.grad.row(0) += dy.colwise().sum();
    dx.noalias() = dy * weight_.value;
  }

  std::vector<Param<S>*> params() override { return {&weight_, &bias_}; }

 private:
  int in_size_ = 0;
  Param<S> weight_, bias_;
  Mat<S> x_cache_;
};

template <typename S>
inline Vec<S> normalize_output(const Vec<S>& raw) {
  const S norm = raw.norm();
  if (!(norm > S(1e-12)))
    throw numerical_error("degenerate network output with near-zero norm");
  return raw / norm;
}

// L = min_s (1/4) sum |c - s chat|^2 = (1 - |<c, chat>|)/2, in [0, 0.5].
template <typename S>
inline S sign_resolved_loss(const Vec<S>& c_true, const Vec<S>& c_pred) {
  if (c_true.size() != c_pred.size())
    throw invalid_input("loss operands differ in dimension");
  return (S(1) - std::abs(c_true.dot(c_pred))) / S(2);
}

// Batch loss with the gradient through normalization and the fixed-sign
// branch: chat = y/|y|, s = sign(<c,chat>), dL/dchat = -s c / 2,
// dL/dy = (I - chat chat^T) dL/dchat / |y|, averaged over the batch.
template <typename S>
struct BatchLoss {
  S mean = S(0);
  Vec<S> per_sample;
  Mat<S> d_raw;  // empty unless want_grad
};

template <typename S>
BatchLoss<S> sign_loss_batch(const Mat<S>& raw, const Mat<S>& targets,
                             bool want_grad) {
  if (raw.rows() != targets.rows() || raw.cols() != targets.cols())
    throw invalid_input("batch and targets differ in shape");
  const int batch = static_cast<int>(raw.rows());
  const int n = static_cast<int>(raw.cols());
  BatchLoss<S> out;
  out.per_sample.resize(batch);
  if (want_grad) out.d_raw.resize(batch, n);
  const S inv_batch = S(1) / static_cast<S>(batch);
  for (int b = 0; b < batch; ++b) {
    const S norm = raw.row(b).norm();
    if (!(norm > S(1e-12)))
      throw numerical_error("degenerate network output with near-zero norm");
    const Vec<S> chat = raw.row(b).transpose() / norm;
    const S dot = targets.row(b).dot(chat);
    const S sign = dot >= S(0) ? S(1) : S(-1);
    out.per_sample[b] = (S(1) - sign * dot) / S(2);
    if (want_grad) {
      const Vec<S> d_chat = -sign / S(2) * targets.row(b).transpose();
      out.d_raw.row(b) =
          (d_chat - chat * chat.dot(d_chat)).transpose() * (inv_batch / norm);
    }
  }
  out.mean = out.per_sample.sum() * inv_batch;
  return out;
}

template <typename S>
class Network {
 public:
  explicit Network(const NetworkConfig& cfg, std::uint64_t init_seed = 1)
      : config_(cfg) {
    if (cfg.layers.empty()) throw config_error("network needs layers");
    if (cfg.input.size() < 1) throw config_error("empty network input shape");
    Shape shape = cfg.input;
    for (const auto& spec : cfg.layers) {
      std::unique_ptr<Layer<S>> layer;
      switch (spec.kind) {
        case LayerKind::conv: layer = std::make_unique<ConvLayer<S>>(spec); break;
        case LayerKind::relu: layer = std::make_unique<ReluLayer<S>>(spec); break;
        case LayerKind::avgpool:
          layer = std::make_unique<AvgPoolLayer<S>>(spec);
          break;
        case LayerKind::flatten:
          layer = std::make_unique<FlattenLayer<S>>(spec);
          break;
        case LayerKind::dense: layer = std::make_unique<DenseLayer<S>>(spec); break;
      }
      shape = layer->build(shape);
      layers_.push_back(std::move(layer));
    }
    if (cfg.layers.back().kind != LayerKind::dense)
      throw config_error("final layer must be dense");
    out_dim_ = shape.size();
    Rng rng(init_seed);
    for (auto& layer : layers_) layer->init(rng);
  }

  // Layers are held by unique_ptr, so the network moves but never copies.
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  int input_size() const { return config_.input.size(); }
  int output_size() const { return out_dim_; }
  const NetworkConfig& config() const { return config_; }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> all;
    for (auto& layer : layers_)
      for (auto* p : layer->params()) all.push_back(p);
    return all;
  }

  long n_params() {
    long total = 0;
    for (auto* p : params()) total += static_cast<long>(p->value.size());
    return total;
  }

  void zero_grad() {
    for (auto* p : params()) p->grad.setZero();
  }

  // Raw (unnormalized) outputs, batch rows in = batch rows out.
  Mat<S> forward(const Mat<S>& x, bool training = false) {
    if (x.cols() != input_size())
      throw invalid_input("input size does not match the network");
    Mat<S> cur = x;
    Mat<S> next;
    for (auto& layer : layers_) {
      layer->forward(cur, next, training);
      cur.swap(next);
    }
    return cur;
  }

  // Backpropagates d(raw) from the loss; parameter grads accumulate.
  // Returns the gradient with respect to the input batch.
  Mat<S> backward(const Mat<S>& d_raw) {
    Mat<S> cur = d_raw;
    Mat<S> prev;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      (*it)->backward(cur, prev);
      cur.swap(prev);
    }
    return cur;
  }

  // Normalized prediction in the canonical sign convention.
  Vec<S> predict(const Vec<S>& input) {
    Mat<S> x(1, input.size());
    x.row(0) = input.transpose();
    Vec<S> raw = forward(x).row(0).transpose();
    Vec<S> c = normalize_output(raw);
    int arg = 0;
    c.cwiseAbs().maxCoeff(&arg);
    if (c[arg] < S(0)) c = -c;
    return c;
  }

  std::vector<Mat<S>> get_parameters() {
    std::vector<Mat<S>> values;
    for (auto* p : params()) values.push_back(p->value);
    return values;
  }

  void set_parameters(const std::vector<Mat<S>>& values) {
    auto all = params();
    if (values.size() != all.size())
      throw invalid_input("parameter list does not match the network");
    for (size_t i = 0; i < all.size(); ++i) {
      if (values[i].rows() != all[i]->value.rows() ||
          values[i].cols() != all[i]->value.cols())
        throw invalid_input("parameter tensor shape mismatch");
      all[i]->value = values[i];
    }
  }

 private:
  NetworkConfig config_;
  std::vector<std::unique_ptr<Layer<S>>> layers_;
  int out_dim_ = 0;
};

template <typename S>
class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr <= 0.0) throw config_error("learning rate must be positive");
  }

  int steps() const { return t_; }

  void step(const std::vector<Param<S>*>& params) {
    for (auto* p : params)
      if (!p->grad.allFinite())
        throw numerical_error("non-finite gradient; optimizer step aborted");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(Mat<S>::Zero(p->grad.rows(), p->grad.cols()));
        v_.emplace_back(Mat<S>::Zero(p->grad.rows(), p->grad.cols()));
      }
    }
    if (m_.size() != params.size())
      throw invalid_input("optimizer state does not match the parameter list");
    ++t_;
    const S bc1 = S(1) - static_cast<S>(std::pow(beta1_, t_));
    const S bc2 = S(1) - static_cast<S>(std::pow(beta2_, t_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& g = params[i]->grad;
      m_[i] = static_cast<S>(beta1_) * m_[i] + (S(1) - static_cast<S>(beta1_)) * g;
      v_[i] = static_cast<S>(beta2_) * v_[i] +
              (S(1) - static_cast<S>(beta2_)) * g.cwiseProduct(g);
      params[i]->value.array() -=
          static_cast<S>(lr_) * (m_[i] / bc1).array() /
          ((v_[i] / bc2).array().sqrt() + static_cast<S>(eps_));
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t shuffle_seed = 0;
  double noise_sigma = 0.0;  // per-batch augmentation, off when 0
  bool verbose = false;      // one line per epoch on stdout
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean of minibatch losses per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;             // epoch of the checkpointed parameters
  double best_val = std::numeric_limits<double>::infinity();
};

struct EvalResult {
  double mean = 0.0;
  Eigen::VectorXd per_sample;
};

template <typename S>
EvalResult evaluate(Network<S>& net, const DataSet& ds, int batch_size = 512) {
  if (ds.n_tip() != net.input_size() || ds.n_sites() != net.output_size())
    throw invalid_input("dataset does not match the network dimensions");
  EvalResult result;
  result.per_sample.resize(ds.n_samples());
  for (int start = 0; start < ds.n_samples(); start += batch_size) {
    const int count = std::min(batch_size, ds.n_samples() - start);
    const Mat<S> x = ds.inputs.middleRows(start, count).cast<S>();
    const Mat<S> t = ds.targets.middleRows(start, count).cast<S>();
    const auto loss = sign_loss_batch<S>(net.forward(x), t, false);
    for (int i = 0; i < count; ++i)
      result.per_sample[start + i] = static_cast<double>(loss.per_sample[i]);
  }
  result.mean = result.per_sample.mean();
  return result;
}

template <typename S>
TrainHistory train(Network<S>& net, const DataSet& train_set,
                   const DataSet& val_set, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw config_error("epochs must be >= 1");
  if (cfg.batch_size < 1) throw config_error("batch_size must be >= 1");
  if (cfg.noise_sigma < 0.0) throw config_error("noise_sigma must be >= 0");
  if (train_set.n_tip() != net.input_size() ||
      train_set.n_sites() != net.output_size())
    throw invalid_input("training set does not match the network dimensions");

  const int n = train_set.n_samples();
  Adam<S> opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  const auto params = net.params();

  TrainHistory history;
  std::vector<Mat<S>> best_params = net.get_parameters();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  Mat<S> x, t;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.shuffle_seed, epoch));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i],
                order[shuffle_rng.below(static_cast<std::uint64_t>(i) + 1)]);
    Rng noise_rng(derive_seed(cfg.shuffle_seed ^ 0x6e6f697365ull, epoch));

    double epoch_loss = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      x.resize(count, train_set.n_tip());
      t.resize(count, train_set.n_sites());
      for (int i = 0; i < count; ++i) {
        x.row(i) = train_set.inputs.row(order[start + i]).cast<S>();
        t.row(i) = train_set.targets.row(order[start + i]).cast<S>();
      }
      if (cfg.noise_sigma > 0.0) {
        for (int i = 0; i < count; ++i) {
          const S std = static_cast<S>(cfg.noise_sigma) * x.row(i).maxCoeff();
          for (int j = 0; j < x.cols(); ++j)
            x(i, j) += std * static_cast<S>(noise_rng.gaussian());
          const S peak = x.row(i).maxCoeff();
          if (peak > S(0)) x.row(i) /= peak;
        }
      }

      net.zero_grad();
      const Mat<S> raw = net.forward(x, true);
      const auto loss = sign_loss_batch<S>(raw, t, true);
      if (!std::isfinite(static_cast<double>(loss.mean))) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch "
            << n_batches;
        throw numerical_error(msg.str());
      }
      net.backward(loss.d_raw);
      opt.step(params);
      epoch_loss += static_cast<double>(loss.mean);
      ++n_batches;
    }
    history.train_loss.push_back(epoch_loss / n_batches);

    const double val = evaluate(net, val_set).mean;
    history.val_loss.push_back(val);
    if (val < history.best_val) {
      history.best_val = val;
      history.best_epoch = epoch;
      best_params = net.get_parameters();
    }
    if (cfg.verbose)
      std::printf("epoch %4d  train %.6f  val %.6f\n", epoch,
                  history.train_loss.back(), val);
  }
  net.set_parameters(best_params);
  return history;
}

}  // namespace nn
}  // namespace excirec
