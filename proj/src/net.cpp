#include "dlab/net.hpp"

#include <cmath>

#include "dlab/errors.hpp"

namespace dlab {

namespace {

// Flattened feature vectors are channel-major; map them (c x pixels) row-major.
using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

int conv_out(int in, int ksize, int stride, int pad) {
  return (in + 2 * pad - ksize) / stride + 1;
}

// im2col over geometry (c, h, w) -> columns (c*k*k x out_h*out_w).
void im2col(const double* img, int c, int h, int w, int ksize, int stride, int pad, int out_h,
            int out_w, Eigen::MatrixXd& cols) {
  cols.setZero();
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = img + static_cast<std::size_t>(ch) * h * w;
    for (int ki = 0; ki < ksize; ++ki) {
      for (int kj = 0; kj < ksize; ++kj) {
        int row = (ch * ksize + ki) * ksize + kj;
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            int ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            cols(row, oy * out_w + ox) = plane[iy * w + ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the (c, h, w) image.
void col2im_add(const Eigen::MatrixXd& cols, int c, int h, int w, int ksize, int stride, int pad,
                int out_h, int out_w, double* img) {
  for (int ch = 0; ch < c; ++ch) {
    double* plane = img + static_cast<std::size_t>(ch) * h * w;
    for (int ki = 0; ki < ksize; ++ki) {
      for (int kj = 0; kj < ksize; ++kj) {
        int row = (ch * ksize + ki) * ksize + kj;
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            int ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            plane[iy * w + ix] += cols(row, oy * out_w + ox);
          }
        }
      }
    }
  }
}

}  // namespace

LayerDesc LayerDesc::dense(int in, int out) {
  LayerDesc d;
  d.kind = Kind::kDense;
  d.in = in;
  d.out = out;
  return d;
}

LayerDesc LayerDesc::activation(Activation act, int dim) {
  LayerDesc d;
  d.kind = act == Activation::kRelu ? Kind::kRelu : Kind::kTanh;
  d.in = d.out = dim;
  return d;
}

LayerDesc LayerDesc::conv(int in_c, int in_h, int in_w, int out_c, int ksize, int stride,
                          int pad) {
  LayerDesc d;
  d.kind = Kind::kConv;
  d.in_c = in_c;
  d.out_c = out_c;
  d.in_h = in_h;
  d.in_w = in_w;
  d.out_h = conv_out(in_h, ksize, stride, pad);
  d.out_w = conv_out(in_w, ksize, stride, pad);
  d.ksize = ksize;
  d.stride = stride;
  d.pad = pad;
  d.in = in_c * in_h * in_w;
  d.out = d.out_c * d.out_h * d.out_w;
  return d;
}

LayerDesc LayerDesc::deconv(int in_c, int in_h, int in_w, int out_c, int ksize, int stride,
                            int pad) {
  LayerDesc d;
  d.kind = Kind::kDeconv;
  d.in_c = in_c;
  d.out_c = out_c;
  d.in_h = in_h;
  d.in_w = in_w;
  d.out_h = (in_h - 1) * stride - 2 * pad + ksize;
  d.out_w = (in_w - 1) * stride - 2 * pad + ksize;
  d.ksize = ksize;
  d.stride = stride;
  d.pad = pad;
  d.in = in_c * in_h * in_w;
  d.out = d.out_c * d.out_h * d.out_w;
  return d;
}

FeedForwardNet::FeedForwardNet(std::vector<LayerDesc> layers) : layers_(std::move(layers)) {
  int prev = -1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerDesc& l = layers_[i];
    if (prev >= 0 && l.in != prev) {
      throw ConfigError("layer " + std::to_string(i) + " input " + std::to_string(l.in) +
                        " does not match previous output " + std::to_string(prev));
    }
    prev = l.out;
    first_block_.push_back(static_cast<int>(blocks_.size()));
    std::string tag = "layer" + std::to_string(i);
    switch (l.kind) {
      case LayerDesc::Kind::kDense:
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.out, l.in));
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.out, 1));
        block_names_.push_back(tag + ".dense.W");
        block_names_.push_back(tag + ".dense.b");
        break;
      case LayerDesc::Kind::kConv:
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.out_c, l.in_c * l.ksize * l.ksize));
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.out_c, 1));
        block_names_.push_back(tag + ".conv.W");
        block_names_.push_back(tag + ".conv.b");
        break;
      case LayerDesc::Kind::kDeconv:
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.in_c, l.out_c * l.ksize * l.ksize));
        blocks_.emplace_back(Eigen::MatrixXd::Zero(l.out_c, 1));
        block_names_.push_back(tag + ".deconv.W");
        block_names_.push_back(tag + ".deconv.b");
        break;
      default:
        first_block_.back() = -1;
        break;
    }
  }
}

void FeedForwardNet::init_params(RandomStream& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerDesc& l = layers_[i];
    if (first_block_[i] < 0) continue;
    Eigen::MatrixXd& w = blocks_[first_block_[i]];
    Eigen::MatrixXd& b = blocks_[first_block_[i] + 1];
    int fan_in = l.kind == LayerDesc::Kind::kDense ? l.in : l.in_c * l.ksize * l.ksize;
    double bound = std::sqrt(6.0 / fan_in);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      w.data()[k] = rng.uniform(-bound, bound);
    }
    b.setZero();
  }
}

int FeedForwardNet::input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
int FeedForwardNet::output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }

std::size_t FeedForwardNet::param_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.size());
  return n;
}

std::vector<Eigen::MatrixXd> FeedForwardNet::make_grad_buffers() const {
  std::vector<Eigen::MatrixXd> g;
  g.reserve(blocks_.size());
  for (const auto& b : blocks_) g.emplace_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
  return g;
}

Eigen::MatrixXd FeedForwardNet::forward(const Eigen::MatrixXd& x, NetTrace* trace) const {
  if (x.rows() != input_dim()) {
    throw ConfigError("forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                      std::to_string(input_dim()));
  }
  if (trace) {
    trace->activations.clear();
    trace->activations.reserve(layers_.size() + 1);
    trace->activations.push_back(x);
  }
  Eigen::MatrixXd cur = x;
  Eigen::MatrixXd cols;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerDesc& l = layers_[i];
    Eigen::MatrixXd next;
    switch (l.kind) {
      case LayerDesc::Kind::kDense: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        const Eigen::MatrixXd& b = blocks_[first_block_[i] + 1];
        next.noalias() = w * cur;
        next.colwise() += b.col(0);
        break;
      }
      case LayerDesc::Kind::kRelu:
        next = cur.cwiseMax(0.0);
        break;
      case LayerDesc::Kind::kTanh:
        next = cur.array().tanh();
        break;
      case LayerDesc::Kind::kConv: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        const Eigen::MatrixXd& b = blocks_[first_block_[i] + 1];
        next.resize(l.out, cur.cols());
        cols.resize(l.in_c * l.ksize * l.ksize, l.out_h * l.out_w);
        for (Eigen::Index item = 0; item < cur.cols(); ++item) {
          im2col(cur.col(item).data(), l.in_c, l.in_h, l.in_w, l.ksize, l.stride, l.pad, l.out_h,
                 l.out_w, cols);
          RowMajorMap y(next.col(item).data(), l.out_c, l.out_h * l.out_w);
          y.noalias() = w * cols;
          y.colwise() += b.col(0);
        }
        break;
      }
      case LayerDesc::Kind::kDeconv: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        const Eigen::MatrixXd& b = blocks_[first_block_[i] + 1];
        next.setZero(l.out, cur.cols());
        cols.resize(l.out_c * l.ksize * l.ksize, l.in_h * l.in_w);
        for (Eigen::Index item = 0; item < cur.cols(); ++item) {
          ConstRowMajorMap xm(cur.col(item).data(), l.in_c, l.in_h * l.in_w);
          cols.noalias() = w.transpose() * xm;
          col2im_add(cols, l.out_c, l.out_h, l.out_w, l.ksize, l.stride, l.pad, l.in_h, l.in_w,
                     next.col(item).data());
          RowMajorMap y(next.col(item).data(), l.out_c, l.out_h * l.out_w);
          y.colwise() += b.col(0);
        }
        break;
      }
    }
    cur = std::move(next);
    if (trace) trace->activations.push_back(cur);
  }
  return cur;
}

Eigen::MatrixXd FeedForwardNet::backward(const NetTrace& trace, const Eigen::MatrixXd& dy,
                                         std::vector<Eigen::MatrixXd>& grads) const {
  if (trace.activations.size() != layers_.size() + 1) {
    throw ConfigError("backward: trace does not match network (missing forward?)");
  }
  if (grads.size() != blocks_.size()) throw ConfigError("backward: grad buffer layout mismatch");

  Eigen::MatrixXd cur = dy;
  Eigen::MatrixXd cols;
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
    const LayerDesc& l = layers_[i];
    const Eigen::MatrixXd& input = trace.activations[i];
    const Eigen::MatrixXd& output = trace.activations[i + 1];
    Eigen::MatrixXd prev;
    switch (l.kind) {
      case LayerDesc::Kind::kDense: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        grads[first_block_[i]].noalias() += cur * input.transpose();
        grads[first_block_[i] + 1].col(0) += cur.rowwise().sum();
        prev.noalias() = w.transpose() * cur;
        break;
      }
      case LayerDesc::Kind::kRelu:
        prev = ((input.array() > 0.0).cast<double>() * cur.array()).matrix();
        break;
      case LayerDesc::Kind::kTanh:
        prev = (cur.array() * (1.0 - output.array().square())).matrix();
        break;
      case LayerDesc::Kind::kConv: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        prev.setZero(l.in, cur.cols());
        cols.resize(l.in_c * l.ksize * l.ksize, l.out_h * l.out_w);
        for (Eigen::Index item = 0; item < cur.cols(); ++item) {
          ConstRowMajorMap dym(cur.col(item).data(), l.out_c, l.out_h * l.out_w);
          im2col(input.col(item).data(), l.in_c, l.in_h, l.in_w, l.ksize, l.stride, l.pad, l.out_h,
                 l.out_w, cols);
          grads[first_block_[i]].noalias() += dym * cols.transpose();
          grads[first_block_[i] + 1].col(0) += dym.rowwise().sum();
          cols.noalias() = w.transpose() * dym;
          col2im_add(cols, l.in_c, l.in_h, l.in_w, l.ksize, l.stride, l.pad, l.out_h, l.out_w,
                     prev.col(item).data());
        }
        break;
      }
      case LayerDesc::Kind::kDeconv: {
        const Eigen::MatrixXd& w = blocks_[first_block_[i]];
        prev.resize(l.in, cur.cols());
        cols.resize(l.out_c * l.ksize * l.ksize, l.in_h * l.in_w);
        for (Eigen::Index item = 0; item < cur.cols(); ++item) {
          ConstRowMajorMap dym(cur.col(item).data(), l.out_c, l.out_h * l.out_w);
          ConstRowMajorMap xm(input.col(item).data(), l.in_c, l.in_h * l.in_w);
          im2col(cur.col(item).data(), l.out_c, l.out_h, l.out_w, l.ksize, l.stride, l.pad, l.in_h,
                 l.in_w, cols);
          grads[first_block_[i]].noalias() += xm * cols.transpose();
          grads[first_block_[i] + 1].col(0) += dym.rowwise().sum();
          RowMajorMap pm(prev.col(item).data(), l.in_c, l.in_h * l.in_w);
          pm.noalias() = w * cols;
        }
        break;
      }
    }
    cur = std::move(prev);
  }
  return cur;
}

std::vector<LayerDesc> mlp_stack(int input_dim, const std::vector<int>& hidden, int output_dim,
                                 Activation act) {
  std::vector<LayerDesc> layers;
  int prev = input_dim;
  for (int h : hidden) {
    layers.push_back(LayerDesc::dense(prev, h));
    layers.push_back(LayerDesc::activation(act, h));
    prev = h;
  }
  layers.push_back(LayerDesc::dense(prev, output_dim));
  return layers;
}

std::vector<LayerDesc> conv4_encoder_stack(int in_h, int in_w, int output_dim, Activation act) {
  if (in_h % 16 != 0 || in_w % 16 != 0) {
    throw ConfigError("conv4 needs input height/width divisible by 16");
  }
  std::vector<LayerDesc> layers;
  int c = 1, h = in_h, w = in_w;
  for (int i = 0; i < 4; ++i) {
    layers.push_back(LayerDesc::conv(c, h, w, 32, 4, 2, 1));
    layers.push_back(LayerDesc::activation(act, layers.back().out));
    c = 32;
    h /= 2;
    w /= 2;
  }
  int flat = 32 * h * w;
  layers.push_back(LayerDesc::dense(flat, 256));
  layers.push_back(LayerDesc::activation(act, 256));
  layers.push_back(LayerDesc::dense(256, 256));
  layers.push_back(LayerDesc::activation(act, 256));
  layers.push_back(LayerDesc::dense(256, output_dim));
  return layers;
}

std::vector<LayerDesc> conv4_decoder_stack(int input_dim, int out_h, int out_w, Activation act) {
  if (out_h % 16 != 0 || out_w % 16 != 0) {
    throw ConfigError("conv4 needs output height/width divisible by 16");
  }
  int h = out_h / 16, w = out_w / 16;
  int flat = 32 * h * w;
  std::vector<LayerDesc> layers;
  layers.push_back(LayerDesc::dense(input_dim, 256));
  layers.push_back(LayerDesc::activation(act, 256));
  layers.push_back(LayerDesc::dense(256, 256));
  layers.push_back(LayerDesc::activation(act, 256));
  layers.push_back(LayerDesc::dense(256, flat));
  layers.push_back(LayerDesc::activation(act, flat));
  for (int i = 0; i < 4; ++i) {
    int out_c = i == 3 ? 1 : 32;
    layers.push_back(LayerDesc::deconv(32, h, w, out_c, 4, 2, 1));
    if (i != 3) {
      layers.push_back(LayerDesc::activation(act, layers.back().out));
      h *= 2;
      w *= 2;
    }
  }
  return layers;
}

}  // namespace dlab
