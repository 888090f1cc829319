#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "dlab/rng.hpp"

namespace dlab {

enum class Activation { kRelu, kTanh };

// One step of a fixed layer vocabulary. Batches are column-major: one column
// per item, rows are the flattened feature vector (channel-major for conv).
struct LayerDesc {
  enum class Kind { kDense, kRelu, kTanh, kConv, kDeconv };
  Kind kind = Kind::kDense;
  int in = 0;   // input rows
  int out = 0;  // output rows
  // conv / deconv geometry (kConv maps in_h*in_w -> out_h*out_w, kDeconv the reverse)
  int in_c = 0, out_c = 0;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  int ksize = 0, stride = 0, pad = 0;

  static LayerDesc dense(int in, int out);
  static LayerDesc activation(Activation act, int dim);
  static LayerDesc conv(int in_c, int in_h, int in_w, int out_c, int ksize, int stride, int pad);
  static LayerDesc deconv(int in_c, int in_h, int in_w, int out_c, int ksize, int stride, int pad);
};

/// Per-call activation record; activations[i] is the input of layer i,
/// activations back() the network output. Owned by the caller so that
/// forward/backward on a frozen net stay const and thread-safe.
struct NetTrace {
  std::vector<Eigen::MatrixXd> activations;
};

/// Sequential feed-forward network over the fixed layer vocabulary, with
/// reverse-mode gradients for every parameter after one backward pass.
class FeedForwardNet {
 public:
  FeedForwardNet() = default;
  explicit FeedForwardNet(std::vector<LayerDesc> layers);

  /// He-style uniform init scaled by fan-in; biases zero. Draw order is
  /// fixed (blocks in order, column-major within a block).
  void init_params(RandomStream& rng);

  int input_dim() const;
  int output_dim() const;

  const std::vector<LayerDesc>& layers() const { return layers_; }
  std::vector<Eigen::MatrixXd>& blocks() { return blocks_; }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }
  const std::vector<std::string>& block_names() const { return block_names_; }
  std::size_t param_count() const;

  /// Zero-filled gradient buffers matching blocks().
  std::vector<Eigen::MatrixXd> make_grad_buffers() const;

  /// x: (input_dim x batch). Returns the output and, when trace is given,
  /// records activations for backward.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, NetTrace* trace) const;

  /// dy: gradient at the output. Accumulates into grads (layout of blocks())
  /// and returns the gradient at the input.
  Eigen::MatrixXd backward(const NetTrace& trace, const Eigen::MatrixXd& dy,
                           std::vector<Eigen::MatrixXd>& grads) const;

 private:
  std::vector<LayerDesc> layers_;
  std::vector<Eigen::MatrixXd> blocks_;       // W, b per parametric layer
  std::vector<std::string> block_names_;
  std::vector<int> first_block_;              // per layer: index into blocks_, -1 if none
};

/// Layer stacks for the two architecture tiers. Conv nets require input
/// height/width divisible by 16 (four stride-2 halvings).
std::vector<LayerDesc> mlp_stack(int input_dim, const std::vector<int>& hidden, int output_dim,
                                 Activation act);
std::vector<LayerDesc> conv4_encoder_stack(int in_h, int in_w, int output_dim, Activation act);
std::vector<LayerDesc> conv4_decoder_stack(int input_dim, int out_h, int out_w, Activation act);

}  // namespace dlab
