#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dlab/net.hpp"
#include "dlab/rng.hpp"

namespace dlab {

enum class Backbone { kMlp, kConv4 };

struct ArchitectureConfig {
  int input_h = 64;
  int input_w = 64;
  std::vector<int> encoder_widths = {1200};  // mlp tier; conv4 ignores widths
  std::vector<int> decoder_widths = {1200};
  int latent_dim = 10;
  Activation nonlinearity = Activation::kRelu;
  Backbone backbone = Backbone::kMlp;

  int input_dim() const { return input_h * input_w; }
  void validate() const;
};

/// Diagonal Gaussian over the latent code; variance stored as log sigma^2.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;
};

/// z = mu + sigma (.) noise
Eigen::VectorXd reparameterize(const GaussianPosterior& post, const Eigen::VectorXd& noise);

/// sum_i [x_i log p_i + (1 - x_i) log(1 - p_i)], in nats. Requires p in (0,1).
double recon_log_likelihood(std::span<const double> x, const Eigen::VectorXd& p);

/// Per-dimension KL(q || N(0, I)) and its total, in nats.
std::pair<Eigen::VectorXd, double> kl_divergence(const GaussianPosterior& post);

/// Encoder/decoder pair with a Gaussian posterior head and Bernoulli pixel
/// likelihood. The decoder may take extra one-hot label inputs appended to z.
struct VaeModel {
  ArchitectureConfig arch;
  int label_width = 0;
  FeedForwardNet encoder;  // input_dim -> 2 * latent_dim
  FeedForwardNet decoder;  // latent_dim + label_width -> input_dim (logits)

  static VaeModel create(const ArchitectureConfig& arch, int label_width, RandomStream& init);

  GaussianPosterior encode(std::span<const double> image) const;
  /// Bernoulli means in (0, 1).
  Eigen::VectorXd decode(const Eigen::VectorXd& z, std::span<const double> labels = {}) const;
};

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& logits);

// VCKP checkpoint container: magic, version, phase index, model-spec text,
// then parameter blocks as f64 arrays with declared shapes. Round-trips are
// bit-exact.
struct Checkpoint {
  std::uint32_t phase_index = 0;
  std::string model_spec;
  std::vector<std::string> block_names;
  std::vector<Eigen::MatrixXd> blocks;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string arch_to_spec(const ArchitectureConfig& arch);
ArchitectureConfig arch_from_spec(const std::string& text);

void save_vae(const std::filesystem::path& path, const VaeModel& model);
VaeModel load_vae(const std::filesystem::path& path);

}  // namespace dlab
