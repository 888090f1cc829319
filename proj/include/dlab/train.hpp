#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "dlab/adam.hpp"
#include "dlab/dataset.hpp"
#include "dlab/objectives.hpp"
#include "dlab/rng.hpp"
#include "dlab/vae.hpp"

namespace dlab {

struct TrainConfig {
  long steps = 30000;
  int batch = 64;
  double lr = 5e-4;
  AdamConfig adam;
  long eval_interval = 0;         // > 0: periodic deterministic full-data eval
  long trace_stride = 1;          // record batch stats every k-th step
  std::string label_mix_target;   // non-empty: mixed-label decoder on this factor

  void validate() const;
};

/// Dataset staged for training: images as doubles (one column per image)
/// plus the mixed one-hot labels when a target factor is configured.
struct BatchSource {
  Eigen::MatrixXd images;  // input_dim x N
  Eigen::MatrixXd labels;  // label_width x N (0 rows when unused)

  static BatchSource from_dataset(const ImageDataset& data, const std::string& label_mix_target);
  Eigen::Index count() const { return images.cols(); }
  int label_width() const { return static_cast<int>(labels.rows()); }
};

struct BatchLossStats {
  double loss = 0.0;
  double recon_ll = 0.0;
  double kl_total = 0.0;
  Eigen::VectorXd kl_per_dim;    // batch means
  Eigen::VectorXd kl_per_group;  // filled by the grouped-encoder path
};

struct EvalStats {
  double mean_kl = 0.0;
  double mean_recon_ll = 0.0;  // at z = posterior mean
  Eigen::VectorXd kl_per_dim;
};

struct TrainingTrace {
  std::vector<long> steps;
  std::vector<double> loss, recon_ll, kl_total;
  Eigen::MatrixXd kl_per_dim;    // latent_dim x recorded steps
  Eigen::MatrixXd kl_per_group;  // groups x recorded steps (grouped path only)

  std::vector<long> eval_steps;
  std::vector<double> eval_recon_loss, eval_kl;

  double final_kl = 0.0;
  double final_recon_ll = 0.0;
  Eigen::VectorXd final_kl_per_dim;
};

// Shared Bernoulli-likelihood pieces (numerically stable logit forms).
double bernoulli_recon_ll_mean(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x);
Eigen::MatrixXd bernoulli_recon_grad(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x);

// Shared Gaussian-head pieces. The plain and grouped trainers must run the
// exact same expressions so that a single-group FVAE is bit-identical to a
// beta-VAE at equal seed.
Eigen::MatrixXd reparam_forward(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                                const Eigen::MatrixXd& eps);
Eigen::VectorXd kl_per_dim_batch_mean(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var);
Eigen::VectorXd kl_per_dim_batch_sum(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var);
Eigen::MatrixXd reparam_kl_backward(const Eigen::MatrixXd& dz, const Eigen::MatrixXd& mu,
                                    const Eigen::MatrixXd& log_var, const Eigen::MatrixXd& eps,
                                    double kl_weight_over_batch);

/// Forward/backward of the configured objective on one batch. Pure in the
/// model; parameter gradients are accumulated when buffers are given.
BatchLossStats vae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& noise, const Eigen::MatrixXd& labels,
                              const ObjectiveConfig& objective, long step,
                              std::vector<Eigen::MatrixXd>* enc_grads,
                              std::vector<Eigen::MatrixXd>* dec_grads);

/// Deterministic full-dataset metrics: KL from the posterior, reconstruction
/// at z = posterior mean.
EvalStats evaluate_vae(const VaeModel& model, const BatchSource& data);

/// Owns one model's optimization; draws batches and reparameterization noise
/// from counter-based streams split off (seed, purpose).
class VaeTrainer {
 public:
  VaeTrainer(VaeModel& model, const ImageDataset& data, const TrainConfig& cfg,
             std::uint64_t seed);

  /// One gradient step under the given objective. Throws TrainingError on a
  /// non-finite loss or gradient.
  BatchLossStats step(const ObjectiveConfig& objective, long step_index);

  EvalStats evaluate() const;
  const BatchSource& data() const { return data_; }
  VaeModel& model() { return model_; }

 private:
  VaeModel& model_;
  BatchSource data_;
  TrainConfig cfg_;
  RandomStream batch_rng_, noise_rng_;
  AdamState enc_state_, dec_state_;
  std::vector<Eigen::MatrixXd> enc_grads_, dec_grads_;
};

TrainingTrace train_vae(VaeModel& model, const ImageDataset& data,
                        const ObjectiveConfig& objective, const TrainConfig& cfg,
                        std::uint64_t seed);

}  // namespace dlab
