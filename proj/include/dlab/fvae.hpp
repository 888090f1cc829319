#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dlab/dataset.hpp"
#include "dlab/train.hpp"
#include "dlab/vae.hpp"

namespace dlab {

/// One-hot widths of every factor except the target action.
int mixed_label_width(const FactorSpec& spec, std::string_view target_factor);

/// Concatenated one-hot blocks in factor order, target factor omitted.
Eigen::VectorXd mix_labels(const FactorSpec& spec, std::span<const std::uint32_t> label,
                           std::string_view target_factor);

/// Grouped sub-encoders feeding one shared decoder. Group g owns d_g latent
/// dimensions; the decoder input is the concatenation of all group codes
/// (plus one-hot labels in the mixed-label variant).
struct FvaeModel {
  ArchitectureConfig arch;  // per-group encoder tier; arch.latent_dim is ignored
  std::vector<int> group_dims;
  int label_width = 0;
  std::vector<FeedForwardNet> group_encoders;  // input_dim -> 2 * d_g
  FeedForwardNet decoder;                      // sum d_g + label_width -> input_dim

  static FvaeModel create(const ArchitectureConfig& arch, const std::vector<int>& group_dims,
                          int label_width, RandomStream& init);

  int group_count() const { return static_cast<int>(group_dims.size()); }
  int total_latent() const;
  int group_offset(int g) const;  // row offset of group g's code block

  std::vector<GaussianPosterior> encode_groups(std::span<const double> image) const;
  Eigen::VectorXd decode(const Eigen::VectorXd& z_cat, std::span<const double> labels = {}) const;
};

/// Per-phase training setting. active_group is 1-based: groups above it are
/// frozen (never evaluated) and replaced by prior noise in the decoder input.
struct Phase {
  int active_group = 1;
  double beta = 1.0;
  std::vector<double> encoder_lr;  // one per group; 0 freezes bit-exactly
  double decoder_lr = 5e-4;
  long steps = 1;
};

struct PhaseSchedule {
  std::vector<Phase> phases;

  void validate(int group_count) const;

  /// Appendix-table defaults: per-phase beta {100, 40, 4}, active rate 5e-4,
  /// learned groups reduced to 5e-5, future groups frozen.
  static PhaseSchedule staged_defaults(int group_count, std::vector<double> betas,
                                       long steps_per_phase, double lr_active = 5e-4,
                                       double lr_learned = 5e-5);
};

struct FvaeForwardResult {
  Eigen::VectorXd pixel_means;
  std::vector<GaussianPosterior> posteriors;  // one per trained group (g <= phase)
  Eigen::VectorXd code;                       // full decoder code input
};

/// Single-image forward at phase p: groups g <= p contribute reparameterized
/// codes, groups g > p fresh standard-normal noise (no encoder evaluation).
FvaeForwardResult fvae_forward(const FvaeModel& model, std::span<const double> image, int phase,
                               RandomStream& noise, std::span<const double> labels = {});

/// -recon_ll + beta * sum of the trained groups' KL.
double fvae_loss(double recon_ll, std::span<const double> group_kls, int phase, double beta);

/// Batched forward/backward at phase `active`. Rows of `noise` belonging to
/// trained groups act as reparameterization noise; rows of frozen groups are
/// used directly as prior samples. Gradients accumulate when buffers given.
BatchLossStats fvae_batch_loss(const FvaeModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& noise, const Eigen::MatrixXd& labels,
                               int active, double beta,
                               std::vector<std::vector<Eigen::MatrixXd>>* group_grads,
                               std::vector<Eigen::MatrixXd>* dec_grads);

/// Deterministic full-dataset metrics with all groups encoding at z = mean.
EvalStats evaluate_fvae(const FvaeModel& model, const BatchSource& data);

class FvaeTrainer {
 public:
  FvaeTrainer(FvaeModel& model, const ImageDataset& data, const TrainConfig& cfg,
              std::uint64_t seed);

  BatchLossStats step(const Phase& phase, long step_index);
  EvalStats evaluate() const;
  FvaeModel& model() { return model_; }
  const BatchSource& data() const { return data_; }

  /// Gradient buffers from the last step (no-leak checks).
  const std::vector<Eigen::MatrixXd>& group_grads(int g) const { return group_grads_[g]; }

 private:
  FvaeModel& model_;
  BatchSource data_;
  TrainConfig cfg_;
  RandomStream batch_rng_, noise_rng_;
  std::vector<AdamState> group_states_;
  AdamState dec_state_;
  std::vector<std::vector<Eigen::MatrixXd>> group_grads_;
  std::vector<Eigen::MatrixXd> dec_grads_;
};

/// Runs the schedule phase by phase; returns one trace per phase. The trace's
/// kl_per_group rows follow model group order.
std::vector<TrainingTrace> train_fvae(FvaeModel& model, const ImageDataset& data,
                                      const PhaseSchedule& schedule, const TrainConfig& cfg,
                                      std::uint64_t seed);

void save_fvae(const std::filesystem::path& path, const FvaeModel& model,
               std::uint32_t phase_index);
FvaeModel load_fvae(const std::filesystem::path& path, std::uint32_t* phase_index = nullptr);

}  // namespace dlab
