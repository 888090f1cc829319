#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dlab/objectives.hpp"
#include "dlab/train.hpp"
#include "dlab/vae.hpp"

namespace dlab {

// Flat "key = value" experiment description with dotted section prefixes.
// Every field has a serialized default; unknown keys are rejected; the echo
// of a config re-parses to an equal config.
struct ExperimentConfig {
  std::string kind = "train";
  std::vector<std::uint64_t> seeds = {0};
  int jobs = 1;
  std::string out_dir = "out";

  // dataset
  std::string dataset_source = "generator";  // generator | file
  std::string dataset_path;
  std::string dataset_generator = "a1";  // a1 | a2 | a3 | a4 | dsprites | transform | mix
  int dataset_grid = 40;
  int dataset_canvas = 64;
  double dataset_theta_deg = 0.0;
  double dataset_length = 50.0;
  int dataset_frames = 40;
  std::string dataset_transform = "y";
  int dataset_mix_positions = 16;
  int dataset_mix_orientations = 8;
  std::array<int, 5> dataset_dsprites_cards = {3, 2, 4, 8, 8};
  std::uint64_t dataset_seed = 0;

  // model
  ArchitectureConfig arch;
  std::vector<int> group_dims = {4, 4, 4};
  std::string model_checkpoint;  // reuse a trained model in analysis kinds

  // objective / training
  ObjectiveConfig objective;
  TrainConfig train;

  // fvae schedule
  std::vector<double> schedule_betas = {100.0, 40.0, 4.0};
  long schedule_steps_per_phase = 10000;
  double schedule_lr_active = 5e-4;
  double schedule_lr_learned = 5e-5;

  // sweep
  std::vector<double> sweep_betas = {1, 2, 5, 10, 20, 30, 60, 90};
  double sweep_eps_info = 0.1;
  std::vector<std::string> sweep_actions;     // mixed-label per-action thresholds
  std::vector<std::string> sweep_transforms;  // per-transformation thresholds

  // annealing test
  double anneal_beta_high = 120.0;
  double anneal_beta_low = 1.0;
  int anneal_levels = 12;
  long anneal_steps_per_level = 0;  // 0: train.steps / levels
  double anneal_delta = 0.5;

  // traversal / projection / mig
  int traverse_dim = -1;  // -1: every active dim
  int traverse_steps = 7;
  double traverse_range = 3.0;
  long traverse_anchor = 0;
  double traverse_eps_active = 0.01;
  int project_dim_i = -1;  // -1: top-2 dims by mean KL
  int project_dim_j = -1;
  int mig_bins = 20;
  long mig_samples = 0;

  // entropy grid
  std::vector<double> entropy_thetas_deg = {0, 45, 90};
  std::vector<double> entropy_lengths = {4, 8, 16, 24, 36, 50};
  bool entropy_with_kl = true;
  double entropy_beta = 8.0;

  // learning curves
  std::vector<std::string> curve_kinds = {"y", "x", "random"};

  // report
  double report_beta_vae_beta = 4.0;
};

/// Known experiment kinds, in display order.
const std::vector<std::string>& experiment_kinds();

/// Parse file content (empty path allowed: defaults only) then apply
/// key=value overrides in order. Unknown keys, bad values and unresolvable
/// paths are ConfigErrors naming the key.
ExperimentConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});

/// Canonical echo: every key, schema order, one per line.
std::string serialize_config(const ExperimentConfig& config);

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b);

void validate_config(const ExperimentConfig& config);

}  // namespace dlab
