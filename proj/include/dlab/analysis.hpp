#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlab/dataset.hpp"
#include "dlab/fvae.hpp"
#include "dlab/train.hpp"
#include "dlab/vae.hpp"

namespace dlab {

// ---------------------------------------------------------------------------
// Model adapter: analysis works on frozen encoders/decoders of either kind.

struct LatentCodec {
  int latent_dim = 0;
  int label_width = 0;
  std::function<GaussianPosterior(std::span<const double>)> encode;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::span<const double>)> decode;
};

LatentCodec make_codec(const VaeModel& model);
LatentCodec make_codec(const FvaeModel& model);

// ---------------------------------------------------------------------------
// Sequence information

/// Information carried by a sequence of binary frames, in nats: the sum over
/// pixels of the binary entropy of each pixel's lit frequency.
double sequence_entropy(const ActionSequence& seq);

/// Single-image visualization of a sequence; frame i renders at brightness
/// (i+1)/N and overlaps keep the later (brighter) value.
GrayImage afterimage(const ActionSequence& seq);

// ---------------------------------------------------------------------------
// Beta sweeps and thresholds

/// One model-training job description shared by the sweep-style analyses.
struct TrainSetup {
  ArchitectureConfig arch;
  ObjectiveConfig objective;
  TrainConfig train;
};

struct SweepPoint {
  double beta = 0.0;
  double mean_kl = 0.0;       // seed average of the final full-data mean KL
  double mean_recon_ll = 0.0;
  std::vector<double> kl_per_seed;
  std::vector<double> recon_per_seed;
};

struct SweepResult {
  std::vector<double> seeds;
  std::vector<SweepPoint> points;  // in beta order, strictly increasing
};

/// Trains a fresh beta-VAE per (beta, seed) to the configured budget and
/// records the final deterministic mean KL / recon log-likelihood.
SweepResult beta_sweep(const ImageDataset& data, const std::vector<double>& betas,
                       const TrainSetup& setup, const std::vector<std::uint64_t>& seeds,
                       int jobs = 1);

/// Restriction of a sweep to one seed (per-seed threshold estimation).
SweepResult sweep_for_seed(const SweepResult& sweep, std::size_t seed_index);

enum class ThresholdKind { kBelowGrid, kWithin, kAboveGrid };

struct ThresholdEstimate {
  ThresholdKind kind = ThresholdKind::kBelowGrid;
  double beta = 0.0;  // the estimated grid value (grid max/min at the edges)
  std::string to_string() const;
};

/// Largest grid beta whose KL still reaches eps_info. All points qualifying
/// reports "above grid" (printed like "120+"); none reports "below grid".
ThresholdEstimate estimate_threshold(const SweepResult& sweep, double eps_info = 0.1);

/// Strict order: below-grid < within(beta) < above-grid.
bool threshold_less(const ThresholdEstimate& a, const ThresholdEstimate& b);

struct ThresholdReport {
  double eps_info = 0.1;
  std::vector<double> grid;
  std::vector<std::pair<std::string, ThresholdEstimate>> per_action;
};

// ---------------------------------------------------------------------------
// Annealing test

struct AnnealingTrace {
  std::vector<long> iters;  // sampled every eval_interval steps
  std::vector<double> beta_at_iter;
  std::vector<double> kl_at_iter;
  std::vector<double> level_betas;  // end-of-level deterministic evals
  std::vector<double> level_kl;
  struct CriticalPoint {
    double beta;
    double kl_jump;
  };
  std::vector<CriticalPoint> critical_points;
};

/// Pure detector: a critical point at level i when kl[i] - kl[i-1] >= delta.
std::vector<AnnealingTrace::CriticalPoint> detect_critical_points(
    const std::vector<double>& level_betas, const std::vector<double>& level_kl, double delta);

/// Geometric beta ladder from high to low over `levels` values.
std::vector<double> annealing_schedule(double beta_high, double beta_low, int levels);

/// One continuous training run stepping beta down the schedule, holding each
/// level for steps_per_level; jumps of the full-data KL >= delta between
/// consecutive level ends are reported as critical points.
AnnealingTrace annealing_test(const ImageDataset& data, const std::vector<double>& beta_levels,
                              long steps_per_level, double delta, const TrainSetup& setup,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Disentanglement metrics

struct MigReport {
  double score = 0.0;
  int bins = 20;
  struct FactorInfo {
    std::string name;
    double mi_top = 0.0;
    double mi_second = 0.0;
    double entropy = 0.0;
    double gap = 0.0;  // (mi_top - mi_second) / entropy
    int top_dim = -1;
  };
  std::vector<FactorInfo> factors;  // single-valued factors excluded
};

/// Mutual information gap from the posterior means of up to n_samples images
/// (0 = all), discretized into `bins` equal-width bins over observed ranges.
MigReport mig(const LatentCodec& codec, const ImageDataset& data, int bins = 20,
              std::size_t n_samples = 0);

/// MIG on externally supplied codes (columns = images), used by the exact
/// synthetic-joint checks.
MigReport mig_from_codes(const Eigen::MatrixXd& codes, const ImageDataset& data, int bins = 20);

/// Latent dimensions whose dataset-mean KL exceeds eps nats.
std::vector<int> active_units(const LatentCodec& codec, const ImageDataset& data,
                              double eps = 0.01);
Eigen::VectorXd mean_kl_per_dim(const LatentCodec& codec, const ImageDataset& data);

// ---------------------------------------------------------------------------
// Latent geometry

/// Decode while sweeping one latent entry over mean +/- range, others held at
/// the posterior mean. steps >= 2; odd step counts place the anchor's own
/// reconstruction at the center frame. Mixed-label codecs take the anchor's
/// provided-factor one-hots in `labels`.
std::vector<GrayImage> latent_traversal(const LatentCodec& codec, const ImageDataset& data,
                                        std::size_t anchor_index, int dim, double range = 3.0,
                                        int steps = 7, std::span<const double> labels = {});

struct ProjectionTable {
  int dim_i = 0;
  int dim_j = 1;
  std::vector<std::array<double, 2>> points;  // (mu_i, mu_j) per image
  struct FactorLines {
    std::string factor;
    std::vector<std::vector<std::size_t>> lines;  // image indices in value order
  };
  std::vector<FactorLines> lines;
};

/// Scatter of two latent means with per-factor polylines (one line per
/// combination of the remaining factors, ordered by the factor's values).
ProjectionTable latent_projection(const LatentCodec& codec, const ImageDataset& data, int dim_i,
                                  int dim_j);

/// R^2 of regressing (mu_i, mu_j) each against its own coordinate of the
/// position frame rotated by theta: mu_i on u, mu_j on v. Constant latents
/// report 0. Requires a two-factor position dataset.
std::pair<double, double> axis_alignment(const ProjectionTable& projection,
                                         const ImageDataset& data, double theta);

struct FrameFit {
  double theta_deg = 0.0;  // in [0, 90)
  double r2_i = 0.0;
  double r2_j = 0.0;
};

/// Scans theta over [0, 180) degrees for the frame maximizing the mean R^2;
/// reported modulo 90 degrees (axis pairing is arbitrary).
FrameFit best_fit_frame(const ProjectionTable& projection, const ImageDataset& data,
                        double step_deg = 1.0);

/// Distance between two frames in degrees, modulo the 90-degree symmetry.
double frame_angle_distance_deg(double a_deg, double b_deg);

// ---------------------------------------------------------------------------
// Learning curves

struct LearningCurve {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<long> iters;
  std::vector<double> loss;  // deterministic full-data reconstruction loss
};

/// Trains the identical model per named dataset and seed; loss is evaluated
/// every setup.train.eval_interval steps.
std::vector<LearningCurve> learning_curve_compare(
    const std::vector<std::pair<std::string, ImageDataset>>& named, const TrainSetup& setup,
    const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// First recorded iteration at which the curve reaches `target` loss.
std::optional<long> iterations_to_reach(const LearningCurve& curve, double target);

// ---------------------------------------------------------------------------
// Small statistics helpers

double spearman_correlation(std::span<const double> xs, std::span<const double> ys);
double binary_entropy(double p);  // nats; h(0) = h(1) = 0

}  // namespace dlab
