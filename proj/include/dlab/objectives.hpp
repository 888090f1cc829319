#pragma once

#include <string>

namespace dlab {

enum class ObjectiveKind { kVae, kBetaVae, kAnnealedVae };

ObjectiveKind objective_kind_from_name(std::string_view name);
const char* objective_kind_name(ObjectiveKind kind);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::kBetaVae;
  double beta = 1.0;
  double gamma = 1.0;
  double c_start = 0.0;
  double c_end = 0.0;
  long ramp_steps = 1;

  void validate() const;
};

// All losses are negated bounds to be minimized, per-image means in nats.
double vae_loss(double recon_ll, double kl_total);
double beta_vae_loss(double recon_ll, double kl_total, double beta);
double annealed_vae_loss(double recon_ll, double kl_total, double gamma, double c);

/// Linear ramp from c_start to c_end over ramp_steps, constant after.
double c_schedule(long step, const ObjectiveConfig& config);

/// Loss for the configured objective at the given step.
double objective_loss(const ObjectiveConfig& config, long step, double recon_ll, double kl_total);

/// d(loss)/d(kl_total) for the configured objective (backward helper).
double objective_kl_weight(const ObjectiveConfig& config, long step, double kl_total);

}  // namespace dlab
