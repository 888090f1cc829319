#include "dlab/objectives.hpp"

#include <cmath>

#include "dlab/errors.hpp"

namespace dlab {

ObjectiveKind objective_kind_from_name(std::string_view name) {
  if (name == "vae") return ObjectiveKind::kVae;
  if (name == "beta_vae") return ObjectiveKind::kBetaVae;
  if (name == "annealed_vae") return ObjectiveKind::kAnnealedVae;
  throw ConfigError("unknown objective \"" + std::string(name) + "\"");
}

const char* objective_kind_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kVae: return "vae";
    case ObjectiveKind::kBetaVae: return "beta_vae";
    case ObjectiveKind::kAnnealedVae: return "annealed_vae";
  }
  return "?";
}

void ObjectiveConfig::validate() const {
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (c_start < 0.0 || c_end < c_start) throw ConfigError("need c_end >= c_start >= 0");
  if (ramp_steps < 1) throw ConfigError("ramp_steps must be >= 1");
}

double vae_loss(double recon_ll, double kl_total) { return -recon_ll + kl_total; }

double beta_vae_loss(double recon_ll, double kl_total, double beta) {
  return -recon_ll + beta * kl_total;
}

double annealed_vae_loss(double recon_ll, double kl_total, double gamma, double c) {
  return -recon_ll + gamma * std::abs(kl_total - c);
}

double c_schedule(long step, const ObjectiveConfig& config) {
  if (step >= config.ramp_steps) return config.c_end;
  double frac = static_cast<double>(step) / static_cast<double>(config.ramp_steps);
  return config.c_start + (config.c_end - config.c_start) * frac;
}

double objective_loss(const ObjectiveConfig& config, long step, double recon_ll,
                      double kl_total) {
  switch (config.kind) {
    case ObjectiveKind::kVae: return vae_loss(recon_ll, kl_total);
    case ObjectiveKind::kBetaVae: return beta_vae_loss(recon_ll, kl_total, config.beta);
    case ObjectiveKind::kAnnealedVae:
      return annealed_vae_loss(recon_ll, kl_total, config.gamma, c_schedule(step, config));
  }
  return 0.0;
}

double objective_kl_weight(const ObjectiveConfig& config, long step, double kl_total) {
  switch (config.kind) {
    case ObjectiveKind::kVae: return 1.0;
    case ObjectiveKind::kBetaVae: return config.beta;
    case ObjectiveKind::kAnnealedVae: {
      double c = c_schedule(step, config);
      return kl_total >= c ? config.gamma : -config.gamma;
    }
  }
  return 1.0;
}

}  // namespace dlab
