#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dlab/errors.hpp"
#include "dlab/objectives.hpp"
#include "dlab/rng.hpp"

using namespace dlab;

TEST_CASE("vae loss is the negated ELBO") {
  CHECK(vae_loss(0.0, 0.0) == 0.0);
  CHECK(vae_loss(-10.0, 2.5) == 12.5);
}

TEST_CASE("beta identities") {
  RandomStream rng(1, "obj");
  for (int i = 0; i < 100; ++i) {
    double recon = -50.0 * rng.uniform();
    double kl = 10.0 * rng.uniform();
    CHECK(beta_vae_loss(recon, kl, 0.0) == -recon);
    CHECK(beta_vae_loss(recon, kl, 1.0) == vae_loss(recon, kl));
    CHECK(annealed_vae_loss(recon, kl, 1.0, 0.0) == doctest::Approx(vae_loss(recon, kl)));
    CHECK(annealed_vae_loss(recon, kl, 0.0, 3.0) == -recon);
    CHECK(annealed_vae_loss(recon, kl, 7.0, kl) == -recon);  // penalty vanishes at C = KL
  }
  CHECK(annealed_vae_loss(-1.0, 5.0, 100.0, 3.0) == doctest::Approx(1.0 + 200.0));
}

TEST_CASE("a beta-50 composition matches hand recomposition from components") {
  double recon_ll = -123.456, kl = 7.89;
  CHECK(beta_vae_loss(recon_ll, kl, 50.0) == doctest::Approx(123.456 + 50.0 * 7.89).epsilon(1e-12));
}

TEST_CASE("beta loss is monotone in KL for nonnegative beta") {
  RandomStream rng(2, "obj");
  for (int i = 0; i < 200; ++i) {
    double recon = -20.0 * rng.uniform();
    double beta = 90.0 * rng.uniform();
    double kl1 = 10.0 * rng.uniform();
    double kl2 = kl1 + 5.0 * rng.uniform();
    CHECK(beta_vae_loss(recon, kl2, beta) >= beta_vae_loss(recon, kl1, beta));
  }
}

TEST_CASE("annealed loss is minimized over KL exactly at C") {
  double recon = -2.0, gamma = 30.0, c = 4.0;
  double at_c = annealed_vae_loss(recon, c, gamma, c);
  for (double kl = 0.0; kl <= 8.0; kl += 0.25) {
    CHECK(annealed_vae_loss(recon, kl, gamma, c) >= at_c);
  }
}

TEST_CASE("the capacity ramp is linear then constant") {
  ObjectiveConfig cfg;
  cfg.kind = ObjectiveKind::kAnnealedVae;
  cfg.c_start = 1.0;
  cfg.c_end = 9.0;
  cfg.ramp_steps = 1000;
  CHECK(c_schedule(0, cfg) == 1.0);
  CHECK(c_schedule(500, cfg) == doctest::Approx(5.0));
  CHECK(c_schedule(1000, cfg) == 9.0);
  CHECK(c_schedule(50000, cfg) == 9.0);
}

TEST_CASE("objective_kl_weight drives the gradient of each objective") {
  ObjectiveConfig cfg;
  cfg.kind = ObjectiveKind::kVae;
  CHECK(objective_kl_weight(cfg, 0, 3.0) == 1.0);
  cfg.kind = ObjectiveKind::kBetaVae;
  cfg.beta = 42.0;
  CHECK(objective_kl_weight(cfg, 0, 3.0) == 42.0);
  cfg.kind = ObjectiveKind::kAnnealedVae;
  cfg.gamma = 10.0;
  cfg.c_start = cfg.c_end = 5.0;
  CHECK(objective_kl_weight(cfg, 0, 8.0) == 10.0);
  CHECK(objective_kl_weight(cfg, 0, 2.0) == -10.0);
}

TEST_CASE("config invariants are enforced") {
  ObjectiveConfig cfg;
  cfg.beta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.beta = 1.0;
  cfg.c_start = 2.0;
  cfg.c_end = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.c_end = 3.0;
  cfg.ramp_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
