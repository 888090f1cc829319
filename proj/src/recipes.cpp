#include "dlab/recipes.hpp"

#include "dlab/errors.hpp"

namespace dlab {

// Desk-scale settings: small MLP tiers and short budgets chosen so every
// recipe finishes within ~30 minutes on a 4-core laptop. Grids, betas and
// schedules are ordinary config keys, so full-scale runs are a --set away.
const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> list = {
      {"fig1-projection",
       "latent projection of a position grid (A1; use dataset.generator=a2/a3 for the variants)",
       "experiment.kind = project\n"
       "dataset.generator = a1\n"
       "model.encoder_widths = 256\n"
       "model.decoder_widths = 256\n"
       "objective.kind = beta_vae\n"
       "objective.beta = 50\n"
       "train.steps = 4000\n"
       "train.batch = 32\n"
       "train.lr = 0.001\n"
       "train.trace_stride = 50\n"
       "seeds = 0\n"},

      {"fig3-significance",
       "sequence entropy vs trained KL over the (theta, L) translation grid",
       "experiment.kind = entropy-grid\n"
       "dataset.frames = 40\n"
       "entropy.thetas_deg = 0,45,90\n"
       "entropy.lengths = 4,8,16,24,36,50\n"
       "entropy.with_kl = true\n"
       "entropy.beta = 8\n"
       "model.encoder_widths = 128\n"
       "model.decoder_widths = 128\n"
       "model.latent_dim = 6\n"
       "train.steps = 1500\n"
       "train.batch = 16\n"
       "train.lr = 0.001\n"
       "train.trace_stride = 50\n"
       "seeds = 0,1,2\n"},

      {"fig5-thresholds",
       "per-action latent-information thresholds on the dSprites-style subset",
       "experiment.kind = sweep\n"
       "dataset.generator = dsprites\n"
       "dataset.dsprites_cards = 3,2,4,8,8\n"
       "sweep.actions = posX,posY,scale,orientation,shape\n"
       "sweep.betas = 1,2,5,10,20,40,80,120\n"
       "sweep.eps_info = 0.1\n"
       "model.encoder_widths = 256\n"
       "model.decoder_widths = 256\n"
       "model.latent_dim = 6\n"
       "train.steps = 1500\n"
       "train.batch = 32\n"
       "train.lr = 0.001\n"
       "train.trace_stride = 50\n"
       "seeds = 0,1,2\n"},

      {"fig6-mig",
       "MIG of staged FVAE vs beta-VAE on the dSprites-style subset",
       "experiment.kind = report\n"
       "dataset.generator = dsprites\n"
       "dataset.dsprites_cards = 3,2,4,8,8\n"
       "model.encoder_widths = 256\n"
       "model.decoder_widths = 256\n"
       "model.group_dims = 4,4,4\n"
       "model.latent_dim = 10\n"
       "report.beta_vae_beta = 4\n"
       "schedule.betas = 100,40,4\n"
       "schedule.steps_per_phase = 2500\n"
       "train.steps = 7500\n"
       "train.batch = 64\n"
       "train.lr = 0.0005\n"
       "train.trace_stride = 50\n"
       "mig.bins = 20\n"
       "seeds = 0,1,2,3,4\n"},

      {"fig7-stages",
       "staged FVAE on the dSprites-style subset with traversal grids per stage",
       "experiment.kind = fvae-train\n"
       "dataset.generator = dsprites\n"
       "dataset.dsprites_cards = 3,2,4,8,8\n"
       "model.encoder_widths = 256\n"
       "model.decoder_widths = 256\n"
       "model.group_dims = 4,4,4\n"
       "schedule.betas = 100,40,4\n"
       "schedule.steps_per_phase = 2500\n"
       "train.batch = 64\n"
       "train.trace_stride = 50\n"
       "traverse.steps = 7\n"
       "seeds = 0\n"},

      {"draft-curves",
       "reconstruction learning curves: ordered translations vs random placement",
       "experiment.kind = curves\n"
       "curves.kinds = y,x,diagonal,rotation,random\n"
       "dataset.frames = 40\n"
       "model.encoder_widths = 128\n"
       "model.decoder_widths = 128\n"
       "model.latent_dim = 6\n"
       "objective.kind = vae\n"
       "train.steps = 1500\n"
       "train.batch = 16\n"
       "train.lr = 0.001\n"
       "train.eval_interval = 25\n"
       "train.trace_stride = 50\n"
       "seeds = 0,1,2\n"},

      {"draft-thresholds",
       "per-transformation thresholds over the six-transformation suite",
       "experiment.kind = sweep\n"
       "dataset.generator = transform\n"
       "dataset.frames = 40\n"
       "sweep.transforms = y,x,diagonal,cycle,rotation,random\n"
       "sweep.betas = 1,2,5,10,20,30,60,90\n"
       "sweep.eps_info = 0.1\n"
       "model.encoder_widths = 128\n"
       "model.decoder_widths = 128\n"
       "model.latent_dim = 6\n"
       "train.steps = 1200\n"
       "train.batch = 16\n"
       "train.lr = 0.001\n"
       "train.trace_stride = 50\n"
       "seeds = 0,1,2\n"},
  };
  return list;
}

const Recipe& find_recipe(const std::string& name) {
  for (const auto& r : recipes()) {
    if (r.name == name) return r;
  }
  throw ConfigError("unknown recipe \"" + name + "\" (see `dlab recipes`)");
}

}  // namespace dlab
