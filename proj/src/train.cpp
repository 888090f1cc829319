#include "dlab/train.hpp"

#include <cmath>

#include "dlab/errors.hpp"
#include "dlab/fvae.hpp"

namespace dlab {

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (lr < 0.0) throw ConfigError("train.lr must be >= 0");
  if (trace_stride < 1) throw ConfigError("train.trace_stride must be >= 1");
}

BatchSource BatchSource::from_dataset(const ImageDataset& data,
                                      const std::string& label_mix_target) {
  if (data.count() == 0) throw ConfigError("cannot train on an empty dataset");
  BatchSource src;
  const std::size_t pix = data.image_size();
  src.images.resize(static_cast<Eigen::Index>(pix), static_cast<Eigen::Index>(data.count()));
  for (std::size_t i = 0; i < data.count(); ++i) {
    const std::uint8_t* img = data.image_data(i);
    double* col = src.images.col(static_cast<Eigen::Index>(i)).data();
    for (std::size_t k = 0; k < pix; ++k) col[k] = img[k];
  }
  if (!label_mix_target.empty()) {
    int width = mixed_label_width(data.spec(), label_mix_target);
    src.labels.resize(width, static_cast<Eigen::Index>(data.count()));
    for (std::size_t i = 0; i < data.count(); ++i) {
      auto lab = data.label(i);
      src.labels.col(static_cast<Eigen::Index>(i)) =
          mix_labels(data.spec(), lab, label_mix_target);
    }
  } else {
    src.labels.resize(0, static_cast<Eigen::Index>(data.count()));
  }
  return src;
}

double bernoulli_recon_ll_mean(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x) {
  // sum_i x*l - softplus(l), averaged over columns (images).
  Eigen::ArrayXXd l = logits.array();
  Eigen::ArrayXXd softplus = l.max(0.0) + (-l.abs()).exp().log1p();
  double total = (x.array() * l - softplus).sum();
  return total / static_cast<double>(x.cols());
}

Eigen::MatrixXd bernoulli_recon_grad(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x) {
  // d(-recon_ll_mean)/dlogits = (sigmoid(l) - x) / B
  return ((sigmoid(logits.array()) - x.array()) / static_cast<double>(x.cols())).matrix();
}

Eigen::MatrixXd reparam_forward(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                                const Eigen::MatrixXd& eps) {
  return (mu.array() + (0.5 * log_var.array()).exp() * eps.array()).matrix();
}

Eigen::VectorXd kl_per_dim_batch_mean(const Eigen::MatrixXd& mu,
                                      const Eigen::MatrixXd& log_var) {
  Eigen::ArrayXXd terms =
      0.5 * (mu.array().square() + log_var.array().exp() - 1.0 - log_var.array());
  return terms.rowwise().mean().matrix();
}

Eigen::VectorXd kl_per_dim_batch_sum(const Eigen::MatrixXd& mu,
                                     const Eigen::MatrixXd& log_var) {
  Eigen::ArrayXXd terms =
      0.5 * (mu.array().square() + log_var.array().exp() - 1.0 - log_var.array());
  return terms.rowwise().sum().matrix();
}

Eigen::MatrixXd reparam_kl_backward(const Eigen::MatrixXd& dz, const Eigen::MatrixXd& mu,
                                    const Eigen::MatrixXd& log_var, const Eigen::MatrixXd& eps,
                                    double kl_weight_over_batch) {
  const Eigen::Index d = mu.rows();
  Eigen::MatrixXd dh(2 * d, mu.cols());
  dh.topRows(d) = dz + kl_weight_over_batch * mu;
  dh.bottomRows(d) = (dz.array() * (0.5 * (0.5 * log_var.array()).exp() * eps.array()) +
                      kl_weight_over_batch * 0.5 * (log_var.array().exp() - 1.0))
                         .matrix();
  return dh;
}

BatchLossStats vae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& noise, const Eigen::MatrixXd& labels,
                              const ObjectiveConfig& objective, long step,
                              std::vector<Eigen::MatrixXd>* enc_grads,
                              std::vector<Eigen::MatrixXd>* dec_grads) {
  const int d = model.arch.latent_dim;
  const Eigen::Index batch = x.cols();
  if (noise.rows() != d || noise.cols() != batch) {
    throw ConfigError("vae_batch_loss: noise shape mismatch");
  }
  if (labels.rows() != model.label_width) {
    throw ConfigError("vae_batch_loss: label width mismatch");
  }

  NetTrace enc_trace;
  Eigen::MatrixXd h = model.encoder.forward(x, enc_grads ? &enc_trace : nullptr);
  Eigen::MatrixXd mu = h.topRows(d);
  Eigen::MatrixXd lv = h.bottomRows(d);

  Eigen::MatrixXd zin(d + model.label_width, batch);
  zin.topRows(d) = reparam_forward(mu, lv, noise);
  if (model.label_width > 0) zin.bottomRows(model.label_width) = labels;

  NetTrace dec_trace;
  Eigen::MatrixXd logits = model.decoder.forward(zin, dec_grads ? &dec_trace : nullptr);

  BatchLossStats stats;
  stats.recon_ll = bernoulli_recon_ll_mean(logits, x);
  stats.kl_per_dim = kl_per_dim_batch_mean(mu, lv);
  stats.kl_total = stats.kl_per_dim.sum();
  stats.loss = objective_loss(objective, step, stats.recon_ll, stats.kl_total);

  if (enc_grads || dec_grads) {
    double w = objective_kl_weight(objective, step, stats.kl_total);
    double inv_b = 1.0 / static_cast<double>(batch);
    Eigen::MatrixXd dlogits = bernoulli_recon_grad(logits, x);

    std::vector<Eigen::MatrixXd> dec_scratch;
    std::vector<Eigen::MatrixXd>& dref = dec_grads ? *dec_grads : dec_scratch;
    if (!dec_grads) dec_scratch = model.decoder.make_grad_buffers();
    Eigen::MatrixXd dzin = model.decoder.backward(dec_trace, dlogits, dref);

    if (enc_grads) {
      Eigen::MatrixXd dz = dzin.topRows(d);
      Eigen::MatrixXd dh = reparam_kl_backward(dz, mu, lv, noise, w * inv_b);
      model.encoder.backward(enc_trace, dh, *enc_grads);
    }
  }
  return stats;
}

EvalStats evaluate_vae(const VaeModel& model, const BatchSource& data) {
  const int d = model.arch.latent_dim;
  const Eigen::Index n = data.count();
  EvalStats out;
  out.kl_per_dim = Eigen::VectorXd::Zero(d);
  constexpr Eigen::Index kChunk = 512;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    Eigen::Index len = std::min(kChunk, n - start);
    Eigen::MatrixXd x = data.images.middleCols(start, len);
    Eigen::MatrixXd h = model.encoder.forward(x, nullptr);
    Eigen::MatrixXd mu = h.topRows(d);
    Eigen::MatrixXd lv = h.bottomRows(d);
    out.kl_per_dim += kl_per_dim_batch_sum(mu, lv);

    Eigen::MatrixXd zin(d + model.label_width, len);
    zin.topRows(d) = mu;
    if (model.label_width > 0) zin.bottomRows(model.label_width) = data.labels.middleCols(start, len);
    Eigen::MatrixXd logits = model.decoder.forward(zin, nullptr);
    out.mean_recon_ll += bernoulli_recon_ll_mean(logits, x) * static_cast<double>(len);
  }
  out.kl_per_dim /= static_cast<double>(n);
  out.mean_recon_ll /= static_cast<double>(n);
  out.mean_kl = out.kl_per_dim.sum();
  return out;
}

VaeTrainer::VaeTrainer(VaeModel& model, const ImageDataset& data, const TrainConfig& cfg,
                       std::uint64_t seed)
    : model_(model),
      data_(BatchSource::from_dataset(data, cfg.label_mix_target)),
      cfg_(cfg),
      batch_rng_(seed, "batch"),
      noise_rng_(seed, "noise"),
      enc_state_(model.encoder.blocks()),
      dec_state_(model.decoder.blocks()),
      enc_grads_(model.encoder.make_grad_buffers()),
      dec_grads_(model.decoder.make_grad_buffers()) {
  cfg_.validate();
  if (data_.label_width() != model.label_width) {
    throw ConfigError("model label width " + std::to_string(model.label_width) +
                      " does not match the dataset's mixed labels (" +
                      std::to_string(data_.label_width()) + ")");
  }
}

BatchLossStats VaeTrainer::step(const ObjectiveConfig& objective, long step_index) {
  const int d = model_.arch.latent_dim;
  const Eigen::Index n = data_.count();

  Eigen::MatrixXd x(data_.images.rows(), cfg_.batch);
  Eigen::MatrixXd labels(data_.labels.rows(), cfg_.batch);
  for (int b = 0; b < cfg_.batch; ++b) {
    Eigen::Index i = batch_rng_.uniform_index(static_cast<std::uint32_t>(n));
    x.col(b) = data_.images.col(i);
    if (labels.rows() > 0) labels.col(b) = data_.labels.col(i);
  }
  Eigen::MatrixXd noise(d, cfg_.batch);
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = noise_rng_.normal();

  for (auto& g : enc_grads_) g.setZero();
  for (auto& g : dec_grads_) g.setZero();
  BatchLossStats stats =
      vae_batch_loss(model_, x, noise, labels, objective, step_index, &enc_grads_, &dec_grads_);
  if (!std::isfinite(stats.loss)) {
    throw TrainingError("non-finite loss", /*phase=*/0, step_index);
  }
  try {
    enc_state_.step(model_.encoder.blocks(), enc_grads_, cfg_.lr, cfg_.adam,
                    model_.encoder.block_names());
    dec_state_.step(model_.decoder.blocks(), dec_grads_, cfg_.lr, cfg_.adam,
                    model_.decoder.block_names());
  } catch (const TrainingError& e) {
    throw TrainingError(e.what(), 0, step_index);
  }
  return stats;
}

EvalStats VaeTrainer::evaluate() const { return evaluate_vae(model_, data_); }

TrainingTrace train_vae(VaeModel& model, const ImageDataset& data,
                        const ObjectiveConfig& objective, const TrainConfig& cfg,
                        std::uint64_t seed) {
  objective.validate();
  VaeTrainer trainer(model, data, cfg, seed);
  TrainingTrace trace;
  long recorded = (cfg.steps + cfg.trace_stride - 1) / cfg.trace_stride;
  trace.kl_per_dim.resize(model.arch.latent_dim, recorded);
  long col = 0;
  for (long s = 0; s < cfg.steps; ++s) {
    BatchLossStats stats = trainer.step(objective, s);
    if (s % cfg.trace_stride == 0) {
      trace.steps.push_back(s);
      trace.loss.push_back(stats.loss);
      trace.recon_ll.push_back(stats.recon_ll);
      trace.kl_total.push_back(stats.kl_total);
      trace.kl_per_dim.col(col++) = stats.kl_per_dim;
    }
    if (cfg.eval_interval > 0 && (s + 1) % cfg.eval_interval == 0) {
      EvalStats ev = trainer.evaluate();
      trace.eval_steps.push_back(s + 1);
      trace.eval_recon_loss.push_back(-ev.mean_recon_ll);
      trace.eval_kl.push_back(ev.mean_kl);
    }
  }
  trace.kl_per_dim.conservativeResize(Eigen::NoChange, col);
  EvalStats final = trainer.evaluate();
  trace.final_kl = final.mean_kl;
  trace.final_recon_ll = final.mean_recon_ll;
  trace.final_kl_per_dim = final.kl_per_dim;
  return trace;
}

}  // namespace dlab
