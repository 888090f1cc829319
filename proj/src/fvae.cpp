#include "dlab/fvae.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "dlab/errors.hpp"

namespace dlab {

int mixed_label_width(const FactorSpec& spec, std::string_view target_factor) {
  spec.index_of(target_factor);  // throws on unknown target
  int width = 0;
  for (const auto& f : spec.factors) {
    if (f.name != target_factor) width += static_cast<int>(f.values.size());
  }
  return width;
}

Eigen::VectorXd mix_labels(const FactorSpec& spec, std::span<const std::uint32_t> label,
                           std::string_view target_factor) {
  if (label.size() != spec.count()) {
    throw ConfigError("mix_labels: label arity does not match the factor spec");
  }
  std::size_t target = spec.index_of(target_factor);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mixed_label_width(spec, target_factor));
  int offset = 0;
  for (std::size_t k = 0; k < spec.count(); ++k) {
    if (k == target) continue;
    const auto& f = spec.factors[k];
    if (label[k] >= f.values.size()) {
      throw ConfigError("mix_labels: missing or invalid label for factor \"" + f.name + "\"");
    }
    out[offset + static_cast<int>(label[k])] = 1.0;
    offset += static_cast<int>(f.values.size());
  }
  return out;
}

int FvaeModel::total_latent() const {
  return std::accumulate(group_dims.begin(), group_dims.end(), 0);
}

int FvaeModel::group_offset(int g) const {
  return std::accumulate(group_dims.begin(), group_dims.begin() + g, 0);
}

FvaeModel FvaeModel::create(const ArchitectureConfig& arch, const std::vector<int>& group_dims,
                            int label_width, RandomStream& init) {
  if (group_dims.empty()) throw ConfigError("FVAE needs at least one group");
  for (int d : group_dims) {
    if (d < 1) throw ConfigError("group latent dims must be >= 1");
  }
  if (label_width < 0) throw ConfigError("label width must be >= 0");

  FvaeModel m;
  m.arch = arch;
  m.group_dims = group_dims;
  m.label_width = label_width;
  for (int d : group_dims) {
    ArchitectureConfig ga = arch;
    ga.latent_dim = d;
    ga.validate();
    if (arch.backbone == Backbone::kMlp) {
      m.group_encoders.emplace_back(
          mlp_stack(arch.input_dim(), arch.encoder_widths, 2 * d, arch.nonlinearity));
    } else {
      m.group_encoders.emplace_back(
          conv4_encoder_stack(arch.input_h, arch.input_w, 2 * d, arch.nonlinearity));
    }
    m.group_encoders.back().init_params(init);
  }
  int dec_in = m.total_latent() + label_width;
  if (arch.backbone == Backbone::kMlp) {
    m.decoder =
        FeedForwardNet(mlp_stack(dec_in, arch.decoder_widths, arch.input_dim(), arch.nonlinearity));
  } else {
    m.decoder =
        FeedForwardNet(conv4_decoder_stack(dec_in, arch.input_h, arch.input_w, arch.nonlinearity));
  }
  m.decoder.init_params(init);
  return m;
}

std::vector<GaussianPosterior> FvaeModel::encode_groups(std::span<const double> image) const {
  if (static_cast<int>(image.size()) != arch.input_dim()) {
    throw ConfigError("encode_groups: image size does not match the input shape");
  }
  Eigen::Map<const Eigen::VectorXd> x(image.data(), image.size());
  std::vector<GaussianPosterior> posts;
  posts.reserve(group_encoders.size());
  for (std::size_t g = 0; g < group_encoders.size(); ++g) {
    Eigen::MatrixXd h = group_encoders[g].forward(x, nullptr);
    GaussianPosterior p;
    p.mean = h.col(0).head(group_dims[g]);
    p.log_var = h.col(0).tail(group_dims[g]);
    posts.push_back(std::move(p));
  }
  return posts;
}

Eigen::VectorXd FvaeModel::decode(const Eigen::VectorXd& z_cat,
                                  std::span<const double> labels) const {
  if (z_cat.size() != total_latent()) throw ConfigError("decode: code length mismatch");
  if (static_cast<int>(labels.size()) != label_width) {
    throw ConfigError("decode: label width mismatch (got " + std::to_string(labels.size()) +
                      ", model expects " + std::to_string(label_width) + ")");
  }
  Eigen::VectorXd in(total_latent() + label_width);
  in.head(total_latent()) = z_cat;
  for (int i = 0; i < label_width; ++i) in[total_latent() + i] = labels[i];
  Eigen::MatrixXd logits = decoder.forward(in, nullptr);
  return sigmoid(logits.col(0).array()).max(1e-12).min(1.0 - 1e-12).matrix();
}

void PhaseSchedule::validate(int group_count) const {
  if (phases.empty()) throw ConfigError("schedule needs at least one phase");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const Phase& p = phases[i];
    std::string tag = "phase " + std::to_string(i + 1) + ": ";
    if (p.active_group < 1 || p.active_group > group_count) {
      throw ConfigError(tag + "active group out of range");
    }
    if (static_cast<int>(p.encoder_lr.size()) != group_count) {
      throw ConfigError(tag + "need one encoder learning rate per group");
    }
    if (!(p.beta > 0.0)) throw ConfigError(tag + "beta must be positive");
    if (p.steps < 1) throw ConfigError(tag + "steps must be >= 1");
    if (p.decoder_lr < 0.0) throw ConfigError(tag + "decoder lr must be >= 0");
    for (int g = 0; g < group_count; ++g) {
      if (p.encoder_lr[g] < 0.0) throw ConfigError(tag + "learning rates must be >= 0");
      if (g >= p.active_group && p.encoder_lr[g] != 0.0) {
        throw ConfigError(tag + "future group " + std::to_string(g + 1) + " must be frozen");
      }
      if (p.encoder_lr[g] > p.encoder_lr[p.active_group - 1]) {
        throw ConfigError(tag + "active group must carry the largest encoder rate");
      }
    }
  }
}

PhaseSchedule PhaseSchedule::staged_defaults(int group_count, std::vector<double> betas,
                                             long steps_per_phase, double lr_active,
                                             double lr_learned) {
  if (static_cast<int>(betas.size()) != group_count) {
    throw ConfigError("staged schedule needs one beta per group");
  }
  PhaseSchedule s;
  for (int p = 1; p <= group_count; ++p) {
    Phase phase;
    phase.active_group = p;
    phase.beta = betas[p - 1];
    phase.steps = steps_per_phase;
    phase.decoder_lr = lr_active;
    phase.encoder_lr.assign(group_count, 0.0);
    for (int g = 1; g < p; ++g) phase.encoder_lr[g - 1] = lr_learned;
    phase.encoder_lr[p - 1] = lr_active;
    s.phases.push_back(std::move(phase));
  }
  return s;
}

double fvae_loss(double recon_ll, std::span<const double> group_kls, int phase, double beta) {
  if (phase < 1 || phase > static_cast<int>(group_kls.size())) {
    throw ConfigError("fvae_loss: phase out of range");
  }
  if (beta < 0.0) throw ConfigError("fvae_loss: beta must be >= 0");
  double kl = 0.0;
  for (int g = 0; g < phase; ++g) kl += group_kls[g];
  return -recon_ll + beta * kl;
}

FvaeForwardResult fvae_forward(const FvaeModel& model, std::span<const double> image, int phase,
                               RandomStream& noise, std::span<const double> labels) {
  if (phase < 1 || phase > model.group_count()) {
    throw ConfigError("fvae_forward: phase out of range");
  }
  FvaeForwardResult out;
  out.code.resize(model.total_latent());
  for (int g = 0; g < model.group_count(); ++g) {
    int d = model.group_dims[g];
    int off = model.group_offset(g);
    if (g < phase) {
      Eigen::Map<const Eigen::VectorXd> x(image.data(), image.size());
      Eigen::MatrixXd h = model.group_encoders[g].forward(x, nullptr);
      GaussianPosterior p{h.col(0).head(d), h.col(0).tail(d)};
      Eigen::VectorXd eps(d);
      for (int i = 0; i < d; ++i) eps[i] = noise.normal();
      out.code.segment(off, d) = reparameterize(p, eps);
      out.posteriors.push_back(std::move(p));
    } else {
      for (int i = 0; i < d; ++i) out.code[off + i] = noise.normal();
    }
  }
  out.pixel_means = model.decode(out.code, labels);
  return out;
}

BatchLossStats fvae_batch_loss(const FvaeModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& noise, const Eigen::MatrixXd& labels,
                               int active, double beta,
                               std::vector<std::vector<Eigen::MatrixXd>>* group_grads,
                               std::vector<Eigen::MatrixXd>* dec_grads) {
  const int total = model.total_latent();
  const Eigen::Index batch = x.cols();
  if (active < 1 || active > model.group_count()) {
    throw ConfigError("fvae_batch_loss: phase out of range");
  }
  if (noise.rows() != total || noise.cols() != batch) {
    throw ConfigError("fvae_batch_loss: noise shape mismatch");
  }
  if (labels.rows() != model.label_width) {
    throw ConfigError("fvae_batch_loss: label width mismatch");
  }

  bool want_grads = group_grads || dec_grads;
  std::vector<NetTrace> enc_traces(active);
  std::vector<Eigen::MatrixXd> mus(active), lvs(active), eps(active);
  Eigen::MatrixXd zin(total + model.label_width, batch);

  for (int g = 0; g < model.group_count(); ++g) {
    int d = model.group_dims[g];
    int off = model.group_offset(g);
    if (g < active) {
      Eigen::MatrixXd h =
          model.group_encoders[g].forward(x, want_grads ? &enc_traces[g] : nullptr);
      mus[g] = h.topRows(d);
      lvs[g] = h.bottomRows(d);
      eps[g] = noise.middleRows(off, d);
      zin.middleRows(off, d) = reparam_forward(mus[g], lvs[g], eps[g]);
    } else {
      // Frozen group: fresh prior samples, encoder never evaluated.
      zin.middleRows(off, d) = noise.middleRows(off, d);
    }
  }
  if (model.label_width > 0) zin.bottomRows(model.label_width) = labels;

  NetTrace dec_trace;
  Eigen::MatrixXd logits = model.decoder.forward(zin, want_grads ? &dec_trace : nullptr);

  BatchLossStats stats;
  stats.recon_ll = bernoulli_recon_ll_mean(logits, x);
  stats.kl_per_dim = Eigen::VectorXd::Zero(total);
  stats.kl_per_group = Eigen::VectorXd::Zero(model.group_count());
  for (int g = 0; g < active; ++g) {
    Eigen::VectorXd per_dim = kl_per_dim_batch_mean(mus[g], lvs[g]);
    stats.kl_per_dim.segment(model.group_offset(g), model.group_dims[g]) = per_dim;
    stats.kl_per_group[g] = per_dim.sum();
  }
  stats.kl_total = stats.kl_per_group.head(active).sum();
  stats.loss = beta_vae_loss(stats.recon_ll, stats.kl_total, beta);

  if (want_grads) {
    double inv_b = 1.0 / static_cast<double>(batch);
    Eigen::MatrixXd dlogits = bernoulli_recon_grad(logits, x);
    std::vector<Eigen::MatrixXd> dec_scratch;
    std::vector<Eigen::MatrixXd>& dref = dec_grads ? *dec_grads : dec_scratch;
    if (!dec_grads) dec_scratch = model.decoder.make_grad_buffers();
    Eigen::MatrixXd dzin = model.decoder.backward(dec_trace, dlogits, dref);

    if (group_grads) {
      for (int g = 0; g < active; ++g) {
        int d = model.group_dims[g];
        int off = model.group_offset(g);
        Eigen::MatrixXd dz = dzin.middleRows(off, d);
        Eigen::MatrixXd dh = reparam_kl_backward(dz, mus[g], lvs[g], eps[g], beta * inv_b);
        model.group_encoders[g].backward(enc_traces[g], dh, (*group_grads)[g]);
      }
    }
  }
  return stats;
}

EvalStats evaluate_fvae(const FvaeModel& model, const BatchSource& data) {
  const int total = model.total_latent();
  const Eigen::Index n = data.count();
  EvalStats out;
  out.kl_per_dim = Eigen::VectorXd::Zero(total);
  constexpr Eigen::Index kChunk = 512;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    Eigen::Index len = std::min(kChunk, n - start);
    Eigen::MatrixXd x = data.images.middleCols(start, len);
    Eigen::MatrixXd zin(total + model.label_width, len);
    for (int g = 0; g < model.group_count(); ++g) {
      int d = model.group_dims[g];
      int off = model.group_offset(g);
      Eigen::MatrixXd h = model.group_encoders[g].forward(x, nullptr);
      Eigen::MatrixXd mu = h.topRows(d);
      Eigen::MatrixXd lv = h.bottomRows(d);
      out.kl_per_dim.segment(off, d) += kl_per_dim_batch_sum(mu, lv);
      zin.middleRows(off, d) = mu;
    }
    if (model.label_width > 0) {
      zin.bottomRows(model.label_width) = data.labels.middleCols(start, len);
    }
    Eigen::MatrixXd logits = model.decoder.forward(zin, nullptr);
    out.mean_recon_ll += bernoulli_recon_ll_mean(logits, x) * static_cast<double>(len);
  }
  out.kl_per_dim /= static_cast<double>(n);
  out.mean_recon_ll /= static_cast<double>(n);
  out.mean_kl = out.kl_per_dim.sum();
  return out;
}

FvaeTrainer::FvaeTrainer(FvaeModel& model, const ImageDataset& data, const TrainConfig& cfg,
                         std::uint64_t seed)
    : model_(model),
      data_(BatchSource::from_dataset(data, cfg.label_mix_target)),
      cfg_(cfg),
      batch_rng_(seed, "batch"),
      noise_rng_(seed, "noise"),
      dec_state_(model.decoder.blocks()),
      dec_grads_(model.decoder.make_grad_buffers()) {
  cfg_.validate();
  if (data_.label_width() != model.label_width) {
    throw ConfigError("model label width does not match the dataset's mixed labels");
  }
  for (auto& enc : model_.group_encoders) {
    group_states_.emplace_back(enc.blocks());
    group_grads_.push_back(enc.make_grad_buffers());
  }
}

BatchLossStats FvaeTrainer::step(const Phase& phase, long step_index) {
  const int total = model_.total_latent();
  const Eigen::Index n = data_.count();

  Eigen::MatrixXd x(data_.images.rows(), cfg_.batch);
  Eigen::MatrixXd labels(data_.labels.rows(), cfg_.batch);
  for (int b = 0; b < cfg_.batch; ++b) {
    Eigen::Index i = batch_rng_.uniform_index(static_cast<std::uint32_t>(n));
    x.col(b) = data_.images.col(i);
    if (labels.rows() > 0) labels.col(b) = data_.labels.col(i);
  }
  Eigen::MatrixXd noise(total, cfg_.batch);
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = noise_rng_.normal();

  for (auto& grads : group_grads_) {
    for (auto& g : grads) g.setZero();
  }
  for (auto& g : dec_grads_) g.setZero();

  BatchLossStats stats = fvae_batch_loss(model_, x, noise, labels, phase.active_group, phase.beta,
                                         &group_grads_, &dec_grads_);
  if (!std::isfinite(stats.loss)) {
    throw TrainingError("non-finite loss", phase.active_group, step_index);
  }
  try {
    for (int g = 0; g < model_.group_count(); ++g) {
      group_states_[g].step(model_.group_encoders[g].blocks(), group_grads_[g],
                            phase.encoder_lr[g], cfg_.adam,
                            model_.group_encoders[g].block_names());
    }
    dec_state_.step(model_.decoder.blocks(), dec_grads_, phase.decoder_lr, cfg_.adam,
                    model_.decoder.block_names());
  } catch (const TrainingError& e) {
    throw TrainingError(e.what(), phase.active_group, step_index);
  }
  return stats;
}

EvalStats FvaeTrainer::evaluate() const { return evaluate_fvae(model_, data_); }

std::vector<TrainingTrace> train_fvae(FvaeModel& model, const ImageDataset& data,
                                      const PhaseSchedule& schedule, const TrainConfig& cfg,
                                      std::uint64_t seed) {
  schedule.validate(model.group_count());
  FvaeTrainer trainer(model, data, cfg, seed);

  std::vector<TrainingTrace> traces;
  long global_step = 0;
  for (const Phase& phase : schedule.phases) {
    TrainingTrace trace;
    long recorded = (phase.steps + cfg.trace_stride - 1) / cfg.trace_stride;
    trace.kl_per_dim.resize(model.total_latent(), recorded);
    trace.kl_per_group.resize(model.group_count(), recorded);
    long col = 0;
    for (long s = 0; s < phase.steps; ++s, ++global_step) {
      BatchLossStats stats = trainer.step(phase, global_step);
      if (s % cfg.trace_stride == 0) {
        trace.steps.push_back(global_step);
        trace.loss.push_back(stats.loss);
        trace.recon_ll.push_back(stats.recon_ll);
        trace.kl_total.push_back(stats.kl_total);
        trace.kl_per_dim.col(col) = stats.kl_per_dim;
        trace.kl_per_group.col(col) = stats.kl_per_group;
        ++col;
      }
      if (cfg.eval_interval > 0 && (s + 1) % cfg.eval_interval == 0) {
        EvalStats ev = trainer.evaluate();
        trace.eval_steps.push_back(global_step + 1);
        trace.eval_recon_loss.push_back(-ev.mean_recon_ll);
        trace.eval_kl.push_back(ev.mean_kl);
      }
    }
    trace.kl_per_dim.conservativeResize(Eigen::NoChange, col);
    trace.kl_per_group.conservativeResize(Eigen::NoChange, col);
    EvalStats final = trainer.evaluate();
    trace.final_kl = final.mean_kl;
    trace.final_recon_ll = final.mean_recon_ll;
    trace.final_kl_per_dim = final.kl_per_dim;
    traces.push_back(std::move(trace));
  }
  return traces;
}

void save_fvae(const std::filesystem::path& path, const FvaeModel& model,
               std::uint32_t phase_index) {
  Checkpoint ckpt;
  ckpt.phase_index = phase_index;
  std::ostringstream spec;
  spec << arch_to_spec(model.arch) << ";labels=" << model.label_width << ";groups=";
  for (int g = 0; g < model.group_count(); ++g) spec << (g ? "," : "") << model.group_dims[g];
  ckpt.model_spec = spec.str();
  for (int g = 0; g < model.group_count(); ++g) {
    const auto& enc = model.group_encoders[g];
    for (std::size_t i = 0; i < enc.blocks().size(); ++i) {
      ckpt.block_names.push_back("enc" + std::to_string(g + 1) + "." + enc.block_names()[i]);
      ckpt.blocks.push_back(enc.blocks()[i]);
    }
  }
  for (std::size_t i = 0; i < model.decoder.blocks().size(); ++i) {
    ckpt.block_names.push_back("dec." + model.decoder.block_names()[i]);
    ckpt.blocks.push_back(model.decoder.blocks()[i]);
  }
  write_checkpoint(path, ckpt);
}

FvaeModel load_fvae(const std::filesystem::path& path, std::uint32_t* phase_index) {
  Checkpoint ckpt = read_checkpoint(path);
  if (phase_index) *phase_index = ckpt.phase_index;
  ArchitectureConfig arch = arch_from_spec(ckpt.model_spec);

  int label_width = 0;
  std::vector<int> group_dims;
  std::stringstream ss(ckpt.model_spec);
  std::string field;
  while (std::getline(ss, field, ';')) {
    if (field.starts_with("labels=")) label_width = std::stoi(field.substr(7));
    if (field.starts_with("groups=")) {
      std::stringstream gs(field.substr(7));
      std::string item;
      while (std::getline(gs, item, ',')) group_dims.push_back(std::stoi(item));
    }
  }
  if (group_dims.empty()) throw FormatError("checkpoint lacks a groups= field", 0);

  RandomStream dummy(0, "init");
  FvaeModel model = FvaeModel::create(arch, group_dims, label_width, dummy);
  std::size_t expected = model.decoder.blocks().size();
  for (const auto& enc : model.group_encoders) expected += enc.blocks().size();
  if (ckpt.blocks.size() != expected) {
    throw FormatError("checkpoint block count does not match the declared architecture", 0);
  }
  std::size_t idx = 0;
  for (auto& enc : model.group_encoders) {
    for (auto& block : enc.blocks()) {
      if (block.rows() != ckpt.blocks[idx].rows() || block.cols() != ckpt.blocks[idx].cols()) {
        throw FormatError("checkpoint block shape mismatch at \"" + ckpt.block_names[idx] + "\"",
                          0);
      }
      block = ckpt.blocks[idx++];
    }
  }
  for (auto& block : model.decoder.blocks()) {
    if (block.rows() != ckpt.blocks[idx].rows() || block.cols() != ckpt.blocks[idx].cols()) {
      throw FormatError("checkpoint block shape mismatch at \"" + ckpt.block_names[idx] + "\"", 0);
    }
    block = ckpt.blocks[idx++];
  }
  return model;
}

}  // namespace dlab
