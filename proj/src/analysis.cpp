#include "dlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

LatentCodec make_codec(const VaeModel& model) {
  LatentCodec c;
  c.latent_dim = model.arch.latent_dim;
  c.label_width = model.label_width;
  c.encode = [&model](std::span<const double> image) { return model.encode(image); };
  c.decode = [&model](const Eigen::VectorXd& z, std::span<const double> labels) {
    return model.decode(z, labels);
  };
  return c;
}

LatentCodec make_codec(const FvaeModel& model) {
  LatentCodec c;
  c.latent_dim = model.total_latent();
  c.label_width = model.label_width;
  c.encode = [&model](std::span<const double> image) {
    auto posts = model.encode_groups(image);
    GaussianPosterior joint;
    joint.mean.resize(model.total_latent());
    joint.log_var.resize(model.total_latent());
    for (int g = 0; g < model.group_count(); ++g) {
      joint.mean.segment(model.group_offset(g), model.group_dims[g]) = posts[g].mean;
      joint.log_var.segment(model.group_offset(g), model.group_dims[g]) = posts[g].log_var;
    }
    return joint;
  };
  c.decode = [&model](const Eigen::VectorXd& z, std::span<const double> labels) {
    return model.decode(z, labels);
  };
  return c;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

double sequence_entropy(const ActionSequence& seq) {
  if (seq.frames.empty()) throw ConfigError("sequence_entropy: empty sequence");
  const std::size_t pix = seq.frames.front().pixels.size();
  const double n = static_cast<double>(seq.frames.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pix; ++i) {
    double lit = 0.0;
    for (const Image& f : seq.frames) lit += f.pixels[i];
    total += binary_entropy(lit / n);
  }
  return total;
}

GrayImage afterimage(const ActionSequence& seq) {
  if (seq.frames.empty()) throw ConfigError("afterimage: empty sequence");
  const double n = static_cast<double>(seq.frames.size());
  GrayImage out{seq.width, seq.height, std::vector<double>(seq.frames.front().pixels.size(), 0.0)};
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    double brightness = (static_cast<double>(f) + 1.0) / n;
    const auto& px = seq.frames[f].pixels;
    for (std::size_t i = 0; i < px.size(); ++i) {
      out.pixels[i] = std::max(out.pixels[i], px[i] * brightness);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SweepResult beta_sweep(const ImageDataset& data, const std::vector<double>& betas,
                       const TrainSetup& setup, const std::vector<std::uint64_t>& seeds,
                       int jobs) {
  if (betas.empty()) throw ConfigError("beta_sweep: empty beta grid");
  for (std::size_t i = 1; i < betas.size(); ++i) {
    if (!(betas[i] > betas[i - 1])) {
      throw ConfigError("beta_sweep: beta grid must be strictly increasing");
    }
  }
  if (seeds.empty()) throw ConfigError("beta_sweep: need at least one seed");

  SweepResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.points.resize(betas.size());
  for (std::size_t b = 0; b < betas.size(); ++b) {
    result.points[b].beta = betas[b];
    result.points[b].kl_per_seed.resize(seeds.size());
    result.points[b].recon_per_seed.resize(seeds.size());
  }

  run_indexed_jobs(betas.size() * seeds.size(), jobs, [&](std::size_t idx) {
    std::size_t b = idx / seeds.size();
    std::size_t s = idx % seeds.size();
    TrainSetup job = setup;
    job.objective.kind = ObjectiveKind::kBetaVae;
    job.objective.beta = betas[b];
    RandomStream init(seeds[s], "init");
    VaeModel model = VaeModel::create(
        job.arch, job.train.label_mix_target.empty()
                      ? 0
                      : mixed_label_width(data.spec(), job.train.label_mix_target),
        init);
    try {
      TrainingTrace trace = train_vae(model, data, job.objective, job.train, seeds[s]);
      result.points[b].kl_per_seed[s] = trace.final_kl;
      result.points[b].recon_per_seed[s] = trace.final_recon_ll;
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " (beta " + std::to_string(betas[b]) +
                              ", seed " + std::to_string(seeds[s]) + ")",
                          e.phase(), e.step());
    }
  });

  for (auto& p : result.points) {
    p.mean_kl = std::accumulate(p.kl_per_seed.begin(), p.kl_per_seed.end(), 0.0) /
                static_cast<double>(p.kl_per_seed.size());
    p.mean_recon_ll = std::accumulate(p.recon_per_seed.begin(), p.recon_per_seed.end(), 0.0) /
                      static_cast<double>(p.recon_per_seed.size());
  }
  return result;
}

SweepResult sweep_for_seed(const SweepResult& sweep, std::size_t seed_index) {
  if (seed_index >= sweep.seeds.size()) throw ConfigError("sweep_for_seed: seed index range");
  SweepResult out;
  out.seeds = {sweep.seeds[seed_index]};
  for (const auto& p : sweep.points) {
    SweepPoint q;
    q.beta = p.beta;
    q.mean_kl = p.kl_per_seed[seed_index];
    q.mean_recon_ll = p.recon_per_seed[seed_index];
    q.kl_per_seed = {q.mean_kl};
    q.recon_per_seed = {q.mean_recon_ll};
    out.points.push_back(std::move(q));
  }
  return out;
}

std::string ThresholdEstimate::to_string() const {
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (kind) {
    case ThresholdKind::kBelowGrid: return "<" + fmt(beta);
    case ThresholdKind::kWithin: return fmt(beta);
    case ThresholdKind::kAboveGrid: return fmt(beta) + "+";
  }
  return "?";
}

ThresholdEstimate estimate_threshold(const SweepResult& sweep, double eps_info) {
  if (sweep.points.size() < 2) throw ConfigError("estimate_threshold: need >= 2 sweep points");
  ThresholdEstimate est;
  est.kind = ThresholdKind::kBelowGrid;
  est.beta = sweep.points.front().beta;
  bool all = true;
  for (const auto& p : sweep.points) {
    if (p.mean_kl >= eps_info) {
      est.kind = ThresholdKind::kWithin;
      est.beta = p.beta;
    } else {
      all = false;
    }
  }
  if (all) {
    est.kind = ThresholdKind::kAboveGrid;
    est.beta = sweep.points.back().beta;
  }
  return est;
}

bool threshold_less(const ThresholdEstimate& a, const ThresholdEstimate& b) {
  auto rank = [](ThresholdKind k) {
    return k == ThresholdKind::kBelowGrid ? 0 : k == ThresholdKind::kWithin ? 1 : 2;
  };
  if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
  if (a.kind == ThresholdKind::kWithin) return a.beta < b.beta;
  return false;  // both at the same grid edge: not comparable
}

// ---------------------------------------------------------------------------

std::vector<AnnealingTrace::CriticalPoint> detect_critical_points(
    const std::vector<double>& level_betas, const std::vector<double>& level_kl, double delta) {
  if (delta <= 0.0) throw ConfigError("critical-point delta must be positive");
  if (level_betas.size() != level_kl.size()) {
    throw ConfigError("critical-point detector: beta/kl length mismatch");
  }
  std::vector<AnnealingTrace::CriticalPoint> points;
  for (std::size_t i = 1; i < level_kl.size(); ++i) {
    double jump = level_kl[i] - level_kl[i - 1];
    if (jump >= delta) points.push_back({level_betas[i], jump});
  }
  return points;
}

std::vector<double> annealing_schedule(double beta_high, double beta_low, int levels) {
  if (levels < 2 || beta_high <= 0.0 || beta_low <= 0.0 || beta_high < beta_low) {
    throw ConfigError("annealing schedule needs beta_high >= beta_low > 0 and >= 2 levels");
  }
  std::vector<double> betas(levels);
  double ratio = std::pow(beta_low / beta_high, 1.0 / (levels - 1));
  double b = beta_high;
  for (int i = 0; i < levels; ++i) {
    betas[i] = b;
    b *= ratio;
  }
  betas.back() = beta_low;
  return betas;
}

AnnealingTrace annealing_test(const ImageDataset& data, const std::vector<double>& beta_levels,
                              long steps_per_level, double delta, const TrainSetup& setup,
                              std::uint64_t seed) {
  if (beta_levels.empty()) throw ConfigError("annealing_test: empty schedule");
  for (std::size_t i = 1; i < beta_levels.size(); ++i) {
    if (beta_levels[i] > beta_levels[i - 1]) {
      throw ConfigError("annealing_test: beta schedule must be non-increasing");
    }
  }
  if (steps_per_level < 1) throw ConfigError("annealing_test: steps_per_level must be >= 1");

  RandomStream init(seed, "init");
  VaeModel model = VaeModel::create(
      setup.arch,
      setup.train.label_mix_target.empty()
          ? 0
          : mixed_label_width(data.spec(), setup.train.label_mix_target),
      init);
  VaeTrainer trainer(model, data, setup.train, seed);

  AnnealingTrace trace;
  ObjectiveConfig obj = setup.objective;
  obj.kind = ObjectiveKind::kBetaVae;
  long eval_interval = setup.train.eval_interval > 0 ? setup.train.eval_interval
                                                     : std::max<long>(1, steps_per_level / 4);
  long global = 0;
  for (std::size_t level = 0; level < beta_levels.size(); ++level) {
    obj.beta = beta_levels[level];
    for (long s = 0; s < steps_per_level; ++s, ++global) {
      try {
        trainer.step(obj, global);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " (annealing level " + std::to_string(level) +
                                ")",
                            e.phase(), e.step());
      }
      if ((global + 1) % eval_interval == 0) {
        trace.iters.push_back(global + 1);
        trace.beta_at_iter.push_back(obj.beta);
        trace.kl_at_iter.push_back(trainer.evaluate().mean_kl);
      }
    }
    trace.level_betas.push_back(obj.beta);
    trace.level_kl.push_back(trainer.evaluate().mean_kl);
  }
  trace.critical_points = detect_critical_points(trace.level_betas, trace.level_kl, delta);
  return trace;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd encode_means(const LatentCodec& codec, const ImageDataset& data,
                             const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd codes(codec.latent_dim, static_cast<Eigen::Index>(rows.size()));
  std::vector<double> image(data.image_size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::uint8_t* px = data.image_data(rows[k]);
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = px[i];
    codes.col(static_cast<Eigen::Index>(k)) = codec.encode(image).mean;
  }
  return codes;
}

std::vector<std::size_t> strided_subset(std::size_t n, std::size_t want) {
  if (want == 0 || want >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<std::size_t> rows(want);
  for (std::size_t k = 0; k < want; ++k) rows[k] = k * n / want;
  return rows;
}

// Plug-in discrete mutual information of a (bins x values) joint count table.
double discrete_mi(const Eigen::MatrixXd& joint_counts) {
  double n = joint_counts.sum();
  if (n <= 0.0) return 0.0;
  Eigen::VectorXd pz = joint_counts.rowwise().sum() / n;
  Eigen::VectorXd pv = joint_counts.colwise().sum().transpose() / n;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint_counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint_counts.cols(); ++j) {
      double pij = joint_counts(i, j) / n;
      if (pij > 0.0) mi += pij * std::log(pij / (pz[i] * pv[j]));
    }
  }
  return std::max(mi, 0.0);
}

MigReport mig_impl(const Eigen::MatrixXd& codes, const ImageDataset& data,
                   const std::vector<std::size_t>& rows, int bins) {
  if (bins < 2) throw ConfigError("mig: bins must be >= 2");
  const Eigen::Index d = codes.rows();
  const Eigen::Index n = codes.cols();
  const FactorSpec& spec = data.spec();

  // Discretize each latent dimension over its observed range.
  Eigen::MatrixXi discrete(d, n);
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = codes.row(j).minCoeff(), hi = codes.row(j).maxCoeff();
    double width = hi - lo;
    for (Eigen::Index k = 0; k < n; ++k) {
      int bin = width > 0.0
                    ? std::min(bins - 1, static_cast<int>((codes(j, k) - lo) / width * bins))
                    : 0;
      discrete(j, k) = bin;
    }
  }

  MigReport report;
  report.bins = bins;
  double sum_gap = 0.0;
  int counted = 0;
  for (std::size_t f = 0; f < spec.count(); ++f) {
    const auto& factor = spec.factors[f];
    int values = static_cast<int>(factor.values.size());
    if (values < 2) continue;  // zero entropy: excluded from the mean

    Eigen::VectorXd pv = Eigen::VectorXd::Zero(values);
    for (Eigen::Index k = 0; k < n; ++k) pv[data.label_data(rows[k])[f]] += 1.0;
    pv /= static_cast<double>(n);
    double h = 0.0;
    for (int v = 0; v < values; ++v) {
      if (pv[v] > 0.0) h -= pv[v] * std::log(pv[v]);
    }
    if (h <= 0.0) continue;

    double top = -1.0, second = -1.0;
    int top_dim = -1;
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, values);
      for (Eigen::Index k = 0; k < n; ++k) {
        joint(discrete(j, k), data.label_data(rows[k])[f]) += 1.0;
      }
      double mi = discrete_mi(joint);
      if (mi > top) {
        second = top;
        top = mi;
        top_dim = static_cast<int>(j);
      } else if (mi > second) {
        second = mi;
      }
    }
    if (second < 0.0) second = 0.0;  // single latent dimension

    MigReport::FactorInfo info;
    info.name = factor.name;
    info.mi_top = top;
    info.mi_second = second;
    info.entropy = h;
    info.gap = std::max(0.0, (top - second) / h);
    info.top_dim = top_dim;
    report.factors.push_back(info);
    sum_gap += info.gap;
    ++counted;
  }
  report.score = counted > 0 ? sum_gap / counted : 0.0;
  return report;
}

}  // namespace

MigReport mig(const LatentCodec& codec, const ImageDataset& data, int bins,
              std::size_t n_samples) {
  if (data.count() == 0) throw ConfigError("mig: empty dataset");
  std::vector<std::size_t> rows = strided_subset(data.count(), n_samples);
  Eigen::MatrixXd codes = encode_means(codec, data, rows);
  return mig_impl(codes, data, rows, bins);
}

MigReport mig_from_codes(const Eigen::MatrixXd& codes, const ImageDataset& data, int bins) {
  if (static_cast<std::size_t>(codes.cols()) != data.count()) {
    throw ConfigError("mig_from_codes: one code column per image required");
  }
  std::vector<std::size_t> rows(data.count());
  std::iota(rows.begin(), rows.end(), 0);
  return mig_impl(codes, data, rows, bins);
}

Eigen::VectorXd mean_kl_per_dim(const LatentCodec& codec, const ImageDataset& data) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(codec.latent_dim);
  std::vector<double> image(data.image_size());
  for (std::size_t i = 0; i < data.count(); ++i) {
    const std::uint8_t* px = data.image_data(i);
    for (std::size_t k = 0; k < image.size(); ++k) image[k] = px[k];
    total += kl_divergence(codec.encode(image)).first;
  }
  return total / static_cast<double>(data.count());
}

std::vector<int> active_units(const LatentCodec& codec, const ImageDataset& data, double eps) {
  Eigen::VectorXd mean_kl = mean_kl_per_dim(codec, data);
  std::vector<int> dims;
  for (Eigen::Index j = 0; j < mean_kl.size(); ++j) {
    if (mean_kl[j] > eps) dims.push_back(static_cast<int>(j));
  }
  return dims;
}

// ---------------------------------------------------------------------------

std::vector<GrayImage> latent_traversal(const LatentCodec& codec, const ImageDataset& data,
                                        std::size_t anchor_index, int dim, double range,
                                        int steps, std::span<const double> labels) {
  if (steps < 2) throw ConfigError("latent_traversal: steps must be >= 2");
  if (dim < 0 || dim >= codec.latent_dim) throw ConfigError("latent_traversal: dim out of range");
  if (anchor_index >= data.count()) throw ConfigError("latent_traversal: anchor out of range");
  if (static_cast<int>(labels.size()) != codec.label_width) {
    throw ConfigError("latent_traversal: label width mismatch");
  }

  std::vector<double> image(data.image_size());
  const std::uint8_t* px = data.image_data(anchor_index);
  for (std::size_t k = 0; k < image.size(); ++k) image[k] = px[k];
  GaussianPosterior post = codec.encode(image);

  std::vector<GrayImage> out;
  out.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    double offset = -range + 2.0 * range * s / (steps - 1);
    Eigen::VectorXd z = post.mean;
    z[dim] = post.mean[dim] + offset;
    Eigen::VectorXd p = codec.decode(z, labels);
    GrayImage im{data.width(), data.height(), std::vector<double>(p.data(), p.data() + p.size())};
    out.push_back(std::move(im));
  }
  return out;
}

ProjectionTable latent_projection(const LatentCodec& codec, const ImageDataset& data, int dim_i,
                                  int dim_j) {
  if (dim_i < 0 || dim_i >= codec.latent_dim || dim_j < 0 || dim_j >= codec.latent_dim) {
    throw ConfigError("latent_projection: dims out of range");
  }
  ProjectionTable table;
  table.dim_i = dim_i;
  table.dim_j = dim_j;

  std::vector<std::size_t> rows(data.count());
  std::iota(rows.begin(), rows.end(), 0);
  Eigen::MatrixXd codes = encode_means(codec, data, rows);
  table.points.resize(data.count());
  for (std::size_t k = 0; k < data.count(); ++k) {
    table.points[k] = {codes(dim_i, static_cast<Eigen::Index>(k)),
                       codes(dim_j, static_cast<Eigen::Index>(k))};
  }

  const FactorSpec& spec = data.spec();
  for (std::size_t f = 0; f < spec.count(); ++f) {
    ProjectionTable::FactorLines fl;
    fl.factor = spec.factors[f].name;
    // One polyline per combination of the other factors' labels.
    std::map<std::vector<std::uint32_t>, std::vector<std::pair<std::uint32_t, std::size_t>>>
        groups;
    for (std::size_t i = 0; i < data.count(); ++i) {
      const std::uint32_t* lab = data.label_data(i);
      std::vector<std::uint32_t> key;
      key.reserve(spec.count() - 1);
      for (std::size_t k = 0; k < spec.count(); ++k) {
        if (k != f) key.push_back(lab[k]);
      }
      groups[std::move(key)].emplace_back(lab[f], i);
    }
    for (auto& [key, members] : groups) {
      if (members.size() < 2) continue;
      std::sort(members.begin(), members.end());
      std::vector<std::size_t> line;
      line.reserve(members.size());
      for (auto& [v, idx] : members) line.push_back(idx);
      fl.lines.push_back(std::move(line));
    }
    table.lines.push_back(std::move(fl));
  }
  return table;
}

namespace {

double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double ma = a.mean(), mb = b.mean();
  Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  double va = (da * da).sum(), vb = (db * db).sum();
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  double cov = (da * db).sum();
  return (cov * cov) / (va * vb);
}

}  // namespace

std::pair<double, double> axis_alignment(const ProjectionTable& projection,
                                         const ImageDataset& data, double theta) {
  if (data.spec().count() != 2) {
    throw ConfigError("axis_alignment: needs a two-factor position dataset");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(projection.points.size());
  if (static_cast<std::size_t>(n) != data.count()) {
    throw ConfigError("axis_alignment: projection does not match the dataset");
  }
  Eigen::VectorXd mi(n), mj(n), u(n), v(n);
  double c = std::cos(theta), s = std::sin(theta);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::uint32_t* lab = data.label_data(static_cast<std::size_t>(k));
    double x = data.spec().factors[0].values[lab[0]];
    double y = data.spec().factors[1].values[lab[1]];
    u[k] = c * x + s * y;
    v[k] = -s * x + c * y;
    mi[k] = projection.points[k][0];
    mj[k] = projection.points[k][1];
  }
  return {squared_correlation(mi, u), squared_correlation(mj, v)};
}

FrameFit best_fit_frame(const ProjectionTable& projection, const ImageDataset& data,
                        double step_deg) {
  if (step_deg <= 0.0) throw ConfigError("best_fit_frame: step must be positive");
  FrameFit best;
  double best_score = -1.0;
  for (double deg = 0.0; deg < 180.0; deg += step_deg) {
    auto [r2i, r2j] = axis_alignment(projection, data, deg * std::numbers::pi / 180.0);
    double score = 0.5 * (r2i + r2j);
    if (score > best_score) {
      best_score = score;
      best.theta_deg = std::fmod(deg, 90.0);
      best.r2_i = r2i;
      best.r2_j = r2j;
    }
  }
  return best;
}

double frame_angle_distance_deg(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 90.0);
  return std::min(d, 90.0 - d);
}

// ---------------------------------------------------------------------------

std::vector<LearningCurve> learning_curve_compare(
    const std::vector<std::pair<std::string, ImageDataset>>& named, const TrainSetup& setup,
    const std::vector<std::uint64_t>& seeds, int jobs) {
  if (named.empty()) throw ConfigError("learning_curve_compare: no sequences");
  if (seeds.empty()) throw ConfigError("learning_curve_compare: need at least one seed");
  if (setup.train.eval_interval < 1) {
    throw ConfigError("learning_curve_compare: eval_interval must be >= 1");
  }
  if (setup.train.steps < 1) throw ConfigError("learning_curve_compare: step budget must be >= 1");

  std::vector<LearningCurve> curves(named.size() * seeds.size());
  run_indexed_jobs(curves.size(), jobs, [&](std::size_t idx) {
    std::size_t d = idx / seeds.size();
    std::size_t s = idx % seeds.size();
    RandomStream init(seeds[s], "init");
    VaeModel model = VaeModel::create(setup.arch, 0, init);
    TrainingTrace trace = train_vae(model, named[d].second, setup.objective, setup.train, seeds[s]);
    LearningCurve curve;
    curve.name = named[d].first;
    curve.seed = seeds[s];
    curve.iters = trace.eval_steps;
    curve.loss = trace.eval_recon_loss;
    curves[idx] = std::move(curve);
  });
  return curves;
}

std::optional<long> iterations_to_reach(const LearningCurve& curve, double target) {
  for (std::size_t i = 0; i < curve.loss.size(); ++i) {
    if (curve.loss[i] <= target) return curve.iters[i];
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

double spearman_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ConfigError("spearman: need two equal-length samples");
  }
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j));  // tie-averaged
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> rx = ranks(xs), ry = ranks(ys);
  Eigen::Map<Eigen::VectorXd> vx(rx.data(), static_cast<Eigen::Index>(rx.size()));
  Eigen::Map<Eigen::VectorXd> vy(ry.data(), static_cast<Eigen::Index>(ry.size()));
  double r2 = squared_correlation(vx, vy);
  double cov = ((vx.array() - vx.mean()) * (vy.array() - vy.mean())).sum();
  return cov >= 0.0 ? std::sqrt(r2) : -std::sqrt(r2);
}

}  // namespace dlab
