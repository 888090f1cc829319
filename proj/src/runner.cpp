#include "dlab/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <numeric>

#include "dlab/analysis.hpp"
#include "dlab/csv.hpp"
#include "dlab/dataset_io.hpp"
#include "dlab/errors.hpp"
#include "dlab/fvae.hpp"
#include "dlab/generators.hpp"
#include "dlab/images_io.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

namespace {

namespace fs = std::filesystem;

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Artifacts are written under "<name>.partial" and renamed on success, so a
// failed run never leaves files that look complete.
class ArtifactSink {
 public:
  explicit ArtifactSink(fs::path out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  fs::path stage(const std::string& name) {
    names_.push_back(name);
    return out_dir_ / (name + ".partial");
  }

  void finalize() {
    for (const auto& name : names_) {
      fs::rename(out_dir_ / (name + ".partial"), out_dir_ / name);
    }
  }

  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return out_dir_; }

 private:
  fs::path out_dir_;
  std::vector<std::string> names_;
};

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

TrainSetup setup_from(const ExperimentConfig& cfg) {
  TrainSetup s;
  s.arch = cfg.arch;
  s.objective = cfg.objective;
  s.train = cfg.train;
  return s;
}

PhaseSchedule schedule_from(const ExperimentConfig& cfg, int group_count) {
  return PhaseSchedule::staged_defaults(group_count, cfg.schedule_betas,
                                        cfg.schedule_steps_per_phase, cfg.schedule_lr_active,
                                        cfg.schedule_lr_learned);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

VaeModel train_or_load_vae(const ExperimentConfig& cfg, const ImageDataset& data) {
  if (!cfg.model_checkpoint.empty()) return load_vae(cfg.model_checkpoint);
  RandomStream init(cfg.seeds.front(), "init");
  int label_width = cfg.train.label_mix_target.empty()
                        ? 0
                        : mixed_label_width(data.spec(), cfg.train.label_mix_target);
  VaeModel model = VaeModel::create(cfg.arch, label_width, init);
  train_vae(model, data, cfg.objective, cfg.train, cfg.seeds.front());
  return model;
}

GrayImage traversal_grid(const LatentCodec& codec, const ImageDataset& data,
                         const ExperimentConfig& cfg, std::span<const double> labels) {
  std::vector<int> dims;
  if (cfg.traverse_dim >= 0) {
    dims.push_back(cfg.traverse_dim);
  } else {
    dims = active_units(codec, data, cfg.traverse_eps_active);
    if (dims.empty()) {
      for (int j = 0; j < codec.latent_dim; ++j) dims.push_back(j);
    }
  }
  std::vector<GrayImage> tiles;
  for (int dim : dims) {
    auto strip = latent_traversal(codec, data, static_cast<std::size_t>(cfg.traverse_anchor), dim,
                                  cfg.traverse_range, cfg.traverse_steps, labels);
    tiles.insert(tiles.end(), strip.begin(), strip.end());
  }
  return tile_images(tiles, cfg.traverse_steps);
}

// Scatter plus per-factor polylines rendered onto a square canvas.
GrayImage render_projection(const ProjectionTable& table) {
  constexpr int kSize = 480, kPad = 16;
  GrayImage out{kSize, kSize, std::vector<double>(kSize * kSize, 0.0)};
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& p : table.points) {
    lo_x = std::min(lo_x, p[0]);
    hi_x = std::max(hi_x, p[0]);
    lo_y = std::min(lo_y, p[1]);
    hi_y = std::max(hi_y, p[1]);
  }
  if (hi_x <= lo_x) hi_x = lo_x + 1.0;
  if (hi_y <= lo_y) hi_y = lo_y + 1.0;
  auto to_px = [&](const std::array<double, 2>& p) {
    int x = kPad + static_cast<int>((p[0] - lo_x) / (hi_x - lo_x) * (kSize - 2 * kPad));
    int y = kPad + static_cast<int>((p[1] - lo_y) / (hi_y - lo_y) * (kSize - 2 * kPad));
    return std::pair<int, int>{x, kSize - 1 - y};
  };
  auto plot = [&](int x, int y, double v) {
    if (x >= 0 && x < kSize && y >= 0 && y < kSize) {
      auto& px = out.pixels[static_cast<std::size_t>(y) * kSize + x];
      px = std::max(px, v);
    }
  };
  auto line = [&](std::pair<int, int> a, std::pair<int, int> b, double v) {
    int dx = std::abs(b.first - a.first), dy = -std::abs(b.second - a.second);
    int sx = a.first < b.first ? 1 : -1, sy = a.second < b.second ? 1 : -1;
    int err = dx + dy;
    int x = a.first, y = a.second;
    while (true) {
      plot(x, y, v);
      if (x == b.first && y == b.second) break;
      int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  };
  for (std::size_t f = 0; f < table.lines.size(); ++f) {
    double shade = 0.45 + 0.35 * static_cast<double>(f % 2);
    for (const auto& polyline : table.lines[f].lines) {
      for (std::size_t i = 1; i < polyline.size(); ++i) {
        line(to_px(table.points[polyline[i - 1]]), to_px(table.points[polyline[i]]), shade);
      }
    }
  }
  for (const auto& p : table.points) {
    auto [x, y] = to_px(p);
    for (int oy = -1; oy <= 1; ++oy) {
      for (int ox = -1; ox <= 1; ++ox) plot(x + ox, y + oy, 1.0);
    }
  }
  return out;
}

void write_projection_csv(const fs::path& path, const ProjectionTable& table,
                          const ImageDataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");
  out << "mu_i,mu_j";
  for (const auto& f : data.spec().factors) out << "," << f.name;
  out << "\n";
  for (std::size_t i = 0; i < table.points.size(); ++i) {
    out << format_double(table.points[i][0]) << "," << format_double(table.points[i][1]);
    const std::uint32_t* lab = data.label_data(i);
    for (std::size_t k = 0; k < data.spec().count(); ++k) out << "," << lab[k];
    out << "\n";
  }
}

std::pair<int, int> top_two_dims(const Eigen::VectorXd& mean_kl) {
  int first = 0, second = mean_kl.size() > 1 ? 1 : 0;
  if (mean_kl.size() > 1 && mean_kl[1] > mean_kl[0]) std::swap(first, second);
  for (int j = 2; j < mean_kl.size(); ++j) {
    if (mean_kl[j] > mean_kl[first]) {
      second = first;
      first = j;
    } else if (mean_kl[j] > mean_kl[second]) {
      second = j;
    }
  }
  return {first, second};
}

// --- per-kind runners -------------------------------------------------------

void run_gen_data(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  write_dataset(sink.stage("dataset.dseq"), data);
  man.metrics["images"] = static_cast<double>(data.count());
  man.metrics["factors"] = static_cast<double>(data.spec().count());
}

void run_train(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  int label_width = cfg.train.label_mix_target.empty()
                        ? 0
                        : mixed_label_width(data.spec(), cfg.train.label_mix_target);
  std::vector<double> kls(cfg.seeds.size()), recons(cfg.seeds.size());
  std::vector<fs::path> ckpts(cfg.seeds.size());
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    ckpts[s] = sink.stage("model_seed" + std::to_string(cfg.seeds[s]) + ".vckp");
  }
  run_indexed_jobs(cfg.seeds.size(), cfg.jobs, [&](std::size_t s) {
    RandomStream init(cfg.seeds[s], "init");
    VaeModel model = VaeModel::create(cfg.arch, label_width, init);
    TrainingTrace trace = train_vae(model, data, cfg.objective, cfg.train, cfg.seeds[s]);
    save_vae(ckpts[s], model);
    kls[s] = trace.final_kl;
    recons[s] = trace.final_recon_ll;
  });
  std::ofstream metrics(sink.stage("metrics.csv"), std::ios::trunc);
  metrics << "seed,kl_nats,recon_ll\n";
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    metrics << cfg.seeds[s] << "," << format_double(kls[s]) << "," << format_double(recons[s])
            << "\n";
  }
  man.metrics["mean_kl_nats"] = mean_of(kls);
  man.metrics["mean_recon_ll"] = mean_of(recons);
}

void run_fvae_train(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  int label_width = cfg.train.label_mix_target.empty()
                        ? 0
                        : mixed_label_width(data.spec(), cfg.train.label_mix_target);
  PhaseSchedule schedule = schedule_from(cfg, static_cast<int>(cfg.group_dims.size()));
  schedule.validate(static_cast<int>(cfg.group_dims.size()));

  std::ofstream metrics(sink.stage("metrics.csv"), std::ios::trunc);
  metrics << "seed,phase,kl_nats,recon_ll\n";
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    std::uint64_t seed = cfg.seeds[s];
    RandomStream init(seed, "init");
    FvaeModel model = FvaeModel::create(cfg.arch, cfg.group_dims, label_width, init);
    FvaeTrainer trainer(model, data, cfg.train, seed);
    long global = 0;
    for (std::size_t p = 0; p < schedule.phases.size(); ++p) {
      const Phase& phase = schedule.phases[p];
      for (long step = 0; step < phase.steps; ++step, ++global) trainer.step(phase, global);
      EvalStats ev = trainer.evaluate();
      metrics << seed << "," << (p + 1) << "," << format_double(ev.mean_kl) << ","
              << format_double(ev.mean_recon_ll) << "\n";
      std::string tag = "fvae_seed" + std::to_string(seed) + "_phase" + std::to_string(p + 1);
      save_fvae(sink.stage(tag + ".vckp"), model, static_cast<std::uint32_t>(p + 1));
      if (s == 0) {
        std::vector<double> labels;
        if (label_width > 0) {
          auto lab = data.label(static_cast<std::size_t>(cfg.traverse_anchor));
          Eigen::VectorXd mixed = mix_labels(data.spec(), lab, cfg.train.label_mix_target);
          labels.assign(mixed.data(), mixed.data() + mixed.size());
        }
        GrayImage grid = traversal_grid(make_codec(model), data, cfg, labels);
        write_pgm(sink.stage("stage" + std::to_string(p + 1) + "_traversal.pgm"), grid);
        write_png(sink.stage("stage" + std::to_string(p + 1) + "_traversal.png"), grid);
      }
      man.metrics["seed" + std::to_string(seed) + "_phase" + std::to_string(p + 1) + "_kl"] =
          ev.mean_kl;
    }
  }
}

void run_sweep(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  TrainSetup setup = setup_from(cfg);
  ThresholdReport report;
  report.eps_info = cfg.sweep_eps_info;
  report.grid = cfg.sweep_betas;

  auto run_one = [&](const std::string& name, const ImageDataset& data,
                     const std::string& label_target) {
    TrainSetup job = setup;
    job.train.label_mix_target = label_target;
    SweepResult sweep = beta_sweep(data, cfg.sweep_betas, job, cfg.seeds, cfg.jobs);
    write_sweep_csv(sink.stage("sweep_" + name + ".csv"), sweep);
    ThresholdEstimate est = estimate_threshold(sweep, cfg.sweep_eps_info);
    report.per_action.emplace_back(name, est);
    man.notes["threshold_" + name] = est.to_string();
  };

  if (!cfg.sweep_transforms.empty()) {
    for (const auto& kind : cfg.sweep_transforms) {
      ImageDataset data = gen_transformation_suite(transform_kind_from_name(kind),
                                                   cfg.dataset_frames, cfg.dataset_seed,
                                                   cfg.dataset_canvas);
      run_one(kind, data, "");
    }
  } else if (!cfg.sweep_actions.empty()) {
    ImageDataset data = make_dataset(cfg);
    for (const auto& action : cfg.sweep_actions) {
      data.spec().index_of(action);  // fail fast on unknown factors
      run_one(action, data, action);
    }
  } else {
    ImageDataset data = make_dataset(cfg);
    run_one("all", data, cfg.train.label_mix_target);
  }
  write_thresholds_csv(sink.stage("thresholds.csv"), report);
}

void run_anneal(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  TrainSetup setup = setup_from(cfg);
  std::vector<double> levels =
      annealing_schedule(cfg.anneal_beta_high, cfg.anneal_beta_low, cfg.anneal_levels);
  long steps_per_level = cfg.anneal_steps_per_level > 0
                             ? cfg.anneal_steps_per_level
                             : std::max<long>(1, cfg.train.steps / cfg.anneal_levels);
  for (std::uint64_t seed : cfg.seeds) {
    AnnealingTrace trace =
        annealing_test(data, levels, steps_per_level, cfg.anneal_delta, setup, seed);
    std::string tag = "_seed" + std::to_string(seed);
    write_annealing_csv(sink.stage("anneal" + tag + ".csv"), trace);
    std::ofstream crit(sink.stage("critical" + tag + ".csv"), std::ios::trunc);
    crit << "beta,kl_jump\n";
    for (const auto& c : trace.critical_points) {
      crit << format_double(c.beta) << "," << format_double(c.kl_jump) << "\n";
    }
    man.metrics["critical_points_seed" + std::to_string(seed)] =
        static_cast<double>(trace.critical_points.size());
  }
}

void run_traverse(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  VaeModel model = train_or_load_vae(cfg, data);
  LatentCodec codec = make_codec(model);
  std::vector<double> labels;
  if (model.label_width > 0) {
    auto lab = data.label(static_cast<std::size_t>(cfg.traverse_anchor));
    Eigen::VectorXd mixed = mix_labels(data.spec(), lab, cfg.train.label_mix_target);
    labels.assign(mixed.data(), mixed.data() + mixed.size());
  }
  GrayImage grid = traversal_grid(codec, data, cfg, labels);
  write_pgm(sink.stage("traversal.pgm"), grid);
  write_png(sink.stage("traversal.png"), grid);
  man.metrics["active_units"] =
      static_cast<double>(active_units(codec, data, cfg.traverse_eps_active).size());
}

void run_project(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  VaeModel model = train_or_load_vae(cfg, data);
  LatentCodec codec = make_codec(model);
  int dim_i = cfg.project_dim_i, dim_j = cfg.project_dim_j;
  if (dim_i < 0 || dim_j < 0) {
    auto [a, b] = top_two_dims(mean_kl_per_dim(codec, data));
    dim_i = a;
    dim_j = b;
  }
  ProjectionTable table = latent_projection(codec, data, dim_i, dim_j);
  write_projection_csv(sink.stage("projection.csv"), table, data);
  write_pgm(sink.stage("projection.pgm"), render_projection(table));
  write_png(sink.stage("projection.png"), render_projection(table));
  man.metrics["dim_i"] = dim_i;
  man.metrics["dim_j"] = dim_j;
  if (data.spec().count() == 2) {
    FrameFit fit = best_fit_frame(table, data);
    man.metrics["frame_deg"] = fit.theta_deg;
    man.metrics["frame_r2_i"] = fit.r2_i;
    man.metrics["frame_r2_j"] = fit.r2_j;
  }
}

void run_mig(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  if (!cfg.model_checkpoint.empty()) {
    VaeModel model = load_vae(cfg.model_checkpoint);
    MigReport report = mig(make_codec(model), data, cfg.mig_bins,
                           static_cast<std::size_t>(cfg.mig_samples));
    write_mig_csv(sink.stage("mig.csv"), report);
    man.metrics["mig"] = report.score;
    return;
  }
  std::vector<double> scores(cfg.seeds.size());
  std::vector<MigReport> reports(cfg.seeds.size());
  run_indexed_jobs(cfg.seeds.size(), cfg.jobs, [&](std::size_t s) {
    RandomStream init(cfg.seeds[s], "init");
    VaeModel model = VaeModel::create(cfg.arch, 0, init);
    train_vae(model, data, cfg.objective, cfg.train, cfg.seeds[s]);
    reports[s] = mig(make_codec(model), data, cfg.mig_bins,
                     static_cast<std::size_t>(cfg.mig_samples));
    scores[s] = reports[s].score;
  });
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    write_mig_csv(sink.stage("mig_seed" + std::to_string(cfg.seeds[s]) + ".csv"), reports[s]);
  }
  man.metrics["mig_mean"] = mean_of(scores);
  man.metrics["mig_std"] = stddev_of(scores);
}

void run_entropy_grid(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  struct Cell {
    double theta_deg, length, entropy;
    std::vector<double> kl_per_seed;
  };
  std::vector<Cell> cells;
  for (double theta : cfg.entropy_thetas_deg) {
    for (double length : cfg.entropy_lengths) {
      ImageDataset data =
          gen_a4(deg_to_rad(theta), length, cfg.dataset_frames, cfg.dataset_canvas);
      ActionSequence seq = extract_action(data, data.spec().factors[0].name, {});
      cells.push_back({theta, length, sequence_entropy(seq), {}});
    }
  }
  std::ofstream ent(sink.stage("entropy.csv"), std::ios::trunc);
  ent << "theta_deg,length,entropy_nats\n";
  for (const auto& c : cells) {
    ent << format_double(c.theta_deg) << "," << format_double(c.length) << ","
        << format_double(c.entropy) << "\n";
  }

  if (cfg.entropy_with_kl) {
    TrainSetup setup = setup_from(cfg);
    setup.objective.kind = ObjectiveKind::kBetaVae;
    setup.objective.beta = cfg.entropy_beta;
    for (auto& c : cells) c.kl_per_seed.resize(cfg.seeds.size());
    run_indexed_jobs(cells.size() * cfg.seeds.size(), cfg.jobs, [&](std::size_t idx) {
      std::size_t ci = idx / cfg.seeds.size();
      std::size_t si = idx % cfg.seeds.size();
      ImageDataset data = gen_a4(deg_to_rad(cells[ci].theta_deg), cells[ci].length,
                                 cfg.dataset_frames, cfg.dataset_canvas);
      RandomStream init(cfg.seeds[si], "init");
      VaeModel model = VaeModel::create(setup.arch, 0, init);
      TrainingTrace trace = train_vae(model, data, setup.objective, setup.train, cfg.seeds[si]);
      cells[ci].kl_per_seed[si] = trace.final_kl;
    });
    std::ofstream kl(sink.stage("kl.csv"), std::ios::trunc);
    kl << "theta_deg,length,seed,kl_nats\n";
    std::vector<double> entropies, mean_kls;
    for (const auto& c : cells) {
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        kl << format_double(c.theta_deg) << "," << format_double(c.length) << ","
           << cfg.seeds[s] << "," << format_double(c.kl_per_seed[s]) << "\n";
      }
      entropies.push_back(c.entropy);
      mean_kls.push_back(mean_of(c.kl_per_seed));
    }
    man.metrics["spearman_kl_vs_entropy"] = spearman_correlation(mean_kls, entropies);
  }
}

void run_curves(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  std::vector<std::pair<std::string, ImageDataset>> named;
  for (const auto& kind : cfg.curve_kinds) {
    named.emplace_back(kind,
                       gen_transformation_suite(transform_kind_from_name(kind),
                                                cfg.dataset_frames, cfg.dataset_seed,
                                                cfg.dataset_canvas));
  }
  TrainSetup setup = setup_from(cfg);
  if (setup.train.eval_interval < 1) setup.train.eval_interval = 25;
  auto curves = learning_curve_compare(named, setup, cfg.seeds, cfg.jobs);
  write_curves_csv(sink.stage("curves.csv"), curves);
  man.metrics["curves"] = static_cast<double>(curves.size());
}

void run_report(const ExperimentConfig& cfg, ArtifactSink& sink, RunManifest& man) {
  ImageDataset data = make_dataset(cfg);
  std::vector<std::pair<std::string, std::string>> summary;  // metric/name -> value

  if (!cfg.sweep_actions.empty()) {
    TrainSetup setup = setup_from(cfg);
    ThresholdReport report;
    report.eps_info = cfg.sweep_eps_info;
    report.grid = cfg.sweep_betas;
    for (const auto& action : cfg.sweep_actions) {
      TrainSetup job = setup;
      job.train.label_mix_target = action;
      SweepResult sweep = beta_sweep(data, cfg.sweep_betas, job, cfg.seeds, cfg.jobs);
      write_sweep_csv(sink.stage("sweep_" + action + ".csv"), sweep);
      ThresholdEstimate est = estimate_threshold(sweep, cfg.sweep_eps_info);
      report.per_action.emplace_back(action, est);
      summary.emplace_back("threshold_" + action, est.to_string());
      man.notes["threshold_" + action] = est.to_string();
    }
    write_thresholds_csv(sink.stage("thresholds.csv"), report);
  }

  // MIG per method over the seed set.
  std::vector<double> beta_scores(cfg.seeds.size()), fvae_scores(cfg.seeds.size());
  run_indexed_jobs(cfg.seeds.size() * 2, cfg.jobs, [&](std::size_t idx) {
    std::size_t s = idx / 2;
    bool fvae = idx % 2 == 1;
    if (!fvae) {
      ObjectiveConfig obj = cfg.objective;
      obj.kind = ObjectiveKind::kBetaVae;
      obj.beta = cfg.report_beta_vae_beta;
      RandomStream init(cfg.seeds[s], "init");
      VaeModel model = VaeModel::create(cfg.arch, 0, init);
      train_vae(model, data, obj, cfg.train, cfg.seeds[s]);
      beta_scores[s] = mig(make_codec(model), data, cfg.mig_bins,
                           static_cast<std::size_t>(cfg.mig_samples))
                           .score;
    } else {
      RandomStream init(cfg.seeds[s], "init");
      FvaeModel model = FvaeModel::create(cfg.arch, cfg.group_dims, 0, init);
      PhaseSchedule schedule = schedule_from(cfg, model.group_count());
      train_fvae(model, data, schedule, cfg.train, cfg.seeds[s]);
      fvae_scores[s] = mig(make_codec(model), data, cfg.mig_bins,
                           static_cast<std::size_t>(cfg.mig_samples))
                           .score;
    }
  });

  std::ofstream scores(sink.stage("mig_scores.csv"), std::ios::trunc);
  scores << "method,seed,score\n";
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    scores << "beta_vae," << cfg.seeds[s] << "," << format_double(beta_scores[s]) << "\n";
  }
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    scores << "fvae," << cfg.seeds[s] << "," << format_double(fvae_scores[s]) << "\n";
  }
  summary.emplace_back("mig_mean_beta_vae", format_double(mean_of(beta_scores)));
  summary.emplace_back("mig_std_beta_vae", format_double(stddev_of(beta_scores)));
  summary.emplace_back("mig_mean_fvae", format_double(mean_of(fvae_scores)));
  summary.emplace_back("mig_std_fvae", format_double(stddev_of(fvae_scores)));
  man.metrics["mig_mean_beta_vae"] = mean_of(beta_scores);
  man.metrics["mig_std_beta_vae"] = stddev_of(beta_scores);
  man.metrics["mig_mean_fvae"] = mean_of(fvae_scores);
  man.metrics["mig_std_fvae"] = stddev_of(fvae_scores);

  std::ofstream sum(sink.stage("summary.csv"), std::ios::trunc);
  sum << "metric,value\n";
  for (const auto& [k, v] : summary) sum << k << "," << v << "\n";
}

}  // namespace

ImageDataset make_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_source == "file") return read_dataset(cfg.dataset_path);
  const std::string& g = cfg.dataset_generator;
  if (g == "a1") {
    return gen_translation_dataset(0.0, CoordSystem::kCartesian, cfg.dataset_grid,
                                   cfg.dataset_canvas);
  }
  if (g == "a2") {
    return gen_translation_dataset(0.0, CoordSystem::kPolar, cfg.dataset_grid,
                                   cfg.dataset_canvas);
  }
  if (g == "a3") {
    return gen_translation_dataset(deg_to_rad(45.0), CoordSystem::kCartesian, cfg.dataset_grid,
                                   cfg.dataset_canvas);
  }
  if (g == "a4") {
    return gen_a4(deg_to_rad(cfg.dataset_theta_deg), cfg.dataset_length, cfg.dataset_frames,
                  cfg.dataset_canvas);
  }
  if (g == "dsprites") return gen_dsprites(cfg.dataset_dsprites_cards, cfg.dataset_canvas);
  if (g == "transform") {
    return gen_transformation_suite(transform_kind_from_name(cfg.dataset_transform),
                                    cfg.dataset_frames, cfg.dataset_seed, cfg.dataset_canvas);
  }
  if (g == "mix") {
    return gen_two_action_mix(cfg.dataset_mix_positions, cfg.dataset_mix_orientations,
                              cfg.dataset_canvas);
  }
  throw ConfigError("key \"dataset.generator\": unknown generator \"" + g + "\"");
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RunManifest man;
  man.kind = cfg.kind;
  man.version = kDlabVersion;
  man.config_text = serialize_config(cfg);
  man.seeds = cfg.seeds;
  man.started_at = iso_timestamp();

  ArtifactSink sink(cfg.out_dir);
  {
    std::ofstream echo(sink.stage("config.txt"), std::ios::trunc);
    echo << man.config_text;
  }

  try {
    if (cfg.kind == "gen-data") {
      run_gen_data(cfg, sink, man);
    } else if (cfg.kind == "train") {
      run_train(cfg, sink, man);
    } else if (cfg.kind == "fvae-train") {
      run_fvae_train(cfg, sink, man);
    } else if (cfg.kind == "sweep") {
      run_sweep(cfg, sink, man);
    } else if (cfg.kind == "anneal") {
      run_anneal(cfg, sink, man);
    } else if (cfg.kind == "traverse") {
      run_traverse(cfg, sink, man);
    } else if (cfg.kind == "project") {
      run_project(cfg, sink, man);
    } else if (cfg.kind == "mig") {
      run_mig(cfg, sink, man);
    } else if (cfg.kind == "entropy-grid") {
      run_entropy_grid(cfg, sink, man);
    } else if (cfg.kind == "curves") {
      run_curves(cfg, sink, man);
    } else if (cfg.kind == "report") {
      run_report(cfg, sink, man);
    } else {
      throw ConfigError("unknown experiment kind \"" + cfg.kind + "\"");
    }
  } catch (const std::exception& e) {
    throw TrainingError("experiment \"" + cfg.kind + "\" failed: " + e.what(), 0, 0);
  }

  sink.finalize();
  man.artifacts = sink.names();
  man.finished_at = iso_timestamp();

  nlohmann::json j;
  j["kind"] = man.kind;
  j["version"] = man.version;
  j["config"] = man.config_text;
  j["seeds"] = man.seeds;
  j["started_at"] = man.started_at;
  j["finished_at"] = man.finished_at;
  j["artifacts"] = man.artifacts;
  j["metrics"] = man.metrics;
  j["notes"] = man.notes;

  fs::path tmp = sink.dir() / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw ConfigError("manifest write failed");
  }
  fs::rename(tmp, sink.dir() / "manifest.json");
  return man;
}

}  // namespace dlab
