#include "dlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dlab/csv.hpp"
#include "dlab/errors.hpp"

namespace dlab {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected an integer, got \"" + value + "\"");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key \"" + key + "\": expected true/false, got \"" + value + "\"");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values, const std::function<std::string(T)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += fmt(values[i]);
  }
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  return join<double>(v, [](double x) { return format_double(x); });
}

std::string join_ints(const std::vector<int>& v) {
  return join<int>(v, [](int x) { return std::to_string(x); });
}

std::string join_strings(const std::vector<std::string>& v) {
  return join<std::string>(v, [](std::string x) { return x; });
}

// One schema entry: canonical key, getter for the echo, setter for parsing.
struct Entry {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    auto add = [&e](std::string key, auto get, auto set) {
      e.push_back({std::move(key), get, set});
    };

    add("experiment.kind", [](const ExperimentConfig& c) { return c.kind; },
        [](ExperimentConfig& c, const std::string& v) { c.kind = v; });
    add("seeds",
        [](const ExperimentConfig& c) {
          return join<std::uint64_t>(
              {c.seeds.begin(), c.seeds.end()},
              [](std::uint64_t s) { return std::to_string(s); });
        },
        [](ExperimentConfig& c, const std::string& v) {
          c.seeds = parse_list<std::uint64_t>("seeds", v, [](const std::string& k,
                                                             const std::string& s) {
            return static_cast<std::uint64_t>(parse_long(k, s));
          });
        });
    add("jobs", [](const ExperimentConfig& c) { return std::to_string(c.jobs); },
        [](ExperimentConfig& c, const std::string& v) {
          c.jobs = static_cast<int>(parse_long("jobs", v));
        });
    add("out", [](const ExperimentConfig& c) { return c.out_dir; },
        [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; });

    add("dataset.source", [](const ExperimentConfig& c) { return c.dataset_source; },
        [](ExperimentConfig& c, const std::string& v) { c.dataset_source = v; });
    add("dataset.path", [](const ExperimentConfig& c) { return c.dataset_path; },
        [](ExperimentConfig& c, const std::string& v) { c.dataset_path = v; });
    add("dataset.generator", [](const ExperimentConfig& c) { return c.dataset_generator; },
        [](ExperimentConfig& c, const std::string& v) { c.dataset_generator = v; });
    add("dataset.grid", [](const ExperimentConfig& c) { return std::to_string(c.dataset_grid); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_grid = static_cast<int>(parse_long("dataset.grid", v));
        });
    add("dataset.canvas",
        [](const ExperimentConfig& c) { return std::to_string(c.dataset_canvas); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_canvas = static_cast<int>(parse_long("dataset.canvas", v));
        });
    add("dataset.theta_deg",
        [](const ExperimentConfig& c) { return format_double(c.dataset_theta_deg); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_theta_deg = parse_real("dataset.theta_deg", v);
        });
    add("dataset.length", [](const ExperimentConfig& c) { return format_double(c.dataset_length); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_length = parse_real("dataset.length", v);
        });
    add("dataset.frames", [](const ExperimentConfig& c) { return std::to_string(c.dataset_frames); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_frames = static_cast<int>(parse_long("dataset.frames", v));
        });
    add("dataset.transform", [](const ExperimentConfig& c) { return c.dataset_transform; },
        [](ExperimentConfig& c, const std::string& v) { c.dataset_transform = v; });
    add("dataset.mix_positions",
        [](const ExperimentConfig& c) { return std::to_string(c.dataset_mix_positions); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_mix_positions = static_cast<int>(parse_long("dataset.mix_positions", v));
        });
    add("dataset.mix_orientations",
        [](const ExperimentConfig& c) { return std::to_string(c.dataset_mix_orientations); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_mix_orientations = static_cast<int>(parse_long("dataset.mix_orientations", v));
        });
    add("dataset.dsprites_cards",
        [](const ExperimentConfig& c) {
          return join_ints({c.dataset_dsprites_cards.begin(), c.dataset_dsprites_cards.end()});
        },
        [](ExperimentConfig& c, const std::string& v) {
          auto items = parse_list<int>("dataset.dsprites_cards", v,
                                       [](const std::string& k, const std::string& s) {
                                         return static_cast<int>(parse_long(k, s));
                                       });
          if (items.size() != 5) {
            throw ConfigError("key \"dataset.dsprites_cards\": expected 5 cardinalities");
          }
          std::copy(items.begin(), items.end(), c.dataset_dsprites_cards.begin());
        });
    add("dataset.seed", [](const ExperimentConfig& c) { return std::to_string(c.dataset_seed); },
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_seed = static_cast<std::uint64_t>(parse_long("dataset.seed", v));
        });

    add("model.backbone",
        [](const ExperimentConfig& c) {
          return c.arch.backbone == Backbone::kMlp ? "mlp" : "conv4";
        },
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "mlp") {
            c.arch.backbone = Backbone::kMlp;
          } else if (v == "conv4") {
            c.arch.backbone = Backbone::kConv4;
          } else {
            throw ConfigError("key \"model.backbone\": expected mlp or conv4, got \"" + v + "\"");
          }
        });
    add("model.encoder_widths",
        [](const ExperimentConfig& c) { return join_ints(c.arch.encoder_widths); },
        [](ExperimentConfig& c, const std::string& v) {
          c.arch.encoder_widths = parse_list<int>(
              "model.encoder_widths", v, [](const std::string& k, const std::string& s) {
                return static_cast<int>(parse_long(k, s));
              });
        });
    add("model.decoder_widths",
        [](const ExperimentConfig& c) { return join_ints(c.arch.decoder_widths); },
        [](ExperimentConfig& c, const std::string& v) {
          c.arch.decoder_widths = parse_list<int>(
              "model.decoder_widths", v, [](const std::string& k, const std::string& s) {
                return static_cast<int>(parse_long(k, s));
              });
        });
    add("model.latent_dim",
        [](const ExperimentConfig& c) { return std::to_string(c.arch.latent_dim); },
        [](ExperimentConfig& c, const std::string& v) {
          c.arch.latent_dim = static_cast<int>(parse_long("model.latent_dim", v));
        });
    add("model.nonlinearity",
        [](const ExperimentConfig& c) {
          return c.arch.nonlinearity == Activation::kRelu ? "relu" : "tanh";
        },
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "relu") {
            c.arch.nonlinearity = Activation::kRelu;
          } else if (v == "tanh") {
            c.arch.nonlinearity = Activation::kTanh;
          } else {
            throw ConfigError("key \"model.nonlinearity\": expected relu or tanh");
          }
        });
    add("model.group_dims", [](const ExperimentConfig& c) { return join_ints(c.group_dims); },
        [](ExperimentConfig& c, const std::string& v) {
          c.group_dims = parse_list<int>("model.group_dims", v,
                                         [](const std::string& k, const std::string& s) {
                                           return static_cast<int>(parse_long(k, s));
                                         });
        });
    add("model.checkpoint", [](const ExperimentConfig& c) { return c.model_checkpoint; },
        [](ExperimentConfig& c, const std::string& v) { c.model_checkpoint = v; });

    add("objective.kind",
        [](const ExperimentConfig& c) { return objective_kind_name(c.objective.kind); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.kind = objective_kind_from_name(v);
        });
    add("objective.beta", [](const ExperimentConfig& c) { return format_double(c.objective.beta); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.beta = parse_real("objective.beta", v);
        });
    add("objective.gamma",
        [](const ExperimentConfig& c) { return format_double(c.objective.gamma); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.gamma = parse_real("objective.gamma", v);
        });
    add("objective.c_start",
        [](const ExperimentConfig& c) { return format_double(c.objective.c_start); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.c_start = parse_real("objective.c_start", v);
        });
    add("objective.c_end",
        [](const ExperimentConfig& c) { return format_double(c.objective.c_end); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.c_end = parse_real("objective.c_end", v);
        });
    add("objective.c_ramp_steps",
        [](const ExperimentConfig& c) { return std::to_string(c.objective.ramp_steps); },
        [](ExperimentConfig& c, const std::string& v) {
          c.objective.ramp_steps = parse_long("objective.c_ramp_steps", v);
        });

    add("train.steps", [](const ExperimentConfig& c) { return std::to_string(c.train.steps); },
        [](ExperimentConfig& c, const std::string& v) {
          c.train.steps = parse_long("train.steps", v);
        });
    add("train.batch", [](const ExperimentConfig& c) { return std::to_string(c.train.batch); },
        [](ExperimentConfig& c, const std::string& v) {
          c.train.batch = static_cast<int>(parse_long("train.batch", v));
        });
    add("train.lr", [](const ExperimentConfig& c) { return format_double(c.train.lr); },
        [](ExperimentConfig& c, const std::string& v) { c.train.lr = parse_real("train.lr", v); });
    add("train.eval_interval",
        [](const ExperimentConfig& c) { return std::to_string(c.train.eval_interval); },
        [](ExperimentConfig& c, const std::string& v) {
          c.train.eval_interval = parse_long("train.eval_interval", v);
        });
    add("train.trace_stride",
        [](const ExperimentConfig& c) { return std::to_string(c.train.trace_stride); },
        [](ExperimentConfig& c, const std::string& v) {
          c.train.trace_stride = parse_long("train.trace_stride", v);
        });
    add("train.label_mix_target",
        [](const ExperimentConfig& c) { return c.train.label_mix_target; },
        [](ExperimentConfig& c, const std::string& v) { c.train.label_mix_target = v; });

    add("schedule.betas", [](const ExperimentConfig& c) { return join_reals(c.schedule_betas); },
        [](ExperimentConfig& c, const std::string& v) {
          c.schedule_betas = parse_list<double>("schedule.betas", v, parse_real);
        });
    add("schedule.steps_per_phase",
        [](const ExperimentConfig& c) { return std::to_string(c.schedule_steps_per_phase); },
        [](ExperimentConfig& c, const std::string& v) {
          c.schedule_steps_per_phase = parse_long("schedule.steps_per_phase", v);
        });
    add("schedule.lr_active",
        [](const ExperimentConfig& c) { return format_double(c.schedule_lr_active); },
        [](ExperimentConfig& c, const std::string& v) {
          c.schedule_lr_active = parse_real("schedule.lr_active", v);
        });
    add("schedule.lr_learned",
        [](const ExperimentConfig& c) { return format_double(c.schedule_lr_learned); },
        [](ExperimentConfig& c, const std::string& v) {
          c.schedule_lr_learned = parse_real("schedule.lr_learned", v);
        });

    add("sweep.betas", [](const ExperimentConfig& c) { return join_reals(c.sweep_betas); },
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep_betas = parse_list<double>("sweep.betas", v, parse_real);
        });
    add("sweep.eps_info",
        [](const ExperimentConfig& c) { return format_double(c.sweep_eps_info); },
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep_eps_info = parse_real("sweep.eps_info", v);
        });
    add("sweep.actions", [](const ExperimentConfig& c) { return join_strings(c.sweep_actions); },
        [](ExperimentConfig& c, const std::string& v) { c.sweep_actions = split_list(v); });
    add("sweep.transforms",
        [](const ExperimentConfig& c) { return join_strings(c.sweep_transforms); },
        [](ExperimentConfig& c, const std::string& v) { c.sweep_transforms = split_list(v); });

    add("anneal.beta_high",
        [](const ExperimentConfig& c) { return format_double(c.anneal_beta_high); },
        [](ExperimentConfig& c, const std::string& v) {
          c.anneal_beta_high = parse_real("anneal.beta_high", v);
        });
    add("anneal.beta_low",
        [](const ExperimentConfig& c) { return format_double(c.anneal_beta_low); },
        [](ExperimentConfig& c, const std::string& v) {
          c.anneal_beta_low = parse_real("anneal.beta_low", v);
        });
    add("anneal.levels", [](const ExperimentConfig& c) { return std::to_string(c.anneal_levels); },
        [](ExperimentConfig& c, const std::string& v) {
          c.anneal_levels = static_cast<int>(parse_long("anneal.levels", v));
        });
    add("anneal.steps_per_level",
        [](const ExperimentConfig& c) { return std::to_string(c.anneal_steps_per_level); },
        [](ExperimentConfig& c, const std::string& v) {
          c.anneal_steps_per_level = parse_long("anneal.steps_per_level", v);
        });
    add("anneal.delta", [](const ExperimentConfig& c) { return format_double(c.anneal_delta); },
        [](ExperimentConfig& c, const std::string& v) {
          c.anneal_delta = parse_real("anneal.delta", v);
        });

    add("traverse.dim", [](const ExperimentConfig& c) { return std::to_string(c.traverse_dim); },
        [](ExperimentConfig& c, const std::string& v) {
          c.traverse_dim = static_cast<int>(parse_long("traverse.dim", v));
        });
    add("traverse.steps",
        [](const ExperimentConfig& c) { return std::to_string(c.traverse_steps); },
        [](ExperimentConfig& c, const std::string& v) {
          c.traverse_steps = static_cast<int>(parse_long("traverse.steps", v));
        });
    add("traverse.range",
        [](const ExperimentConfig& c) { return format_double(c.traverse_range); },
        [](ExperimentConfig& c, const std::string& v) {
          c.traverse_range = parse_real("traverse.range", v);
        });
    add("traverse.anchor",
        [](const ExperimentConfig& c) { return std::to_string(c.traverse_anchor); },
        [](ExperimentConfig& c, const std::string& v) {
          c.traverse_anchor = parse_long("traverse.anchor", v);
        });
    add("traverse.eps_active",
        [](const ExperimentConfig& c) { return format_double(c.traverse_eps_active); },
        [](ExperimentConfig& c, const std::string& v) {
          c.traverse_eps_active = parse_real("traverse.eps_active", v);
        });

    add("project.dim_i", [](const ExperimentConfig& c) { return std::to_string(c.project_dim_i); },
        [](ExperimentConfig& c, const std::string& v) {
          c.project_dim_i = static_cast<int>(parse_long("project.dim_i", v));
        });
    add("project.dim_j", [](const ExperimentConfig& c) { return std::to_string(c.project_dim_j); },
        [](ExperimentConfig& c, const std::string& v) {
          c.project_dim_j = static_cast<int>(parse_long("project.dim_j", v));
        });

    add("mig.bins", [](const ExperimentConfig& c) { return std::to_string(c.mig_bins); },
        [](ExperimentConfig& c, const std::string& v) {
          c.mig_bins = static_cast<int>(parse_long("mig.bins", v));
        });
    add("mig.samples", [](const ExperimentConfig& c) { return std::to_string(c.mig_samples); },
        [](ExperimentConfig& c, const std::string& v) {
          c.mig_samples = parse_long("mig.samples", v);
        });

    add("entropy.thetas_deg",
        [](const ExperimentConfig& c) { return join_reals(c.entropy_thetas_deg); },
        [](ExperimentConfig& c, const std::string& v) {
          c.entropy_thetas_deg = parse_list<double>("entropy.thetas_deg", v, parse_real);
        });
    add("entropy.lengths",
        [](const ExperimentConfig& c) { return join_reals(c.entropy_lengths); },
        [](ExperimentConfig& c, const std::string& v) {
          c.entropy_lengths = parse_list<double>("entropy.lengths", v, parse_real);
        });
    add("entropy.with_kl",
        [](const ExperimentConfig& c) { return c.entropy_with_kl ? "true" : "false"; },
        [](ExperimentConfig& c, const std::string& v) {
          c.entropy_with_kl = parse_bool("entropy.with_kl", v);
        });
    add("entropy.beta", [](const ExperimentConfig& c) { return format_double(c.entropy_beta); },
        [](ExperimentConfig& c, const std::string& v) {
          c.entropy_beta = parse_real("entropy.beta", v);
        });

    add("curves.kinds", [](const ExperimentConfig& c) { return join_strings(c.curve_kinds); },
        [](ExperimentConfig& c, const std::string& v) { c.curve_kinds = split_list(v); });

    add("report.beta_vae_beta",
        [](const ExperimentConfig& c) { return format_double(c.report_beta_vae_beta); },
        [](ExperimentConfig& c, const std::string& v) {
          c.report_beta_vae_beta = parse_real("report.beta_vae_beta", v);
        });

    return e;
  }();
  return entries;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : schema()) {
    if (e.key == key) return e;
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

void apply_line(ExperimentConfig& cfg, const std::string& line, const std::string& where) {
  auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(where + ": expected \"key = value\", got \"" + line + "\"");
  }
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": empty key");
  find_entry(key).set(cfg, value);
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "gen-data", "train",   "fvae-train", "sweep",  "anneal",       "traverse",
      "project",  "mig",     "entropy-grid", "curves", "report"};
  return kinds;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    apply_line(cfg, stripped, "line " + std::to_string(line_no));
  }
  for (const auto& o : overrides) apply_line(cfg, o, "--set " + o);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config \"" + path.string() + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return parse_config_text(text, overrides);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& e : schema()) {
    out += e.key + " = " + e.get(config) + "\n";
  }
  return out;
}

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

void validate_config(const ExperimentConfig& config) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), config.kind) == kinds.end()) {
    throw ConfigError("key \"experiment.kind\": unknown kind \"" + config.kind + "\"");
  }
  if (config.seeds.empty()) throw ConfigError("key \"seeds\": at least one seed required");
  if (config.jobs < 1) throw ConfigError("key \"jobs\": must be >= 1");
  if (config.dataset_source != "generator" && config.dataset_source != "file") {
    throw ConfigError("key \"dataset.source\": expected generator or file");
  }
  if (config.dataset_source == "file") {
    if (config.dataset_path.empty()) {
      throw ConfigError("key \"dataset.path\": required when dataset.source = file");
    }
    if (!std::filesystem::exists(config.dataset_path)) {
      throw ConfigError("key \"dataset.path\": \"" + config.dataset_path + "\" does not exist");
    }
  }
  if (!config.model_checkpoint.empty() && !std::filesystem::exists(config.model_checkpoint)) {
    throw ConfigError("key \"model.checkpoint\": \"" + config.model_checkpoint +
                      "\" does not exist");
  }
  config.arch.validate();
  config.objective.validate();
  config.train.validate();
}

}  // namespace dlab
