#include "dlab/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "dlab/errors.hpp"

namespace dlab {

std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw ConfigError("format_double failed");
  return std::string(buf.data(), ptr);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open \"" + path.string() + "\" for writing");
  return out;
}

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_csv(path);
  out << "beta,seed,kl_nats,recon_ll\n";
  for (const auto& p : sweep.points) {
    for (std::size_t s = 0; s < sweep.seeds.size(); ++s) {
      out << format_double(p.beta) << "," << static_cast<std::uint64_t>(sweep.seeds[s]) << ","
          << format_double(p.kl_per_seed[s]) << "," << format_double(p.recon_per_seed[s]) << "\n";
    }
  }
}

void write_annealing_csv(const std::filesystem::path& path, const AnnealingTrace& trace) {
  auto out = open_csv(path);
  out << "iter,beta,kl_nats\n";
  for (std::size_t i = 0; i < trace.iters.size(); ++i) {
    out << trace.iters[i] << "," << format_double(trace.beta_at_iter[i]) << ","
        << format_double(trace.kl_at_iter[i]) << "\n";
  }
}

void write_mig_csv(const std::filesystem::path& path, const MigReport& report) {
  auto out = open_csv(path);
  out << "factor,mi_top,mi_second,entropy,gap\n";
  for (const auto& f : report.factors) {
    out << f.name << "," << format_double(f.mi_top) << "," << format_double(f.mi_second) << ","
        << format_double(f.entropy) << "," << format_double(f.gap) << "\n";
  }
}

void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<LearningCurve>& curves) {
  auto out = open_csv(path);
  out << "name,seed,iter,loss\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.iters.size(); ++i) {
      out << c.name << "," << c.seed << "," << c.iters[i] << "," << format_double(c.loss[i])
          << "\n";
    }
  }
}

void write_thresholds_csv(const std::filesystem::path& path, const ThresholdReport& report) {
  auto out = open_csv(path);
  out << "action,threshold,kind,eps_info\n";
  for (const auto& [name, est] : report.per_action) {
    const char* kind = est.kind == ThresholdKind::kBelowGrid  ? "below_grid"
                       : est.kind == ThresholdKind::kAboveGrid ? "above_grid"
                                                               : "within";
    out << name << "," << est.to_string() << "," << kind << ","
        << format_double(report.eps_info) << "\n";
  }
}

}  // namespace dlab
