#pragma once

#include <filesystem>

#include "dlab/analysis.hpp"

namespace dlab {

/// Shortest round-trip decimal form of a double (deterministic CSV cells).
std::string format_double(double v);

// Declared CSV shapes, one header line each:
//   sweep:     beta,seed,kl_nats,recon_ll
//   annealing: iter,beta,kl_nats
//   mig:       factor,mi_top,mi_second,entropy,gap
//   curves:    name,seed,iter,loss
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);
void write_annealing_csv(const std::filesystem::path& path, const AnnealingTrace& trace);
void write_mig_csv(const std::filesystem::path& path, const MigReport& report);
void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<LearningCurve>& curves);
void write_thresholds_csv(const std::filesystem::path& path, const ThresholdReport& report);

}  // namespace dlab
