#pragma once

#include <map>
#include <string>
#include <vector>

#include "dlab/config.hpp"
#include "dlab/dataset.hpp"

namespace dlab {

inline constexpr const char* kDlabVersion = "0.1.0";

struct RunManifest {
  std::string kind;
  std::string version;
  std::string config_text;
  std::vector<std::uint64_t> seeds;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> notes;
};

/// Materialize the configured dataset (generator family or DSEQ file).
ImageDataset make_dataset(const ExperimentConfig& config);

/// Execute one experiment. All declared artifacts plus manifest.json exist
/// under config.out_dir on success; on failure, partially written artifacts
/// keep a ".partial" suffix. Throws on configuration or run errors.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace dlab
