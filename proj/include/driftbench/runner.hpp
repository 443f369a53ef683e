#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "driftbench/runconfig.hpp"

#include "json.hpp"

namespace driftbench {

struct RunArtifacts {
  std::filesystem::path dir;
  nlohmann::json metrics;
};

// Writes <out>/corpus.jsonl plus <out>/generator.json describing how it was
// made. Requires a generator section.
std::filesystem::path cmd_generate(const RunConfig& cfg,
                                   const std::optional<std::string>& out_override);

// Full experiment: splits, per-seed training, predictions, checkpoints,
// majority-vote ensemble, metrics. The run directory is named by the config
// digest; rerunning the same config reproduces every artifact byte for byte.
RunArtifacts cmd_run(const RunConfig& cfg, const std::optional<std::string>& out_override,
                     std::optional<int> max_seeds);

// Score-matrix experiment: per training seed, one model per temporal bin
// evaluated on every bin. Reports the seed-mean matrix and its decay score.
RunArtifacts cmd_tr(const RunConfig& cfg, const std::optional<std::string>& out_override,
                    std::optional<int> max_seeds);

// Joins persisted run metrics into one table (written to `table_out`) and a
// machine-readable summary. Rows group by temporal variant; a variant with
// both CONT and TEMP runs gets their difference, which requires identical
// test sets. Pairwise exact McNemar p-values are computed for runs sharing
// a test set. Reads only persisted artifacts, never checkpoints.
nlohmann::json cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                          bool percent, std::ostream& table_out);

}  // namespace driftbench
