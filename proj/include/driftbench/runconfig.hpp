#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "driftbench/corpus.hpp"
#include "driftbench/splits.hpp"
#include "driftbench/temporal.hpp"
#include "driftbench/train.hpp"

#include "json.hpp"

namespace driftbench {

struct SplitSpec {
  Setting setting = Setting::Temp;
  std::uint64_t seed = 1;
  int n_bins = 10;  // PROG bin count; also the bin count for score matrices
};

// One experiment description. Exactly one corpus source is set: a JSONL
// path or an inline generator recipe (regenerated deterministically on
// every run, so artifacts never depend on scratch paths).
struct RunConfig {
  std::optional<std::string> corpus_path;
  int corpus_n_classes = 2;
  std::optional<DriftGenConfig> generator;
  SplitSpec split;
  EncoderConfig encoder;
  HeadConfig temporal;
  TrainConfig train;
  std::string output_dir = "runs";
};

RunConfig parse_run_config(const nlohmann::json& j);  // strict: unknown keys throw
RunConfig load_run_config(const std::filesystem::path& path);

// Every field spelled out with defaults materialized and keys sorted, so
// equal configs serialize identically.
nlohmann::json normalized_config(const RunConfig& cfg);

// 16 hex digits over the normalized form; names the run directory.
std::string config_digest(const RunConfig& cfg);

Corpus obtain_corpus(const RunConfig& cfg);

}  // namespace driftbench
