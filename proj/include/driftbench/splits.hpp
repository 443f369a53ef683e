#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/corpus.hpp"

namespace driftbench {

// Left bin edges, ascending and unique; bin i covers [boundaries[i],
// boundaries[i+1]) and the last bin is open-ended. Timestamps before the
// first edge clamp to bin 0.
struct TimeBinning {
  enum class Mode { EqualCount, EqualSpan };
  Mode mode = Mode::EqualCount;
  std::vector<std::int64_t> boundaries;

  int T() const { return static_cast<int>(boundaries.size()); }
};

int bin_of(const TimeBinning& binning, std::int64_t ts);

enum class Setting { Cont, Temp, Prog };
const char* setting_name(Setting s);
Setting setting_from(const std::string& s);  // throws on unknown name

// Disjoint id sets over one corpus. Ids are stored sorted so persisted
// splits are canonical.
struct ExperimentSplit {
  Setting setting = Setting::Temp;
  std::optional<int> prog_step;
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

// Examples at or before the temporal midpoint (min+max)/2 versus strictly
// after it. Throws when fewer than two distinct timestamps exist.
std::pair<std::vector<std::string>, std::vector<std::string>> temporal_halves(
    const Corpus& corpus);

// Train on the first half, test on the second: test is a seeded 50% sample
// of the second half, dev a seeded 10% carve of the first.
ExperimentSplit make_temp_split(const Corpus& corpus, std::uint64_t seed);

// Same test set as TEMP at the same seed; the training pool has the same
// size as TEMP's but is drawn evenly from both halves.
ExperimentSplit make_cont_split(const Corpus& corpus, std::uint64_t seed);

// n_bins equal-count temporal bins B_0..B_{n-1}; for each t in [2, n):
// train on B_0..B_{t-2}, dev on B_{t-1}, test on B_t.
std::vector<ExperimentSplit> make_prog_splits(const Corpus& corpus, int n_bins = 10);

// Rank-based equal-count groups over examples sorted by (timestamp, id);
// remainders go to the earliest groups. Returns one index list per group.
std::vector<std::vector<std::size_t>> equal_count_groups(std::size_t n, int n_groups);

// Binning whose edges are the first timestamps of the equal-count groups.
// Consecutive duplicate edges collapse; throws if fewer than two survive.
TimeBinning equal_count_binning(const std::vector<TimedExample>& sorted_examples,
                                int n_bins);

// Day-granularity binning for time-conditioned heads: one bin per UTC day
// when the span is at most `cap` days, otherwise `cap` equal-count bins.
// Throws when all timestamps coincide.
TimeBinning head_binning(const std::vector<TimedExample>& sorted_examples, int cap);

void save_split(const ExperimentSplit& split, const std::filesystem::path& path);
ExperimentSplit load_split(const std::filesystem::path& path);

}  // namespace driftbench
