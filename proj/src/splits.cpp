#include "driftbench/splits.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "driftbench/io.hpp"
#include "driftbench/rng.hpp"
#include "json.hpp"

namespace driftbench {

using nlohmann::json;

int bin_of(const TimeBinning& binning, std::int64_t ts) {
  const auto& b = binning.boundaries;
  if (b.empty()) throw std::invalid_argument("bin_of: empty binning");
  auto it = std::upper_bound(b.begin(), b.end(), ts);
  if (it == b.begin()) return 0;  // before the first edge: clamp
  return static_cast<int>(it - b.begin()) - 1;
}

const char* setting_name(Setting s) {
  switch (s) {
    case Setting::Cont: return "CONT";
    case Setting::Temp: return "TEMP";
    case Setting::Prog: return "PROG";
  }
  return "?";
}

Setting setting_from(const std::string& s) {
  if (s == "CONT") return Setting::Cont;
  if (s == "TEMP") return Setting::Temp;
  if (s == "PROG") return Setting::Prog;
  throw std::invalid_argument("unknown split setting \"" + s + "\"");
}

namespace {

// Indices of corpus examples in (timestamp, id) order. Splits must not
// depend on the order examples happen to be stored in.
std::vector<std::size_t> chrono_order(const Corpus& corpus) {
  std::vector<std::size_t> idx(corpus.examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = corpus.examples[a];
    const auto& y = corpus.examples[b];
    if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
    return x.id < y.id;
  });
  return idx;
}

std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Seeded k-subset of `pool` (which must be in canonical order).
std::vector<std::string> sample_ids(const std::vector<std::string>& pool,
                                    std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  auto picks = rng.sample_indices(pool.size(), k);
  std::vector<std::string> out;
  out.reserve(k);
  for (auto i : picks) out.push_back(pool[i]);
  return out;
}

std::vector<std::string> minus(const std::vector<std::string>& all,
                               const std::vector<std::string>& remove) {
  std::unordered_set<std::string> gone(remove.begin(), remove.end());
  std::vector<std::string> out;
  out.reserve(all.size() - remove.size());
  for (const auto& id : all)
    if (!gone.count(id)) out.push_back(id);
  return out;
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>> temporal_halves(
    const Corpus& corpus) {
  if (corpus.examples.empty()) throw std::invalid_argument("temporal_halves: empty corpus");
  std::int64_t lo = corpus.examples[0].timestamp, hi = lo;
  for (const auto& ex : corpus.examples) {
    lo = std::min(lo, ex.timestamp);
    hi = std::max(hi, ex.timestamp);
  }
  if (lo == hi)
    throw std::invalid_argument("temporal_halves: all timestamps identical");
  // First half is ts <= (lo+hi)/2, kept exact for odd sums by comparing 2*ts.
  std::vector<std::string> first, second;
  auto order = chrono_order(corpus);
  for (auto i : order) {
    const auto& ex = corpus.examples[i];
    (2 * ex.timestamp <= lo + hi ? first : second).push_back(ex.id);
  }
  return {std::move(first), std::move(second)};
}

ExperimentSplit make_temp_split(const Corpus& corpus, std::uint64_t seed) {
  auto [first, second] = temporal_halves(corpus);
  if (first.empty() || second.empty())
    throw std::invalid_argument("make_temp_split: a temporal half is empty");

  auto test = sample_ids(second, second.size() / 2, sub_seed(seed, "temp-test"));
  auto dev = sample_ids(first, first.size() / 10, sub_seed(seed, "dev-carve"));
  auto train = minus(first, dev);

  ExperimentSplit s;
  s.setting = Setting::Temp;
  s.seed = seed;
  s.train_ids = sorted_ids(std::move(train));
  s.dev_ids = sorted_ids(std::move(dev));
  s.test_ids = sorted_ids(std::move(test));
  return s;
}

ExperimentSplit make_cont_split(const Corpus& corpus, std::uint64_t seed) {
  auto [first, second] = temporal_halves(corpus);
  if (first.empty() || second.empty())
    throw std::invalid_argument("make_cont_split: a temporal half is empty");

  // Identical test sample as TEMP at this seed, by construction.
  auto test = sample_ids(second, second.size() / 2, sub_seed(seed, "temp-test"));

  const std::size_t n = first.size();
  const std::size_t from_first = (n + 1) / 2;
  const std::size_t from_second = n - from_first;
  auto avail = minus(second, test);
  if (avail.size() < from_second)
    throw std::invalid_argument(
        "make_cont_split: second half too small to fill the training pool");

  auto pool_a = sample_ids(first, from_first, sub_seed(seed, "cont-first"));
  auto pool_b = sample_ids(avail, from_second, sub_seed(seed, "cont-second"));
  std::vector<std::string> pool = sorted_ids([&] {
    std::vector<std::string> p = pool_a;
    p.insert(p.end(), pool_b.begin(), pool_b.end());
    return p;
  }());

  // Same carve rule and stream tag as TEMP: 10% of an n-sized pool.
  auto dev = sample_ids(pool, n / 10, sub_seed(seed, "dev-carve"));
  auto train = minus(pool, dev);

  ExperimentSplit s;
  s.setting = Setting::Cont;
  s.seed = seed;
  s.train_ids = sorted_ids(std::move(train));
  s.dev_ids = sorted_ids(std::move(dev));
  s.test_ids = sorted_ids(std::move(test));
  return s;
}

std::vector<std::vector<std::size_t>> equal_count_groups(std::size_t n, int n_groups) {
  if (n_groups <= 0) throw std::invalid_argument("equal_count_groups: n_groups must be positive");
  if (n < static_cast<std::size_t>(n_groups))
    throw std::invalid_argument("equal_count_groups: fewer items than groups");
  const std::size_t base = n / n_groups;
  const std::size_t rem = n % n_groups;
  std::vector<std::vector<std::size_t>> groups(n_groups);
  std::size_t pos = 0;
  for (int g = 0; g < n_groups; ++g) {
    std::size_t len = base + (static_cast<std::size_t>(g) < rem ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) groups[g].push_back(pos++);
  }
  return groups;
}

std::vector<ExperimentSplit> make_prog_splits(const Corpus& corpus, int n_bins) {
  if (n_bins < 3) throw std::invalid_argument("make_prog_splits: need at least 3 bins");
  if (corpus.examples.size() < static_cast<std::size_t>(n_bins))
    throw std::invalid_argument("make_prog_splits: fewer examples than bins");

  auto order = chrono_order(corpus);
  auto groups = equal_count_groups(order.size(), n_bins);
  std::vector<std::vector<std::string>> bin_ids(n_bins);
  for (int g = 0; g < n_bins; ++g) {
    for (auto rank : groups[g]) bin_ids[g].push_back(corpus.examples[order[rank]].id);
  }

  std::vector<ExperimentSplit> out;
  for (int t = 2; t < n_bins; ++t) {
    ExperimentSplit s;
    s.setting = Setting::Prog;
    s.prog_step = t;
    s.seed = 0;  // fully determined by the bin layout
    for (int g = 0; g <= t - 2; ++g)
      s.train_ids.insert(s.train_ids.end(), bin_ids[g].begin(), bin_ids[g].end());
    s.dev_ids = bin_ids[t - 1];
    s.test_ids = bin_ids[t];
    s.train_ids = sorted_ids(std::move(s.train_ids));
    s.dev_ids = sorted_ids(std::move(s.dev_ids));
    s.test_ids = sorted_ids(std::move(s.test_ids));
    out.push_back(std::move(s));
  }
  return out;
}

TimeBinning equal_count_binning(const std::vector<TimedExample>& sorted_examples,
                                int n_bins) {
  auto groups = equal_count_groups(sorted_examples.size(), n_bins);
  TimeBinning binning;
  binning.mode = TimeBinning::Mode::EqualCount;
  for (const auto& g : groups) {
    std::int64_t edge = sorted_examples[g.front()].timestamp;
    if (binning.boundaries.empty() || edge > binning.boundaries.back())
      binning.boundaries.push_back(edge);
  }
  if (binning.T() < 2)
    throw std::invalid_argument("equal_count_binning: not enough distinct timestamps");
  return binning;
}

namespace {

std::int64_t floor_day(std::int64_t ts) {
  std::int64_t d = ts / 86400;
  if (ts % 86400 < 0) --d;
  return d;
}

}  // namespace

TimeBinning head_binning(const std::vector<TimedExample>& sorted_examples, int cap) {
  if (cap < 2) throw std::invalid_argument("head_binning: cap must be at least 2");
  if (sorted_examples.empty()) throw std::invalid_argument("head_binning: no examples");

  std::vector<std::int64_t> days;
  for (const auto& ex : sorted_examples) {
    std::int64_t d = floor_day(ex.timestamp);
    if (days.empty() || d != days.back()) days.push_back(d);
  }
  if (days.size() >= 2 && days.size() <= static_cast<std::size_t>(cap)) {
    TimeBinning binning;
    binning.mode = TimeBinning::Mode::EqualSpan;
    for (auto d : days) binning.boundaries.push_back(d * 86400);
    return binning;
  }
  if (days.size() > static_cast<std::size_t>(cap))
    return equal_count_binning(sorted_examples, cap);

  // Single day: fall back to equal-count bins over the raw timestamps.
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < sorted_examples.size(); ++i)
    if (sorted_examples[i].timestamp != sorted_examples[i - 1].timestamp) ++distinct;
  if (distinct < 2)
    throw std::invalid_argument("head_binning: all timestamps identical");
  int bins = static_cast<int>(std::min<std::size_t>(cap, distinct));
  return equal_count_binning(sorted_examples, bins);
}

void save_split(const ExperimentSplit& split, const std::filesystem::path& path) {
  json j{{"setting", setting_name(split.setting)},
         {"seed", split.seed},
         {"train_ids", split.train_ids},
         {"dev_ids", split.dev_ids},
         {"test_ids", split.test_ids}};
  if (split.prog_step)
    j["prog_step"] = *split.prog_step;
  else
    j["prog_step"] = nullptr;
  write_file_atomic(path, j.dump(2) + "\n");
}

ExperimentSplit load_split(const std::filesystem::path& path) {
  json j = json::parse(read_file(path));
  ExperimentSplit s;
  s.setting = setting_from(j.at("setting").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("prog_step").is_null()) s.prog_step = j["prog_step"].get<int>();
  s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  s.dev_ids = j.at("dev_ids").get<std::vector<std::string>>();
  s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  return s;
}

}  // namespace driftbench
