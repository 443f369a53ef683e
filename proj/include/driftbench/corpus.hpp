#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace driftbench {

enum class Phase { Pre, Acute, Post };

const char* phase_name(Phase p);
Phase phase_from(std::string_view s);  // throws on unknown name

struct TimedExample {
  std::string id;
  std::string text;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  int label = 0;
  std::optional<Phase> phase;
};

enum class Task { Binary, Multiclass };

struct Corpus {
  std::vector<TimedExample> examples;
  int n_classes = 2;

  Task task() const { return n_classes == 2 ? Task::Binary : Task::Multiclass; }
  std::size_t size() const { return examples.size(); }
};

// Synthetic-corpus recipe. Four disjoint vocabularies share the text slots:
//   stable     stb<i>  votes for class i mod n_classes at all times
//   drifting   drf<i>  votes i mod n_classes before drift_time, then
//                      (i+1) mod n_classes from drift_time on
//   neologism  neo<i>  votes i mod n_classes, absent before neologism_time
//   noise      nse<i>  carries no class signal
// The gold label is the majority vote of the class-bearing tokens at the
// example's own timestamp (ties broken toward the lowest class id), then
// flipped to a different class with probability label_noise.
struct DriftGenConfig {
  int n_examples = 0;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  int n_classes = 2;
  int stable_vocab = 0;
  int drifting_vocab = 0;
  int neologism_vocab = 0;
  int noise_vocab = 0;
  int tokens_per_text = 0;
  std::int64_t drift_time = 0;
  std::int64_t neologism_time = 0;
  std::int64_t acute_start = 0;
  std::int64_t acute_end = 0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

void validate(const DriftGenConfig& cfg);  // throws std::invalid_argument

// Deterministic in cfg (including seed). Examples come back sorted by
// (timestamp, id); ids are "ex000000", "ex000001", ... in draw order.
Corpus generate_drift_corpus(const DriftGenConfig& cfg);

// JSONL, one object per line with keys id, text, timestamp, label and an
// optional phase. Lines whose text contains no tokens are dropped; malformed
// lines, duplicate ids, and out-of-range labels raise with the line number.
Corpus load_corpus(const std::string& path, int n_classes);
void save_corpus(const Corpus& corpus, const std::string& path);

// pre before acute_start, acute within [acute_start, acute_end], post after.
Corpus assign_phases(Corpus corpus, std::int64_t acute_start, std::int64_t acute_end);

}  // namespace driftbench
