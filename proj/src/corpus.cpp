#include "driftbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "driftbench/encoder.hpp"
#include "driftbench/io.hpp"
#include "driftbench/rng.hpp"
#include "json.hpp"

namespace driftbench {

using nlohmann::json;

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Pre: return "pre";
    case Phase::Acute: return "acute";
    case Phase::Post: return "post";
  }
  return "?";
}

Phase phase_from(std::string_view s) {
  if (s == "pre") return Phase::Pre;
  if (s == "acute") return Phase::Acute;
  if (s == "post") return Phase::Post;
  throw std::invalid_argument("unknown phase \"" + std::string(s) + "\"");
}

void validate(const DriftGenConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("generator: " + msg); };
  if (cfg.n_examples <= 0) fail("n_examples must be positive");
  if (cfg.tokens_per_text <= 0) fail("tokens_per_text must be positive");
  if (cfg.n_classes < 2) fail("n_classes must be at least 2");
  if (cfg.stable_vocab <= 0) fail("stable_vocab must be positive");
  if (cfg.drifting_vocab < 0 || cfg.neologism_vocab < 0 || cfg.noise_vocab < 0)
    fail("vocabulary sizes must be non-negative");
  if (cfg.t_start > cfg.t_end) fail("t_start must not exceed t_end");
  if (cfg.drift_time <= cfg.t_start || cfg.drift_time > cfg.t_end)
    fail("drift_time must lie inside (t_start, t_end]");
  if (cfg.acute_start > cfg.acute_end) fail("acute_start must not exceed acute_end");
  if (cfg.label_noise < 0.0 || cfg.label_noise > 1.0)
    fail("label_noise must lie in [0, 1]");
}

namespace {

int token_class(int kind, int index, std::int64_t ts, const DriftGenConfig& cfg) {
  // kind: 0 stable, 1 drifting, 2 neologism, 3 noise (no vote)
  switch (kind) {
    case 0: return index % cfg.n_classes;
    case 1:
      return ts < cfg.drift_time ? index % cfg.n_classes
                                 : (index + 1) % cfg.n_classes;
    case 2: return index % cfg.n_classes;
    default: return -1;
  }
}

std::string token_name(int kind, int index) {
  static const char* prefix[] = {"stb", "drf", "neo", "nse"};
  return prefix[kind] + std::to_string(index);
}

}  // namespace

Corpus generate_drift_corpus(const DriftGenConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.n_classes = cfg.n_classes;
  corpus.examples.reserve(cfg.n_examples);

  const int sizes[4] = {cfg.stable_vocab, cfg.drifting_vocab, cfg.neologism_vocab,
                        cfg.noise_vocab};

  // Draw order per example: timestamp, one uniform per token slot, then the
  // noise pair (flip uniform and class offset), both consumed whether or not
  // the label flips. Fixed so artifact reruns stay byte-identical and so
  // corpora that differ only in label_noise differ only in labels.
  for (int k = 0; k < cfg.n_examples; ++k) {
    TimedExample ex;
    ex.timestamp = rng.next_range(cfg.t_start, cfg.t_end);

    const bool neo_active = ex.timestamp >= cfg.neologism_time;
    std::int64_t total = 0;
    for (int kind = 0; kind < 4; ++kind)
      if (kind != 2 || neo_active) total += sizes[kind];

    std::vector<int> votes(cfg.n_classes, 0);
    std::string text;
    for (int slot = 0; slot < cfg.tokens_per_text; ++slot) {
      std::int64_t u = static_cast<std::int64_t>(rng.next_below(total));
      int kind = 0, index = 0;
      for (int cand = 0; cand < 4; ++cand) {
        if (cand == 2 && !neo_active) continue;
        if (u < sizes[cand]) {
          kind = cand;
          index = static_cast<int>(u);
          break;
        }
        u -= sizes[cand];
      }
      int cls = token_class(kind, index, ex.timestamp, cfg);
      if (cls >= 0) ++votes[cls];
      if (slot) text += ' ';
      text += token_name(kind, index);
    }
    ex.text = std::move(text);

    int label = 0;
    for (int c = 1; c < cfg.n_classes; ++c)
      if (votes[c] > votes[label]) label = c;

    double flip = rng.next_real();
    if (cfg.n_classes > 1) {
      int offset = 1 + static_cast<int>(rng.next_below(cfg.n_classes - 1));
      if (flip < cfg.label_noise) label = (label + offset) % cfg.n_classes;
    }
    ex.label = label;

    if (ex.timestamp < cfg.acute_start)
      ex.phase = Phase::Pre;
    else if (ex.timestamp <= cfg.acute_end)
      ex.phase = Phase::Acute;
    else
      ex.phase = Phase::Post;

    char id[16];
    std::snprintf(id, sizeof id, "ex%06d", k);
    ex.id = id;
    corpus.examples.push_back(std::move(ex));
  }

  std::sort(corpus.examples.begin(), corpus.examples.end(),
            [](const TimedExample& a, const TimedExample& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.id < b.id;
            });
  return corpus;
}

Corpus load_corpus(const std::string& path, int n_classes) {
  if (n_classes < 2) throw std::invalid_argument("n_classes must be at least 2");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);

  Corpus corpus;
  corpus.n_classes = n_classes;
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (j.is_discarded()) fail("malformed JSON");
    if (!j.is_object()) fail("expected a JSON object");
    for (const char* key : {"id", "text", "timestamp", "label"})
      if (!j.contains(key)) fail(std::string("missing field \"") + key + "\"");
    if (!j["id"].is_string() || !j["text"].is_string() ||
        !j["timestamp"].is_number_integer() || !j["label"].is_number_integer())
      fail("field has wrong type");

    TimedExample ex;
    ex.id = j["id"].get<std::string>();
    ex.text = j["text"].get<std::string>();
    ex.timestamp = j["timestamp"].get<std::int64_t>();
    ex.label = j["label"].get<int>();
    if (ex.label < 0 || ex.label >= n_classes)
      fail("label " + std::to_string(ex.label) + " out of range [0, " +
           std::to_string(n_classes) + ")");
    if (!seen.insert(ex.id).second) fail("duplicate id \"" + ex.id + "\"");
    if (j.contains("phase")) {
      if (!j["phase"].is_string()) fail("phase must be a string");
      ex.phase = phase_from(j["phase"].get<std::string>());
    }
    // Texts with no tokens cannot be embedded; drop them here rather than
    // erroring deep inside training.
    if (tokenize(ex.text).empty()) continue;
    corpus.examples.push_back(std::move(ex));
  }

  std::sort(corpus.examples.begin(), corpus.examples.end(),
            [](const TimedExample& a, const TimedExample& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.id < b.id;
            });
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    json j{{"id", ex.id},
           {"label", ex.label},
           {"text", ex.text},
           {"timestamp", ex.timestamp}};
    if (ex.phase) j["phase"] = phase_name(*ex.phase);
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

Corpus assign_phases(Corpus corpus, std::int64_t acute_start, std::int64_t acute_end) {
  if (acute_start > acute_end)
    throw std::invalid_argument("acute_start must not exceed acute_end");
  for (auto& ex : corpus.examples) {
    if (ex.timestamp < acute_start)
      ex.phase = Phase::Pre;
    else if (ex.timestamp <= acute_end)
      ex.phase = Phase::Acute;
    else
      ex.phase = Phase::Post;
  }
  return corpus;
}

}  // namespace driftbench
