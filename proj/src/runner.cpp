#include "driftbench/runner.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>

#include "driftbench/checkpoint.hpp"
#include "driftbench/io.hpp"
#include "driftbench/metrics.hpp"
#include "driftbench/rng.hpp"
#include "driftbench/train.hpp"

namespace driftbench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string ids_digest(const std::vector<std::string>& sorted_ids) {
  std::string joined;
  for (const auto& id : sorted_ids) {
    joined += id;
    joined += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(joined));
  return buf;
}

std::vector<std::uint64_t> effective_seeds(const TrainConfig& cfg,
                                           std::optional<int> max_seeds) {
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (max_seeds) {
    if (*max_seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
    if (static_cast<std::size_t>(*max_seeds) < seeds.size())
      seeds.resize(static_cast<std::size_t>(*max_seeds));
  }
  return seeds;
}

// `suffix` keeps experiment kinds that share a config from sharing a
// directory: a tr pass and a plain run of the same config must not clobber
// each other's metrics.
fs::path run_root(const RunConfig& cfg, const std::optional<std::string>& out_override,
                  const char* suffix = "") {
  fs::path base = out_override ? fs::path(*out_override) : fs::path(cfg.output_dir);
  return base / (config_digest(cfg) + suffix);
}

json predictions_json(const std::vector<TimedExample>& test,
                      const std::vector<int>& preds) {
  json rows = json::array();
  for (std::size_t i = 0; i < test.size(); ++i)
    rows.push_back({{"id", test[i].id}, {"pred", preds[i]}, {"gold", test[i].label}});
  return rows;
}

bool fully_phased(const Corpus& corpus) {
  for (const auto& ex : corpus.examples)
    if (!ex.phase) return false;
  return !corpus.examples.empty();
}

// Phase agreement of the model's embedding space: cluster the time-aware
// embeddings of the whole corpus into three groups and compare against the
// pre/acute/post annotation.
double phase_nmi(const Model<float>& model, const Corpus& corpus, std::uint64_t seed) {
  std::vector<std::vector<double>> points;
  std::vector<int> phases;
  points.reserve(corpus.examples.size());
  phases.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    auto f = featurize(ex, model.cfg, model.head.variant);
    auto emb = time_aware_embedding(model, f);
    points.emplace_back(emb.begin(), emb.end());
    phases.push_back(static_cast<int>(*ex.phase));
  }
  auto clusters = kmeans(points, 3, sub_seed(seed, "kmeans"));
  return nmi(clusters, phases);
}

struct SeedOutcome {
  std::vector<int> preds;
  double f1 = 0;
  std::optional<double> nmi;
};

// Shared by plain runs and PROG steps: everything for one split goes into
// `dir`, ensemble included.
json run_split(const Corpus& corpus, const ExperimentSplit& split, const RunConfig& cfg,
               const std::vector<std::uint64_t>& seeds, const fs::path& dir,
               bool compute_nmi) {
  fs::create_directories(dir);
  save_split(split, dir / "splits.json");
  SplitView view = resolve_split(corpus, split);

  std::vector<int> golds;
  for (const auto& ex : view.test) golds.push_back(ex.label);

  std::vector<std::vector<int>> all_preds;
  double f1_sum = 0, nmi_sum = 0;
  int nmi_count = 0;
  for (std::uint64_t seed : seeds) {
    TrainedModel tm = train_on_examples(view.train, view.dev, cfg.encoder, cfg.temporal,
                                        cfg.train, corpus.n_classes, seed);
    std::vector<int> preds = predict(tm.model, view.test);
    double f1 = task_f1(preds, golds, corpus.n_classes);
    f1_sum += f1;

    fs::path seed_dir = dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    write_json(seed_dir / "predictions.json", predictions_json(view.test, preds));
    json train_log{{"seed", seed},
                   {"selected_epoch", tm.selected_epoch},
                   {"dev_f1", tm.dev_f1},
                   {"test_f1", f1}};
    if (compute_nmi) {
      double score = phase_nmi(tm.model, corpus, seed);
      nmi_sum += score;
      ++nmi_count;
      train_log["nmi"] = score;
    }
    write_json(seed_dir / "train.json", train_log);
    save_model(tm.model, seed_dir / "checkpoint.bin");
    std::cerr << "[run] " << dir.filename().string() << " seed " << seed
              << " f1=" << f1 << "\n";
    all_preds.push_back(std::move(preds));
  }

  std::vector<int> ensemble = ensemble_majority(all_preds);
  write_json(dir / "ensemble_predictions.json", predictions_json(view.test, ensemble));

  json metrics{{"setting", setting_name(split.setting)},
               {"variant", variant_name(cfg.temporal.variant)},
               {"task", corpus.n_classes == 2 ? "binary" : "multiclass"},
               {"n_classes", corpus.n_classes},
               {"f1", task_f1(ensemble, golds, corpus.n_classes)},
               {"f1_seed_mean", f1_sum / static_cast<double>(seeds.size())},
               {"seed_count", seeds.size()},
               {"test_digest", ids_digest(split.test_ids)}};
  if (split.prog_step) metrics["prog_step"] = *split.prog_step;
  if (nmi_count > 0) metrics["nmi"] = nmi_sum / nmi_count;
  return metrics;
}

}  // namespace

fs::path cmd_generate(const RunConfig& cfg,
                      const std::optional<std::string>& out_override) {
  if (!cfg.generator)
    throw std::invalid_argument("generate needs a \"generator\" section in the config");
  fs::path dir = out_override ? fs::path(*out_override) : fs::path(cfg.output_dir);
  fs::create_directories(dir);
  Corpus corpus = generate_drift_corpus(*cfg.generator);
  save_corpus(corpus, (dir / "corpus.jsonl").string());
  write_json(dir / "generator.json", normalized_config(cfg)["generator"]);
  std::cerr << "[generate] " << corpus.size() << " examples -> "
            << (dir / "corpus.jsonl").string() << "\n";
  return dir / "corpus.jsonl";
}

RunArtifacts cmd_run(const RunConfig& cfg, const std::optional<std::string>& out_override,
                     std::optional<int> max_seeds) {
  Corpus corpus = obtain_corpus(cfg);
  auto seeds = effective_seeds(cfg.train, max_seeds);
  fs::path dir = run_root(cfg, out_override);
  fs::create_directories(dir);
  write_json(dir / "config.json", normalized_config(cfg));

  const bool nmi_ready = corpus.n_classes >= 2 && fully_phased(corpus);
  json metrics;
  if (cfg.split.setting == Setting::Prog) {
    auto splits = make_prog_splits(corpus, cfg.split.n_bins);
    double f1_sum = 0, seed_mean_sum = 0;
    json steps = json::array();
    for (const auto& split : splits) {
      char name[24];
      std::snprintf(name, sizeof name, "prog_t%02d", *split.prog_step);
      json step = run_split(corpus, split, cfg, seeds, dir / name, false);
      f1_sum += step["f1"].get<double>();
      seed_mean_sum += step["f1_seed_mean"].get<double>();
      write_json(dir / name / "metrics.json", step);
      steps.push_back(step);
    }
    metrics = json{{"setting", "PROG"},
                   {"variant", variant_name(cfg.temporal.variant)},
                   {"task", corpus.n_classes == 2 ? "binary" : "multiclass"},
                   {"n_classes", corpus.n_classes},
                   {"f1", f1_sum / static_cast<double>(splits.size())},
                   {"f1_seed_mean", seed_mean_sum / static_cast<double>(splits.size())},
                   {"seed_count", seeds.size()},
                   {"prog_steps", splits.size()},
                   {"steps", steps}};
  } else {
    ExperimentSplit split = cfg.split.setting == Setting::Temp
                                ? make_temp_split(corpus, cfg.split.seed)
                                : make_cont_split(corpus, cfg.split.seed);
    metrics = run_split(corpus, split, cfg, seeds, dir, nmi_ready);
  }
  metrics["config_digest"] = config_digest(cfg);
  write_json(dir / "metrics.json", metrics);
  return {dir, metrics};
}

RunArtifacts cmd_tr(const RunConfig& cfg, const std::optional<std::string>& out_override,
                    std::optional<int> max_seeds) {
  Corpus corpus = obtain_corpus(cfg);
  auto seeds = effective_seeds(cfg.train, max_seeds);

  std::vector<TimedExample> sorted = corpus.examples;
  std::sort(sorted.begin(), sorted.end(),
            [](const TimedExample& a, const TimedExample& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.id < b.id;
            });
  TimeBinning binning = equal_count_binning(sorted, cfg.split.n_bins);

  ModelFactory factory = [&](const std::vector<TimedExample>& train,
                             const std::vector<TimedExample>& dev,
                             std::uint64_t seed) -> Predictor {
    TrainedModel tm = train_on_examples(train, dev, cfg.encoder, cfg.temporal, cfg.train,
                                        corpus.n_classes, seed);
    auto model = std::make_shared<Model<float>>(std::move(tm.model));
    return [model](const std::vector<TimedExample>& eval) {
      return predict(*model, eval);
    };
  };

  const int T = binning.T();
  ScoreMatrix mean(T);
  std::vector<double> per_seed_tr;
  for (std::uint64_t seed : seeds) {
    ScoreMatrix m = build_score_matrix(corpus, binning, factory, seed);
    per_seed_tr.push_back(tr_score(m));
    for (std::size_t i = 0; i < m.f.size(); ++i) mean.f[i] += m.f[i];
    std::cerr << "[tr] seed " << seed << " score=" << per_seed_tr.back() << "\n";
  }
  for (auto& v : mean.f) v /= static_cast<double>(seeds.size());
  double tr_mean = 0;
  for (double v : per_seed_tr) tr_mean += v;
  tr_mean /= static_cast<double>(per_seed_tr.size());

  fs::path dir = run_root(cfg, out_override, "-tr");
  fs::create_directories(dir);
  write_json(dir / "config.json", normalized_config(cfg));

  json rows = json::array();
  for (int i = 0; i < T; ++i) {
    json row = json::array();
    for (int j = 0; j < T; ++j) row.push_back(mean.at(i, j));
    rows.push_back(row);
  }
  write_json(dir / "matrix.json",
             json{{"T", T}, {"per_seed_tr", per_seed_tr}, {"mean_matrix", rows}});

  json metrics{{"setting", "TR"},
               {"variant", variant_name(cfg.temporal.variant)},
               {"tr", tr_mean},
               {"seed_count", seeds.size()},
               {"config_digest", config_digest(cfg)}};
  write_json(dir / "metrics.json", metrics);

  // Human-readable echo of the matrix, on stderr like the other progress
  // output so stdout stays machine-readable.
  std::fprintf(stderr, "bin-to-bin F1 (train row, eval column), mean of %zu seeds\n",
               seeds.size());
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j)
      std::fprintf(stderr, "%s%.4f", j ? " " : "", mean.at(i, j));
    std::fprintf(stderr, "\n");
  }
  std::fprintf(stderr, "temporal rigidity: %.6f\n", tr_mean);
  return {dir, metrics};
}

namespace {

struct LoadedRun {
  fs::path dir;
  json metrics;
};

// id -> (pred, gold) from a persisted ensemble prediction file.
std::map<std::string, std::pair<int, int>> load_ensemble(const fs::path& dir) {
  json rows = json::parse(read_file(dir / "ensemble_predictions.json"));
  std::map<std::string, std::pair<int, int>> out;
  for (const auto& r : rows)
    out[r.at("id").get<std::string>()] = {r.at("pred").get<int>(),
                                          r.at("gold").get<int>()};
  return out;
}

std::string run_label(const json& metrics) {
  return metrics.at("variant").get<std::string>() + "/" +
         metrics.at("setting").get<std::string>();
}

}  // namespace

json cmd_report(const std::vector<fs::path>& run_dirs, bool percent,
                std::ostream& table_out) {
  if (run_dirs.empty()) throw std::invalid_argument("report: no run directories given");
  std::vector<LoadedRun> runs;
  for (const auto& dir : run_dirs) {
    fs::path mpath = dir / "metrics.json";
    if (!fs::exists(mpath))
      throw std::invalid_argument("report: " + mpath.string() + " not found");
    runs.push_back({dir, json::parse(read_file(mpath))});
  }

  // One row per variant, merging that variant's runs by setting.
  static const char* kOrder[] = {"NONE", "TM", "SEP", "DCWE", "LMSOC", "TAPH", "TDA"};
  std::map<std::string, json> rows;
  auto row_of = [&](const std::string& variant) -> json& {
    auto it = rows.find(variant);
    if (it == rows.end()) it = rows.emplace(variant, json{{"variant", variant}}).first;
    return it->second;
  };

  for (const auto& run : runs) {
    const std::string variant = run.metrics.at("variant").get<std::string>();
    const std::string setting = run.metrics.at("setting").get<std::string>();
    json& row = row_of(variant);
    if (setting == "TR") {
      row["tr"] = run.metrics.at("tr");
      continue;
    }
    std::string key;
    if (setting == "CONT") key = "cont_f1";
    else if (setting == "TEMP") key = "temp_f1";
    else key = "prog_f1";
    if (row.contains(key))
      throw std::invalid_argument("report: duplicate " + setting + " run for variant " +
                                  variant);
    row[key] = run.metrics.at("f1");
    row[key + "_seed_mean"] = run.metrics.at("f1_seed_mean");
    if (setting != "PROG") row["test_digest_" + setting] = run.metrics.at("test_digest");
    // The phase-agreement number reported for a variant is its TEMP run's.
    if (setting == "TEMP" && run.metrics.contains("nmi"))
      row["nmi"] = run.metrics.at("nmi");
  }

  for (auto& [variant, row] : rows) {
    if (row.contains("cont_f1") && row.contains("temp_f1")) {
      if (row.at("test_digest_CONT") != row.at("test_digest_TEMP"))
        throw std::invalid_argument("report: paired CONT/TEMP runs for variant " +
                                    variant + " have different test sets");
      row["diff"] = row["cont_f1"].get<double>() - row["temp_f1"].get<double>();
      row["diff_seed_mean"] = row["cont_f1_seed_mean"].get<double>() -
                              row["temp_f1_seed_mean"].get<double>();
    }
    row.erase("test_digest_CONT");
    row.erase("test_digest_TEMP");
  }

  // Pairwise significance between runs that share a test set.
  json pairs = json::array();
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      const json& ma = runs[a].metrics;
      const json& mb = runs[b].metrics;
      if (!ma.contains("test_digest") || !mb.contains("test_digest")) continue;
      if (ma.at("test_digest") != mb.at("test_digest")) continue;
      auto pa = load_ensemble(runs[a].dir);
      auto pb = load_ensemble(runs[b].dir);
      std::vector<int> preds_a, preds_b, golds;
      for (const auto& [id, pg] : pa) {
        auto it = pb.find(id);
        if (it == pb.end())
          throw std::invalid_argument("report: paired runs disagree on test ids");
        preds_a.push_back(pg.first);
        preds_b.push_back(it->second.first);
        golds.push_back(pg.second);
      }
      pairs.push_back({{"a", run_label(ma)},
                       {"b", run_label(mb)},
                       {"p", mcnemar_p(preds_a, preds_b, golds)}});
    }
  }

  const double scale = percent ? 100.0 : 1.0;
  auto fmt = [&](const json& row, const char* key) {
    if (!row.contains(key)) return std::string(percent ? "     -" : "      -");
    char buf[32];
    std::snprintf(buf, sizeof buf, percent ? "%6.2f" : "%7.4f",
                  row.at(key).get<double>() * scale);
    return std::string(buf);
  };
  table_out << "variant   cont    temp    diff     prog    tr      nmi\n";
  json ordered = json::array();
  for (const char* variant : kOrder) {
    auto it = rows.find(variant);
    if (it == rows.end()) continue;
    const json& row = it->second;
    char name[16];
    std::snprintf(name, sizeof name, "%-8s", variant);
    table_out << name << ' ' << fmt(row, "cont_f1") << ' ' << fmt(row, "temp_f1") << ' '
              << fmt(row, "diff") << ' ' << fmt(row, "prog_f1") << ' ' << fmt(row, "tr")
              << ' ' << fmt(row, "nmi") << "\n";
    ordered.push_back(row);
  }
  for (const auto& [variant, row] : rows) {
    bool known = false;
    for (const char* v : kOrder)
      if (variant == v) known = true;
    if (!known) ordered.push_back(row);
  }
  if (!pairs.empty()) {
    table_out << "mcnemar:\n";
    for (const auto& p : pairs)
      table_out << "  " << p.at("a").get<std::string>() << " vs "
                << p.at("b").get<std::string>() << "  p=" << p.at("p").get<double>()
                << "\n";
  }
  return json{{"scale", percent ? "percent" : "unit"},
              {"rows", ordered},
              {"mcnemar", pairs}};
}

}  // namespace driftbench
