#include "driftbench/runconfig.hpp"

#include <cinttypes>
#include <cstdio>

#include "driftbench/io.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const char* section,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("config: unknown key \"") + key +
                                  "\" in section \"" + section + "\"");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

DriftGenConfig parse_generator(const json& j) {
  reject_unknown(j, "generator",
                 {"n_examples", "t_start", "t_end", "n_classes", "stable_vocab",
                  "drifting_vocab", "neologism_vocab", "noise_vocab", "tokens_per_text",
                  "drift_time", "neologism_time", "acute_start", "acute_end",
                  "label_noise", "seed"});
  DriftGenConfig g;
  take(j, "n_examples", g.n_examples);
  take(j, "t_start", g.t_start);
  take(j, "t_end", g.t_end);
  take(j, "n_classes", g.n_classes);
  take(j, "stable_vocab", g.stable_vocab);
  take(j, "drifting_vocab", g.drifting_vocab);
  take(j, "neologism_vocab", g.neologism_vocab);
  take(j, "noise_vocab", g.noise_vocab);
  take(j, "tokens_per_text", g.tokens_per_text);
  take(j, "drift_time", g.drift_time);
  take(j, "neologism_time", g.neologism_time);
  take(j, "acute_start", g.acute_start);
  take(j, "acute_end", g.acute_end);
  take(j, "label_noise", g.label_noise);
  take(j, "seed", g.seed);
  validate(g);
  return g;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  reject_unknown(j, "top level",
                 {"corpus", "generator", "split", "encoder", "temporal", "train",
                  "output_dir"});
  RunConfig cfg;

  const bool has_corpus = j.contains("corpus");
  const bool has_generator = j.contains("generator");
  if (has_corpus == has_generator)
    throw std::invalid_argument(
        "config: exactly one of \"corpus\" or \"generator\" must be present");

  if (has_corpus) {
    const json& c = j.at("corpus");
    reject_unknown(c, "corpus", {"path", "n_classes"});
    if (!c.contains("path"))
      throw std::invalid_argument("config: corpus section needs a \"path\"");
    cfg.corpus_path = c.at("path").get<std::string>();
    take(c, "n_classes", cfg.corpus_n_classes);
    if (cfg.corpus_n_classes < 2)
      throw std::invalid_argument("config: corpus n_classes must be at least 2");
  } else {
    cfg.generator = parse_generator(j.at("generator"));
    cfg.corpus_n_classes = cfg.generator->n_classes;
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown(s, "split", {"setting", "seed", "n_bins"});
    if (s.contains("setting")) cfg.split.setting = setting_from(s.at("setting").get<std::string>());
    take(s, "seed", cfg.split.seed);
    take(s, "n_bins", cfg.split.n_bins);
    if (cfg.split.n_bins < 3)
      throw std::invalid_argument("config: split n_bins must be at least 3");
  }

  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    reject_unknown(e, "encoder",
                   {"hash_buckets", "embed_dim", "hidden_dim", "use_bigrams",
                    "mlm_epochs", "mask_prob"});
    take(e, "hash_buckets", cfg.encoder.hash_buckets);
    take(e, "embed_dim", cfg.encoder.embed_dim);
    take(e, "hidden_dim", cfg.encoder.hidden_dim);
    take(e, "use_bigrams", cfg.encoder.use_bigrams);
    take(e, "mlm_epochs", cfg.encoder.mlm_epochs);
    take(e, "mask_prob", cfg.encoder.mask_prob);
  }
  cfg.encoder.n_classes = cfg.corpus_n_classes;
  validate(cfg.encoder);

  if (j.contains("temporal")) {
    const json& t = j.at("temporal");
    reject_unknown(t, "temporal",
                   {"variant", "lambda_prior", "prior_k", "k_g", "lambda_grl", "n_bins"});
    if (t.contains("variant")) cfg.temporal.variant = variant_from(t.at("variant").get<std::string>());
    take(t, "lambda_prior", cfg.temporal.lambda_prior);
    take(t, "prior_k", cfg.temporal.prior_k);
    take(t, "k_g", cfg.temporal.k_g);
    take(t, "lambda_grl", cfg.temporal.lambda_grl);
    take(t, "n_bins", cfg.temporal.n_bins);
  }
  validate(cfg.temporal);

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, "train",
                   {"learning_rate", "batch_size", "weight_decay", "epochs", "seeds",
                    "beta1", "beta2", "adam_eps"});
    take(t, "learning_rate", cfg.train.learning_rate);
    take(t, "batch_size", cfg.train.batch_size);
    take(t, "weight_decay", cfg.train.weight_decay);
    take(t, "epochs", cfg.train.epochs);
    take(t, "seeds", cfg.train.seeds);
    take(t, "beta1", cfg.train.beta1);
    take(t, "beta2", cfg.train.beta2);
    take(t, "adam_eps", cfg.train.adam_eps);
  }
  validate(cfg.train);

  take(j, "output_dir", cfg.output_dir);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/false);
  return parse_run_config(j);
}

json normalized_config(const RunConfig& cfg) {
  json j;
  if (cfg.corpus_path) {
    j["corpus"] = {{"path", *cfg.corpus_path}, {"n_classes", cfg.corpus_n_classes}};
  } else {
    const DriftGenConfig& g = *cfg.generator;
    j["generator"] = {{"n_examples", g.n_examples},
                      {"t_start", g.t_start},
                      {"t_end", g.t_end},
                      {"n_classes", g.n_classes},
                      {"stable_vocab", g.stable_vocab},
                      {"drifting_vocab", g.drifting_vocab},
                      {"neologism_vocab", g.neologism_vocab},
                      {"noise_vocab", g.noise_vocab},
                      {"tokens_per_text", g.tokens_per_text},
                      {"drift_time", g.drift_time},
                      {"neologism_time", g.neologism_time},
                      {"acute_start", g.acute_start},
                      {"acute_end", g.acute_end},
                      {"label_noise", g.label_noise},
                      {"seed", g.seed}};
  }
  j["split"] = {{"setting", setting_name(cfg.split.setting)},
                {"seed", cfg.split.seed},
                {"n_bins", cfg.split.n_bins}};
  j["encoder"] = {{"hash_buckets", cfg.encoder.hash_buckets},
                  {"embed_dim", cfg.encoder.embed_dim},
                  {"hidden_dim", cfg.encoder.hidden_dim},
                  {"use_bigrams", cfg.encoder.use_bigrams},
                  {"mlm_epochs", cfg.encoder.mlm_epochs},
                  {"mask_prob", cfg.encoder.mask_prob}};
  j["temporal"] = {{"variant", variant_name(cfg.temporal.variant)},
                   {"lambda_prior", cfg.temporal.lambda_prior},
                   {"prior_k", cfg.temporal.prior_k},
                   {"k_g", cfg.temporal.k_g},
                   {"lambda_grl", cfg.temporal.lambda_grl},
                   {"n_bins", cfg.temporal.n_bins}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"weight_decay", cfg.train.weight_decay},
                {"epochs", cfg.train.epochs},
                {"seeds", cfg.train.seeds},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"adam_eps", cfg.train.adam_eps}};
  return j;
}

std::string config_digest(const RunConfig& cfg) {
  // output_dir stays out of the normalized form on purpose: pointing the
  // same experiment somewhere else must not rename it.
  std::uint64_t h = fnv1a64(normalized_config(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Corpus obtain_corpus(const RunConfig& cfg) {
  if (cfg.corpus_path) return load_corpus(*cfg.corpus_path, cfg.corpus_n_classes);
  return generate_drift_corpus(*cfg.generator);
}

}  // namespace driftbench
