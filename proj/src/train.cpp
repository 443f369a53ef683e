#include "driftbench/train.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "driftbench/metrics.hpp"
#include "driftbench/optim.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train: " + msg); };
  if (cfg.learning_rate < 0) fail("learning_rate must be non-negative");
  if (cfg.batch_size <= 0) fail("batch_size must be positive");
  if (cfg.weight_decay < 0) fail("weight_decay must be non-negative");
  if (cfg.epochs < 0) fail("epochs must be non-negative");
  if (cfg.seeds.empty()) fail("need at least one seed");
  std::vector<std::uint64_t> s = cfg.seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) fail("seeds must be distinct");
  if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
    fail("betas must lie in [0, 1)");
  if (cfg.adam_eps <= 0) fail("adam_eps must be positive");
}

SplitView resolve_split(const Corpus& corpus, const ExperimentSplit& split) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(corpus.examples.size());
  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    index[corpus.examples[i].id] = i;

  auto resolve = [&](const std::vector<std::string>& ids) {
    std::vector<TimedExample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = index.find(id);
      if (it == index.end())
        throw std::invalid_argument("split references unknown id \"" + id + "\"");
      out.push_back(corpus.examples[it->second]);
    }
    std::sort(out.begin(), out.end(), [](const TimedExample& a, const TimedExample& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.id < b.id;
    });
    return out;
  };

  SplitView view;
  view.train = resolve(split.train_ids);
  view.dev = resolve(split.dev_ids);
  view.test = resolve(split.test_ids);
  if (view.train.empty()) throw std::invalid_argument("split has an empty train set");
  if (view.dev.empty()) throw std::invalid_argument("split has an empty dev set");
  return view;
}

namespace {

std::vector<FeaturizedExample> featurize_all(const std::vector<TimedExample>& examples,
                                             const EncoderConfig& cfg,
                                             HeadVariant variant) {
  std::vector<FeaturizedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(featurize(ex, cfg, variant));
  return out;
}

double dev_score(const Model<float>& model, const std::vector<FeaturizedExample>& dev,
                 int n_classes) {
  std::vector<int> preds, golds;
  preds.reserve(dev.size());
  golds.reserve(dev.size());
  for (const auto& ex : dev) {
    preds.push_back(predict_one(model, ex));
    golds.push_back(ex.label);
  }
  return n_classes == 2 ? f1_binary(preds, golds) : f1_macro(preds, golds, n_classes);
}

}  // namespace

TrainedModel train_on_examples(const std::vector<TimedExample>& train,
                               const std::vector<TimedExample>& dev,
                               const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
                               const TrainConfig& train_cfg, int n_classes,
                               std::uint64_t seed) {
  validate(enc_cfg);
  validate(head_cfg);
  validate(train_cfg);
  if (train.empty()) throw std::invalid_argument("train_on_examples: empty train set");
  if (dev.empty()) throw std::invalid_argument("train_on_examples: empty dev set");

  EncoderConfig cfg = enc_cfg;
  cfg.n_classes = n_classes;

  // Time-conditioned heads bin over the training window only; unseen later
  // timestamps clamp to the last bin.
  const bool needs_bins = head_cfg.variant == HeadVariant::Dcwe ||
                          head_cfg.variant == HeadVariant::Lmsoc ||
                          head_cfg.variant == HeadVariant::Tda;
  TimeBinning binning;
  if (needs_bins) {
    std::vector<TimedExample> sorted = train;
    std::sort(sorted.begin(), sorted.end(),
              [](const TimedExample& a, const TimedExample& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.id < b.id;
              });
    binning = head_binning(sorted, head_cfg.n_bins);
  }

  Model<float> model =
      make_model<float>(cfg, head_cfg, needs_bins ? &binning : nullptr, seed);

  if (cfg.mlm_epochs > 0) {
    // Pretraining sees the same text the task model will: for TM that means
    // the date tokens, for everything else the raw text. Unigrams only.
    std::vector<std::vector<int>> texts;
    texts.reserve(train.size() + dev.size());
    for (const auto* side : {&train, &dev}) {
      for (const auto& ex : *side) {
        std::vector<std::string> tokens = tokenize(ex.text);
        if (head_cfg.variant == HeadVariant::TM)
          tokens = prepend_time_tokens(tokens, ex.timestamp);
        texts.push_back(hash_unigrams(tokens, cfg));
      }
    }
    mlm_pretrain(model.enc, texts, train_cfg, cfg.mlm_epochs, cfg.mask_prob,
                 sub_seed(seed, "mlm"));
  }

  auto train_feat = featurize_all(train, cfg, head_cfg.variant);
  auto dev_feat = featurize_all(dev, cfg, head_cfg.variant);

  auto params = trainable_params(model.enc, model.head);
  AdamHyper hyper{train_cfg.learning_rate, train_cfg.beta1, train_cfg.beta2,
                  train_cfg.adam_eps, train_cfg.weight_decay};
  AdamW<float> opt(hyper, params);
  Grads<float> grads = make_grads(model);
  auto grefs = trainable_params(grads.enc, grads.head);

  Rng shuffle_rng(sub_seed(seed, "batch-shuffle"));
  std::vector<std::size_t> order(train_feat.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainedModel best;
  best.model = model;  // epochs = 0 returns the untouched initialization
  best.selected_epoch = 0;
  double best_f1 = -1.0;

  std::vector<FeaturizedExample> batch;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_cfg.batch_size)) {
      std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_feat[order[i]]);
      grads.zero();
      forward_backward<float>(model, batch, &grads);
      opt.step(params, grefs);
    }
    double f1 = dev_score(model, dev_feat, n_classes);
    best.dev_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best.model = model;
      best.selected_epoch = epoch;
    }
  }
  return best;
}

TrainedModel train_model(const Corpus& corpus, const ExperimentSplit& split,
                         const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
                         const TrainConfig& train_cfg, std::uint64_t seed) {
  SplitView view = resolve_split(corpus, split);
  return train_on_examples(view.train, view.dev, enc_cfg, head_cfg, train_cfg,
                           corpus.n_classes, seed);
}

std::vector<int> predict(const Model<float>& model,
                         std::span<const TimedExample> examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples)
    out.push_back(predict_one(model, featurize(ex, model.cfg, model.head.variant)));
  return out;
}

std::vector<int> ensemble_majority(const std::vector<std::vector<int>>& predictions) {
  if (predictions.empty())
    throw std::invalid_argument("ensemble_majority: no prediction runs");
  const std::size_t n = predictions[0].size();
  for (const auto& p : predictions)
    if (p.size() != n)
      throw std::invalid_argument("ensemble_majority: prediction lengths differ");

  std::vector<int> out(n);
  std::vector<int> counts;
  for (std::size_t i = 0; i < n; ++i) {
    counts.clear();
    for (const auto& p : predictions) {
      if (p[i] < 0) throw std::invalid_argument("ensemble_majority: negative label");
      if (static_cast<std::size_t>(p[i]) >= counts.size()) counts.resize(p[i] + 1, 0);
      ++counts[p[i]];
    }
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
      if (counts[c] > counts[best]) best = static_cast<int>(c);
    out[i] = best;
  }
  return out;
}

std::vector<double> mlm_pretrain(EncoderParams<float>& params,
                                 const std::vector<std::vector<int>>& texts,
                                 const TrainConfig& opt_cfg, int epochs,
                                 double mask_prob, std::uint64_t seed) {
  if (epochs < 0) throw std::invalid_argument("mlm_pretrain: epochs must be non-negative");
  if (mask_prob < 0.0 || mask_prob > 1.0)
    throw std::invalid_argument("mlm_pretrain: mask_prob must lie in [0, 1]");
  if (epochs == 0 || texts.empty()) return {};

  const int V = params.E.rows, d = params.E.cols;
  std::vector<ParamRef<float>> pref{{"E", params.E.a.data(), params.E.size(), true}};
  AdamHyper hyper{opt_cfg.learning_rate, opt_cfg.beta1, opt_cfg.beta2, opt_cfg.adam_eps,
                  opt_cfg.weight_decay};
  AdamW<float> opt(hyper, pref);
  Mat<float> gE(V, d);
  std::vector<ParamRef<float>> gref{{"E", gE.a.data(), gE.size(), true}};

  Rng rng(seed);
  std::vector<std::size_t> order(texts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> epoch_losses;
  std::vector<int> kept, masked;
  std::vector<float> h(d), dh(d);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt_cfg.batch_size)) {
      std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opt_cfg.batch_size));
      gE.zero();
      std::size_t batch_masked = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& text = texts[order[i]];
        kept.clear();
        masked.clear();
        // One uniform per position, drawn even when mask_prob is 0 so the
        // stream layout never depends on the probability.
        for (int b : text) (rng.next_real() < mask_prob ? masked : kept).push_back(b);
        if (masked.empty() || kept.empty()) continue;

        std::fill(h.begin(), h.end(), 0.0f);
        for (int b : kept) axpy(1.0f, params.E.row(b), h.data(), d);
        const float inv = 1.0f / static_cast<float>(kept.size());
        for (auto& v : h) v *= inv;

        std::vector<float> logits = mlm_logits(params, std::span<const float>(h));
        std::vector<float> logq = log_softmax(std::move(logits));
        // All masked targets of a text share the same logits, so their
        // softmax-minus-onehot terms collapse into one dense pass.
        const float n_masked = static_cast<float>(masked.size());
        std::vector<float> dl(V);
        for (int v = 0; v < V; ++v) dl[v] = n_masked * std::exp(logq[v]);
        for (int target : masked) {
          loss_sum += -static_cast<double>(logq[target]);
          ++loss_count;
          ++batch_masked;
          dl[target] -= 1.0f;
        }
        std::fill(dh.begin(), dh.end(), 0.0f);
        for (int v = 0; v < V; ++v) {
          if (dl[v] == 0.0f) continue;
          axpy(dl[v], h.data(), gE.row(v), d);
          axpy(dl[v], params.E.row(v), dh.data(), d);
        }
        for (int b : kept) axpy(inv, dh.data(), gE.row(b), d);
      }
      if (batch_masked == 0) continue;  // nothing to learn from; skip the step
      const float scale = 1.0f / static_cast<float>(batch_masked);
      for (auto& v : gE.a) v *= scale;
      opt.step(pref, gref);
    }
    epoch_losses.push_back(loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);
  }
  return epoch_losses;
}

}  // namespace driftbench
