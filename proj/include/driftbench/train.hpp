#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "driftbench/corpus.hpp"
#include "driftbench/model.hpp"
#include "driftbench/splits.hpp"

namespace driftbench {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  double weight_decay = 1e-3;
  int epochs = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

void validate(const TrainConfig& cfg);  // throws std::invalid_argument

struct TrainedModel {
  Model<float> model;       // snapshot of the best dev epoch
  int selected_epoch = 0;   // 1-based
  std::vector<double> dev_f1;  // one entry per epoch
};

// One seeded run: optional masked-token pretraining, then task epochs with
// AdamW. After each epoch the dev F1 (binary or macro by class count) is
// recorded; the returned model is the snapshot of the best epoch, ties going
// to the earliest.
TrainedModel train_on_examples(const std::vector<TimedExample>& train,
                               const std::vector<TimedExample>& dev,
                               const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
                               const TrainConfig& train_cfg, int n_classes,
                               std::uint64_t seed);

// Resolves split ids against the corpus and delegates to train_on_examples.
TrainedModel train_model(const Corpus& corpus, const ExperimentSplit& split,
                         const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
                         const TrainConfig& train_cfg, std::uint64_t seed);

// Pure per-example inference; the output order matches the input order.
std::vector<int> predict(const Model<float>& model,
                         std::span<const TimedExample> examples);

// Per-position majority vote across runs; ties go to the lowest class id.
std::vector<int> ensemble_majority(const std::vector<std::vector<int>>& predictions);

// Masked-token pretraining over tokenized texts (unigram buckets only).
// Each bucket is masked with probability mask_prob; the original id is
// predicted from the mean embedding of the unmasked buckets through the tied
// output matrix. Only E updates. Returns the mean masked cross-entropy per
// epoch. Batches with no masked positions skip their optimizer step, so
// mask_prob = 0 leaves the parameters bit-identical.
std::vector<double> mlm_pretrain(EncoderParams<float>& params,
                                 const std::vector<std::vector<int>>& texts,
                                 const TrainConfig& opt, int epochs, double mask_prob,
                                 std::uint64_t seed);

// Resolved view of one split: pointers into the corpus, in (timestamp, id)
// order. Throws when an id is unknown or the train or dev side is empty.
struct SplitView {
  std::vector<TimedExample> train;
  std::vector<TimedExample> dev;
  std::vector<TimedExample> test;
};
SplitView resolve_split(const Corpus& corpus, const ExperimentSplit& split);

}  // namespace driftbench
