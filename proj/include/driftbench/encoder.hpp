#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "driftbench/linalg.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

// Reserved hash buckets. Bucket 0 carries the segment separator, bucket 1
// the mask used during masked-token pretraining; content tokens start at 2.
inline constexpr int kSepBucket = 0;
inline constexpr int kMaskBucket = 1;
inline constexpr int kNumSpecialBuckets = 2;

// The separator is a control byte no tokenizer output can collide with.
inline constexpr std::string_view kSepToken = "\x1e";

struct EncoderConfig {
  int hash_buckets = 32768;  // V, includes the reserved buckets
  int embed_dim = 32;        // d
  int hidden_dim = 64;
  int n_classes = 2;
  bool use_bigrams = true;
  // Masked-token pretraining stage run before task training when > 0.
  int mlm_epochs = 0;
  double mask_prob = 0.15;
};

void validate(const EncoderConfig& cfg);  // throws std::invalid_argument

// Lowercased word pieces. A token is a maximal run of [a-z0-9_] or bytes
// >= 0x80; '#' and '@' start a token when followed by a word character, so
// hashtags and mentions survive. Everything else separates.
std::vector<std::string> tokenize(std::string_view text);

// One bucket per unigram, then one per adjacent unigram pair when bigrams
// are enabled ("a b" hashed as the single string "a b"). Tokens equal to the
// reserved separator or mask strings map to their fixed buckets and never
// participate in bigrams.
std::vector<int> hash_features(std::span<const std::string> tokens,
                               const EncoderConfig& cfg);
std::vector<int> hash_unigrams(std::span<const std::string> tokens,
                               const EncoderConfig& cfg);

// Trainable tensors. E doubles as the masked-token output matrix: the
// pretraining logits are E * h, so mutating E moves both the embeddings and
// that head at once.
template <typename S>
struct EncoderParams {
  Mat<S> E;   // hash_buckets x embed_dim
  Mat<S> W1;  // mlp_input_dim x hidden_dim
  std::vector<S> b1;
  Mat<S> W2;  // hidden_dim x n_classes
  std::vector<S> b2;
};

// Uniform(-0.05, 0.05) weights, zero biases. Draw order: E row-major, then
// W1, then W2; draws happen in double and are narrowed to S afterwards so
// float32 and float64 models start from the same values.
template <typename S>
EncoderParams<S> init_encoder_params(const EncoderConfig& cfg, int mlp_input_dim,
                                     std::uint64_t seed) {
  EncoderParams<S> p;
  p.E = Mat<S>(cfg.hash_buckets, cfg.embed_dim);
  p.W1 = Mat<S>(mlp_input_dim, cfg.hidden_dim);
  p.b1.assign(cfg.hidden_dim, S(0));
  p.W2 = Mat<S>(cfg.hidden_dim, cfg.n_classes);
  p.b2.assign(cfg.n_classes, S(0));
  Rng rng(seed);
  for (auto& v : p.E.a) v = static_cast<S>(rng.next_uniform(-0.05, 0.05));
  for (auto& v : p.W1.a) v = static_cast<S>(rng.next_uniform(-0.05, 0.05));
  for (auto& v : p.W2.a) v = static_cast<S>(rng.next_uniform(-0.05, 0.05));
  return p;
}

// Mean of the bucket embeddings. The caller guarantees at least one bucket;
// degenerate empty texts are dropped at corpus load time.
template <typename S>
std::vector<S> encode(const EncoderParams<S>& p, std::span<const int> buckets) {
  if (buckets.empty()) throw std::invalid_argument("encode: empty bucket list");
  const int d = p.E.cols;
  std::vector<S> h(d, S(0));
  for (int b : buckets) axpy(S(1), p.E.row(b), h.data(), d);
  const S inv = S(1) / static_cast<S>(buckets.size());
  for (auto& v : h) v *= inv;
  return h;
}

template <typename S>
std::vector<S> log_softmax(std::vector<S> z) {
  S m = z[0];
  for (S v : z) m = v > m ? v : m;
  S sum = 0;
  for (S v : z) sum += std::exp(v - m);
  const S lse = m + std::log(sum);
  for (auto& v : z) v -= lse;
  return z;
}

// ReLU MLP over the (possibly time-adjusted) embedding; returns class
// log-probabilities.
template <typename S>
std::vector<S> classify(const EncoderParams<S>& p, std::span<const S> x) {
  if (static_cast<int>(x.size()) != p.W1.rows)
    throw std::invalid_argument("classify: input dimension mismatch");
  const int hidden = p.W1.cols, classes = p.W2.cols;
  std::vector<S> z1(p.b1.begin(), p.b1.end());
  for (int i = 0; i < p.W1.rows; ++i) axpy(x[i], p.W1.row(i), z1.data(), hidden);
  for (auto& v : z1) v = v > S(0) ? v : S(0);
  std::vector<S> z2(p.b2.begin(), p.b2.end());
  for (int i = 0; i < hidden; ++i) axpy(z1[i], p.W2.row(i), z2.data(), classes);
  return log_softmax(std::move(z2));
}

// Masked-token logits through the tied embedding matrix.
template <typename S>
std::vector<S> mlm_logits(const EncoderParams<S>& p, std::span<const S> h) {
  std::vector<S> out(p.E.rows);
  for (int v = 0; v < p.E.rows; ++v) out[v] = dot(p.E.row(v), h.data(), p.E.cols);
  return out;
}

}  // namespace driftbench
