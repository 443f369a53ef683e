#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftbench/encoder.hpp"
#include "driftbench/linalg.hpp"
#include "driftbench/splits.hpp"

namespace driftbench {

// Exactly one strategy is active per model; only that strategy's parameter
// block is allocated.
//   None   plain encoder
//   TM     date tokens prepended to the text
//   Sep    date tokens appended after a separator token
//   Dcwe   additive per-bin embedding offset with a smoothness prior
//   Lmsoc  frozen spectral time embedding concatenated to the sentence vector
//   Taph   projection onto the hyperplane orthogonal to a learned direction
//   Tda    adversarial time-bin classifier behind a gradient reversal
enum class HeadVariant { None, TM, Sep, Dcwe, Lmsoc, Taph, Tda };

const char* variant_name(HeadVariant v);
HeadVariant variant_from(const std::string& s);  // throws on unknown name

struct HeadConfig {
  HeadVariant variant = HeadVariant::None;
  double lambda_prior = 0.01;  // Dcwe prior weight
  double prior_k = 1000.0;     // Dcwe smoothness factor between adjacent bins
  int k_g = 4;                 // Lmsoc embedding width (clamped to T-1)
  double lambda_grl = 1.0;     // Tda reversal strength, must be positive
  int n_bins = 10;             // cap for the head's time binning
};

void validate(const HeadConfig& cfg);  // throws std::invalid_argument

template <typename S>
struct TemporalHead {
  HeadVariant variant = HeadVariant::None;
  TimeBinning binning;  // Dcwe / Lmsoc / Tda
  S lambda_prior = 0;
  S prior_k = 0;
  S lambda_grl = 0;
  Mat<S> offsets;     // Dcwe: T x d, starts at the prior mean (zero)
  Mat<S> time_embed;  // Lmsoc: T x k_g, frozen after construction
  std::vector<S> w;   // Taph: learned normal direction, d
  Mat<S> time_W;      // Tda: d x T
  std::vector<S> time_b;
};

// "YYYY", "MM", "DD" for the UTC calendar day of an epoch-seconds timestamp,
// month and day zero-padded to two digits.
std::array<std::string, 3> date_tokens(std::int64_t ts);

std::vector<std::string> prepend_time_tokens(const std::vector<std::string>& tokens,
                                             std::int64_t ts);
// Appends separator + date tokens; the separator maps to its reserved bucket.
std::vector<std::string> append_time_segment(const std::vector<std::string>& tokens,
                                             std::int64_t ts);

// Columns are the k_g lowest nontrivial eigenvectors of the path-graph
// Laplacian over T ordered bins, unit-normalized: column k (1-based) holds
// cos(pi * k * (t + 0.5) / T) scaled by sqrt(2/T). Always computed in double.
Mat<double> lmsoc_time_embedding(int T, int k_g);

// H_t = H - (w_hat . H) w_hat with w_hat = w / |w|. Throws when |w| < 1e-12.
template <typename S>
std::vector<S> taph_project(std::span<const S> w, std::span<const S> h) {
  if (w.size() != h.size())
    throw std::invalid_argument("taph_project: dimension mismatch");
  const int d = static_cast<int>(w.size());
  S norm2 = dot(w.data(), w.data(), d);
  S norm = std::sqrt(norm2);
  if (!(norm >= S(1e-12))) throw std::invalid_argument("taph_project: degenerate direction");
  std::vector<S> out(h.begin(), h.end());
  S s = dot(w.data(), h.data(), d) / norm;
  for (int i = 0; i < d; ++i) out[i] -= s * w[i] / norm;
  return out;
}

// Adds this bin's offset to every token embedding in place.
template <typename S>
void dcwe_apply(const TemporalHead<S>& head, std::vector<std::vector<S>>& token_embeddings,
                std::int64_t ts) {
  const int b = bin_of(head.binning, ts);
  const S* off = head.offsets.row(b);
  for (auto& e : token_embeddings)
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += off[i];
}

// (lambda / T) * sum_j (|d_j|^2 + K |d_j - d_{j-1}|^2), with d before the
// first bin defined as zero.
template <typename S>
S dcwe_regularizer(const TemporalHead<S>& head) {
  const int T = head.offsets.rows, d = head.offsets.cols;
  if (T == 0) return S(0);
  S acc = 0;
  for (int j = 0; j < T; ++j) {
    const S* cur = head.offsets.row(j);
    const S* prev = j > 0 ? head.offsets.row(j - 1) : nullptr;
    for (int i = 0; i < d; ++i) {
      S diff = prev ? cur[i] - prev[i] : cur[i];
      acc += cur[i] * cur[i] + head.prior_k * diff * diff;
    }
  }
  return head.lambda_prior / static_cast<S>(T) * acc;
}

// Accumulates the regularizer gradient into g_offsets (same shape as
// head.offsets).
template <typename S>
void dcwe_regularizer_backward(const TemporalHead<S>& head, Mat<S>& g_offsets) {
  const int T = head.offsets.rows, d = head.offsets.cols;
  if (T == 0) return;
  const S scale = head.lambda_prior / static_cast<S>(T);
  for (int j = 0; j < T; ++j) {
    const S* cur = head.offsets.row(j);
    const S* prev = j > 0 ? head.offsets.row(j - 1) : nullptr;
    const S* next = j + 1 < T ? head.offsets.row(j + 1) : nullptr;
    S* g = g_offsets.row(j);
    for (int i = 0; i < d; ++i) {
      S diff = prev ? cur[i] - prev[i] : cur[i];
      S grad = S(2) * cur[i] + S(2) * head.prior_k * diff;
      if (next) grad -= S(2) * head.prior_k * (next[i] - cur[i]);
      g[i] += scale * grad;
    }
  }
}

// Gradient reversal: identity forward, -lambda scaling backward. In this
// codebase the backward half is applied inside the model's hand-written
// backprop; these helpers give the operation a name and a test surface.
template <typename S>
S grl_forward(S v) {
  return v;
}

template <typename S>
S grl_backward(S upstream, S lambda) {
  return -lambda * upstream;
}

// Builds the head for a model. `binning` is required for Dcwe, Lmsoc, and
// Tda; k_g is clamped to T-1. Seeded blocks draw from their own sub-streams
// so encoder initialization is unaffected by the head choice.
template <typename S>
TemporalHead<S> make_head(const HeadConfig& cfg, const TimeBinning* binning,
                          int embed_dim, std::uint64_t seed) {
  validate(cfg);
  TemporalHead<S> head;
  head.variant = cfg.variant;
  head.lambda_prior = static_cast<S>(cfg.lambda_prior);
  head.prior_k = static_cast<S>(cfg.prior_k);
  head.lambda_grl = static_cast<S>(cfg.lambda_grl);

  const bool needs_bins = cfg.variant == HeadVariant::Dcwe ||
                          cfg.variant == HeadVariant::Lmsoc ||
                          cfg.variant == HeadVariant::Tda;
  if (needs_bins) {
    if (binning == nullptr || binning->T() < 2)
      throw std::invalid_argument("make_head: variant requires a time binning");
    head.binning = *binning;
  }

  const int T = head.binning.T();
  switch (cfg.variant) {
    case HeadVariant::Dcwe:
      head.offsets = Mat<S>(T, embed_dim);
      break;
    case HeadVariant::Lmsoc: {
      int k = std::min(cfg.k_g, T - 1);
      Mat<double> M = lmsoc_time_embedding(T, k);
      head.time_embed = Mat<S>(T, k);
      for (std::size_t i = 0; i < M.a.size(); ++i)
        head.time_embed.a[i] = static_cast<S>(M.a[i]);
      break;
    }
    case HeadVariant::Taph: {
      Rng rng(sub_seed(seed, "taph-w"));
      head.w.resize(embed_dim);
      for (auto& v : head.w) v = static_cast<S>(rng.next_uniform(-0.05, 0.05));
      break;
    }
    case HeadVariant::Tda: {
      Rng rng(sub_seed(seed, "tda-head"));
      head.time_W = Mat<S>(embed_dim, T);
      for (auto& v : head.time_W.a) v = static_cast<S>(rng.next_uniform(-0.05, 0.05));
      head.time_b.assign(T, S(0));
      break;
    }
    default:
      break;
  }
  return head;
}

// Width the classifier MLP sees: the embedding, plus the time embedding for
// Lmsoc.
template <typename S>
int head_input_dim(const TemporalHead<S>& head, int embed_dim) {
  if (head.variant == HeadVariant::Lmsoc) return embed_dim + head.time_embed.cols;
  return embed_dim;
}

}  // namespace driftbench
