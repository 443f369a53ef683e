#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "driftbench/corpus.hpp"
#include "driftbench/encoder.hpp"
#include "driftbench/temporal.hpp"

namespace driftbench {

// Bucket ids after the variant's token rewrite, ready for the embedding bag.
struct FeaturizedExample {
  std::vector<int> buckets;
  std::int64_t timestamp = 0;
  int label = 0;
};

inline FeaturizedExample featurize(const TimedExample& ex, const EncoderConfig& cfg,
                                   HeadVariant variant) {
  std::vector<std::string> tokens = tokenize(ex.text);
  if (variant == HeadVariant::TM)
    tokens = prepend_time_tokens(tokens, ex.timestamp);
  else if (variant == HeadVariant::Sep)
    tokens = append_time_segment(tokens, ex.timestamp);
  FeaturizedExample f;
  f.buckets = hash_features(tokens, cfg);
  f.timestamp = ex.timestamp;
  f.label = ex.label;
  if (f.buckets.empty())
    throw std::invalid_argument("featurize: example \"" + ex.id + "\" has no tokens");
  return f;
}

template <typename S>
struct Model {
  EncoderConfig cfg;
  EncoderParams<S> enc;
  TemporalHead<S> head;
};

// Same-shaped gradient accumulators. head.time_embed stays empty: the Lmsoc
// matrix is frozen and receives no gradient.
template <typename S>
struct Grads {
  EncoderParams<S> enc;
  TemporalHead<S> head;

  void zero() {
    enc.E.zero();
    enc.W1.zero();
    std::fill(enc.b1.begin(), enc.b1.end(), S(0));
    enc.W2.zero();
    std::fill(enc.b2.begin(), enc.b2.end(), S(0));
    head.offsets.zero();
    std::fill(head.w.begin(), head.w.end(), S(0));
    head.time_W.zero();
    std::fill(head.time_b.begin(), head.time_b.end(), S(0));
  }
};

template <typename S>
Grads<S> make_grads(const Model<S>& m) {
  Grads<S> g;
  g.enc.E = Mat<S>(m.enc.E.rows, m.enc.E.cols);
  g.enc.W1 = Mat<S>(m.enc.W1.rows, m.enc.W1.cols);
  g.enc.b1.assign(m.enc.b1.size(), S(0));
  g.enc.W2 = Mat<S>(m.enc.W2.rows, m.enc.W2.cols);
  g.enc.b2.assign(m.enc.b2.size(), S(0));
  g.head.variant = m.head.variant;
  g.head.offsets = Mat<S>(m.head.offsets.rows, m.head.offsets.cols);
  g.head.w.assign(m.head.w.size(), S(0));
  g.head.time_W = Mat<S>(m.head.time_W.rows, m.head.time_W.cols);
  g.head.time_b.assign(m.head.time_b.size(), S(0));
  return g;
}

template <typename S>
Model<S> make_model(const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
                    const TimeBinning* binning, std::uint64_t seed) {
  validate(enc_cfg);
  Model<S> m;
  m.cfg = enc_cfg;
  m.head = make_head<S>(head_cfg, binning, enc_cfg.embed_dim, seed);
  int input_dim = head_input_dim(m.head, enc_cfg.embed_dim);
  m.enc = init_encoder_params<S>(enc_cfg, input_dim, sub_seed(seed, "enc-init"));
  return m;
}

// The vector the classifier consumes: pooled embedding adjusted by the
// active head (offset added, hyperplane projection, or time concatenation).
template <typename S>
std::vector<S> time_aware_embedding(const Model<S>& m, const FeaturizedExample& ex) {
  std::vector<S> h = encode(m.enc, std::span<const int>(ex.buckets));
  switch (m.head.variant) {
    case HeadVariant::Dcwe: {
      const S* off = m.head.offsets.row(bin_of(m.head.binning, ex.timestamp));
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += off[i];
      return h;
    }
    case HeadVariant::Taph:
      return taph_project(std::span<const S>(m.head.w), std::span<const S>(h));
    case HeadVariant::Lmsoc: {
      const S* row = m.head.time_embed.row(bin_of(m.head.binning, ex.timestamp));
      h.insert(h.end(), row, row + m.head.time_embed.cols);
      return h;
    }
    default:
      return h;
  }
}

template <typename S>
std::vector<S> class_log_probs(const Model<S>& m, const FeaturizedExample& ex) {
  std::vector<S> x = time_aware_embedding(m, ex);
  return classify(m.enc, std::span<const S>(x));
}

// Argmax with ties resolved toward the lowest class id.
template <typename S>
int predict_one(const Model<S>& m, const FeaturizedExample& ex) {
  std::vector<S> lp = class_log_probs(m, ex);
  int best = 0;
  for (int c = 1; c < static_cast<int>(lp.size()); ++c)
    if (lp[c] > lp[best]) best = c;
  return best;
}

struct LossParts {
  double task = 0;      // mean task cross-entropy over the batch
  double temporal = 0;  // Dcwe offset prior (once per batch)
  double time_adv = 0;  // mean time-bin cross-entropy (Tda only)

  double total() const { return task + temporal + time_adv; }
};

// One batch of forward passes; when g is non-null, accumulates d(total
// loss)/d(params) into it (g must be zeroed by the caller). Backward is
// hand-written; its one subtlety is the Tda path, where the time head
// receives the plain gradient of its own loss while the encoder receives
// that gradient scaled by -lambda (the reversal).
template <typename S>
LossParts forward_backward(const Model<S>& m, std::span<const FeaturizedExample> batch,
                           std::type_identity_t<Grads<S>>* g = nullptr) {
  if (batch.empty()) throw std::invalid_argument("forward_backward: empty batch");
  const int d = m.cfg.embed_dim;
  const int hidden = m.cfg.hidden_dim;
  const int classes = m.cfg.n_classes;
  const int xdim = m.enc.W1.rows;
  const S invB = S(1) / static_cast<S>(batch.size());

  LossParts parts;
  std::vector<S> h(d), x(xdim), z1(hidden), a1(hidden), z2(classes);
  std::vector<S> dz2(classes), dz1(hidden), dx(xdim), dh(d);

  for (const auto& ex : batch) {
    const int n_tok = static_cast<int>(ex.buckets.size());
    if (n_tok == 0) throw std::invalid_argument("forward_backward: example with no buckets");
    if (ex.label < 0 || ex.label >= classes)
      throw std::invalid_argument("forward_backward: label out of range");

    // Pooled embedding.
    std::fill(h.begin(), h.end(), S(0));
    for (int b : ex.buckets) axpy(S(1), m.enc.E.row(b), h.data(), d);
    const S inv_tok = S(1) / static_cast<S>(n_tok);
    for (auto& v : h) v *= inv_tok;

    // Head adjustment. Taph caches the unit direction and the projection
    // coefficient for its backward pass.
    int bin = -1;
    S wnorm = 0, proj = 0;
    std::vector<S> what;
    switch (m.head.variant) {
      case HeadVariant::Dcwe: {
        bin = bin_of(m.head.binning, ex.timestamp);
        const S* off = m.head.offsets.row(bin);
        for (int i = 0; i < d; ++i) x[i] = h[i] + off[i];
        break;
      }
      case HeadVariant::Taph: {
        wnorm = std::sqrt(dot(m.head.w.data(), m.head.w.data(), d));
        if (!(wnorm >= S(1e-12)))
          throw std::invalid_argument("forward_backward: degenerate hyperplane direction");
        what.resize(d);
        for (int i = 0; i < d; ++i) what[i] = m.head.w[i] / wnorm;
        proj = dot(what.data(), h.data(), d);
        for (int i = 0; i < d; ++i) x[i] = h[i] - proj * what[i];
        break;
      }
      case HeadVariant::Lmsoc: {
        bin = bin_of(m.head.binning, ex.timestamp);
        const S* row = m.head.time_embed.row(bin);
        for (int i = 0; i < d; ++i) x[i] = h[i];
        for (int i = 0; i < m.head.time_embed.cols; ++i) x[d + i] = row[i];
        break;
      }
      case HeadVariant::Tda:
        bin = bin_of(m.head.binning, ex.timestamp);
        [[fallthrough]];
      default:
        for (int i = 0; i < d; ++i) x[i] = h[i];
        break;
    }

    // MLP forward.
    for (int i = 0; i < hidden; ++i) z1[i] = m.enc.b1[i];
    for (int i = 0; i < xdim; ++i) axpy(x[i], m.enc.W1.row(i), z1.data(), hidden);
    for (int i = 0; i < hidden; ++i) a1[i] = z1[i] > S(0) ? z1[i] : S(0);
    for (int c = 0; c < classes; ++c) z2[c] = m.enc.b2[c];
    for (int i = 0; i < hidden; ++i) axpy(a1[i], m.enc.W2.row(i), z2.data(), classes);
    std::vector<S> logp = log_softmax(z2);
    parts.task += -static_cast<double>(logp[ex.label]);

    if (g) {
      // dz2 carries the 1/B batch-mean factor so every downstream gradient
      // inherits it.
      for (int c = 0; c < classes; ++c)
        dz2[c] = (std::exp(logp[c]) - (c == ex.label ? S(1) : S(0))) * invB;
      for (int i = 0; i < hidden; ++i) {
        axpy(a1[i], dz2.data(), g->enc.W2.row(i), classes);
        dz1[i] = dot(m.enc.W2.row(i), dz2.data(), classes);
        if (z1[i] <= S(0)) dz1[i] = S(0);
      }
      for (int c = 0; c < classes; ++c) g->enc.b2[c] += dz2[c];
      for (int i = 0; i < xdim; ++i) {
        axpy(x[i], dz1.data(), g->enc.W1.row(i), hidden);
        dx[i] = dot(m.enc.W1.row(i), dz1.data(), hidden);
      }
      for (int i = 0; i < hidden; ++i) g->enc.b1[i] += dz1[i];

      // Head backward: map dx to dh and collect head gradients.
      switch (m.head.variant) {
        case HeadVariant::Dcwe: {
          S* goff = g->head.offsets.row(bin);
          for (int i = 0; i < d; ++i) {
            dh[i] = dx[i];
            goff[i] += dx[i];
          }
          break;
        }
        case HeadVariant::Taph: {
          // x = h - (what.h) what. For h: dh = dx - what (what.dx).
          // For w: dL/dwhat = -(dx.what) h - proj dx, pushed through the
          // normalization jacobian (I - what what^T) / |w|.
          S wd = dot(what.data(), dx.data(), d);
          for (int i = 0; i < d; ++i) dh[i] = dx[i] - wd * what[i];
          std::vector<S> dwhat(d);
          for (int i = 0; i < d; ++i) dwhat[i] = -wd * h[i] - proj * dx[i];
          S align = dot(what.data(), dwhat.data(), d);
          for (int i = 0; i < d; ++i)
            g->head.w[i] += (dwhat[i] - align * what[i]) / wnorm;
          break;
        }
        case HeadVariant::Lmsoc:
          for (int i = 0; i < d; ++i) dh[i] = dx[i];
          break;
        default:
          for (int i = 0; i < d; ++i) dh[i] = dx[i];
          break;
      }
    }

    // Adversarial time head. Runs on the pooled embedding h regardless of
    // the classifier input.
    if (m.head.variant == HeadVariant::Tda) {
      const int T = m.head.time_W.cols;
      std::vector<S> u(m.head.time_b.begin(), m.head.time_b.end());
      for (int i = 0; i < d; ++i) axpy(h[i], m.head.time_W.row(i), u.data(), T);
      std::vector<S> logq = log_softmax(u);
      parts.time_adv += -static_cast<double>(logq[bin]);
      if (g) {
        std::vector<S> du(T);
        for (int t = 0; t < T; ++t)
          du[t] = (std::exp(logq[t]) - (t == bin ? S(1) : S(0))) * invB;
        for (int i = 0; i < d; ++i) {
          axpy(h[i], du.data(), g->head.time_W.row(i), T);
          // Reversal: the encoder ascends the time loss.
          S back = dot(m.head.time_W.row(i), du.data(), T);
          dh[i] += grl_backward(back, m.head.lambda_grl);
        }
        for (int t = 0; t < T; ++t) g->head.time_b[t] += du[t];
      }
    }

    if (g) {
      for (int b : ex.buckets) axpy(inv_tok, dh.data(), g->enc.E.row(b), d);
    }
  }

  parts.task /= static_cast<double>(batch.size());
  parts.time_adv /= static_cast<double>(batch.size());

  if (m.head.variant == HeadVariant::Dcwe) {
    parts.temporal = static_cast<double>(dcwe_regularizer(m.head));
    if (g) dcwe_regularizer_backward(m.head, g->head.offsets);
  }
  return parts;
}

}  // namespace driftbench
