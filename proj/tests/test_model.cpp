#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "driftbench/gradcheck.hpp"
#include "driftbench/model.hpp"
#include "driftbench/rng.hpp"

using namespace driftbench;

namespace {

EncoderConfig tiny_encoder() {
  EncoderConfig cfg;
  cfg.hash_buckets = 16;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 5;
  cfg.n_classes = 3;
  return cfg;
}

TimeBinning three_bins() {
  TimeBinning b;
  b.mode = TimeBinning::Mode::EqualCount;
  b.boundaries = {0, 100, 200};
  return b;
}

// A small batch with varied labels and timestamps touching every bin.
std::vector<TimedExample> raw_batch() {
  return {
      {"a", "flood water rising", 10, 0, {}},
      {"b", "stay safe nyc", 120, 1, {}},
      {"c", "power out downtown", 250, 2, {}},
      {"d", "flood warning issued", 170, 1, {}},
      {"e", "all clear now", 290, 0, {}},
      {"f", "shelter open tonight", 30, 2, {}},
  };
}

std::vector<FeaturizedExample> featurized_batch(const EncoderConfig& cfg,
                                                HeadVariant variant) {
  std::vector<FeaturizedExample> out;
  for (const auto& ex : raw_batch()) out.push_back(featurize(ex, cfg, variant));
  return out;
}

// Randomizes every trainable tensor so the check never runs at a symmetric
// point where errors could cancel.
void scramble(Model<double>& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto ref : trainable_params(m.enc, m.head))
    for (std::size_t i = 0; i < ref.n; ++i)
      ref.data[i] = rng.next_uniform(-0.3, 0.3);
}

Model<double> build(HeadVariant variant, std::uint64_t seed = 7) {
  EncoderConfig enc = tiny_encoder();
  HeadConfig head;
  head.variant = variant;
  auto binning = three_bins();
  const bool needs_bins = variant == HeadVariant::Dcwe ||
                          variant == HeadVariant::Lmsoc ||
                          variant == HeadVariant::Tda;
  auto m = make_model<double>(enc, head, needs_bins ? &binning : nullptr, seed);
  scramble(m, seed + 1);
  return m;
}

}  // namespace

TEST_CASE("featurize applies the variant's token rewrite") {
  EncoderConfig cfg = tiny_encoder();
  TimedExample ex{"x", "flood", 1358380800, 1, {}};

  auto plain = featurize(ex, cfg, HeadVariant::None);
  auto tm = featurize(ex, cfg, HeadVariant::TM);
  auto sep = featurize(ex, cfg, HeadVariant::Sep);

  CHECK(plain.buckets.size() == 1);
  // Date prefix: 3 date tokens + "flood" = 4 unigrams + 3 bigrams.
  CHECK(tm.buckets.size() == 7);
  // Separator blocks bigrams across it: 5 unigrams + 2 date bigrams.
  CHECK(sep.buckets.size() == 7);
  CHECK(std::count(sep.buckets.begin(), sep.buckets.end(), kSepBucket) == 1);
  CHECK(std::count(tm.buckets.begin(), tm.buckets.end(), kSepBucket) == 0);
  CHECK(plain.label == 1);
  CHECK(plain.timestamp == 1358380800);

  TimedExample blank{"y", "!!!", 5, 0, {}};
  CHECK_THROWS_WITH_AS(featurize(blank, cfg, HeadVariant::None),
                       doctest::Contains("no tokens"), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences for every head") {
  for (auto variant : {HeadVariant::None, HeadVariant::TM, HeadVariant::Sep,
                       HeadVariant::Dcwe, HeadVariant::Lmsoc, HeadVariant::Taph,
                       HeadVariant::Tda}) {
    CAPTURE(variant_name(variant));
    auto m = build(variant);
    auto batch = featurized_batch(m.cfg, variant);
    auto report = grad_check(m, batch);
    CAPTURE(report.worst);
    CHECK(report.max_rel_err < 1e-5);
  }
}

TEST_CASE("dcwe regularizer gradient survives a nonzero prior point") {
  auto m = build(HeadVariant::Dcwe, 21);
  // Make the prior term dominate so its gradient path is what is verified.
  m.head.lambda_prior = 0.5;
  m.head.prior_k = 1000.0;
  auto batch = featurized_batch(m.cfg, HeadVariant::Dcwe);
  auto report = grad_check(m, batch);
  CAPTURE(report.worst);
  CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("reversal scales the encoder gradient of the time loss") {
  // d(total)/d(enc) must equal d(task)/d(enc) - lambda * d(time)/d(enc);
  // sweep lambda including the degenerate zero.
  auto batch_model = build(HeadVariant::Tda, 13);
  auto batch = featurized_batch(batch_model.cfg, HeadVariant::Tda);

  for (double lambda : {0.0, 0.5, 1.0}) {
    CAPTURE(lambda);
    auto m = batch_model;  // fresh copy, identical parameters
    m.head.lambda_grl = lambda;

    auto grads = make_grads(m);
    grads.zero();
    forward_backward(m, batch, &grads);

    const double eps = 1e-5;
    auto params = trainable_params(m.enc, m.head);
    auto grefs = trainable_params(grads.enc, grads.head);
    Rng pick(31);
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].name == "time_W" || params[k].name == "time_b") continue;
      // A handful of entries per tensor keeps the sweep fast.
      for (int probe = 0; probe < 8; ++probe) {
        std::size_t i = pick.next_below(params[k].n);
        double saved = params[k].data[i];
        params[k].data[i] = saved + eps;
        auto up = forward_backward(m, batch, nullptr);
        params[k].data[i] = saved - eps;
        auto down = forward_backward(m, batch, nullptr);
        params[k].data[i] = saved;
        double fd_task = (up.task - down.task) / (2 * eps);
        double fd_time = (up.time_adv - down.time_adv) / (2 * eps);
        double composed = fd_task - lambda * fd_time;
        double analytic = grefs[k].data[i];
        double denom = std::max({std::fabs(analytic), std::fabs(composed), 1e-6});
        CHECK(std::fabs(analytic - composed) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("with zero reversal the encoder trains as a plain classifier") {
  auto tda = build(HeadVariant::Tda, 17);
  tda.head.lambda_grl = 0.0;
  auto batch = featurized_batch(tda.cfg, HeadVariant::Tda);

  auto plain = tda;
  plain.head = TemporalHead<double>{};  // drop the time head entirely
  plain.head.variant = HeadVariant::None;

  auto g_tda = make_grads(tda);
  g_tda.zero();
  forward_backward(tda, batch, &g_tda);
  auto g_plain = make_grads(plain);
  g_plain.zero();
  forward_backward(plain, batch, &g_plain);

  CHECK(g_tda.enc.E.a == g_plain.enc.E.a);
  CHECK(g_tda.enc.W1.a == g_plain.enc.W1.a);
  CHECK(g_tda.enc.b1 == g_plain.enc.b1);
  CHECK(g_tda.enc.W2.a == g_plain.enc.W2.a);
  CHECK(g_tda.enc.b2 == g_plain.enc.b2);

  // The time head itself still receives gradient.
  double head_norm = 0.0;
  for (double v : g_tda.head.time_W.a) head_norm += v * v;
  CHECK(head_norm > 0.0);
}

TEST_CASE("a silent time head pays exactly the uniform cross-entropy") {
  auto m = build(HeadVariant::Tda, 23);
  m.head.time_W.zero();
  std::fill(m.head.time_b.begin(), m.head.time_b.end(), 0.0);
  auto batch = featurized_batch(m.cfg, HeadVariant::Tda);
  auto parts = forward_backward(m, batch, nullptr);
  const int T = m.head.binning.T();
  CHECK(parts.time_adv == doctest::Approx(std::log(double(T))).epsilon(1e-12));
}

TEST_CASE("time_aware_embedding returns what the classifier consumes") {
  EncoderConfig cfg = tiny_encoder();
  TimedExample raw{"x", "flood water", 150, 0, {}};

  SUBCASE("plain head passes the pooled embedding through") {
    auto m = build(HeadVariant::None);
    auto ex = featurize(raw, m.cfg, HeadVariant::None);
    auto emb = time_aware_embedding(m, ex);
    auto pooled = encode(m.enc, std::span<const int>(ex.buckets));
    CHECK(emb == pooled);
  }
  SUBCASE("zero offsets reduce to the plain embedding") {
    auto m = build(HeadVariant::Dcwe);
    m.head.offsets.zero();
    auto ex = featurize(raw, m.cfg, HeadVariant::Dcwe);
    auto emb = time_aware_embedding(m, ex);
    auto pooled = encode(m.enc, std::span<const int>(ex.buckets));
    CHECK(emb == pooled);
  }
  SUBCASE("projection output is orthogonal to the direction") {
    auto m = build(HeadVariant::Taph);
    auto ex = featurize(raw, m.cfg, HeadVariant::Taph);
    auto emb = time_aware_embedding(m, ex);
    double wn = std::sqrt(dot(m.head.w.data(), m.head.w.data(), 4));
    double along = 0.0;
    for (int i = 0; i < 4; ++i) along += m.head.w[i] / wn * emb[i];
    CHECK(std::abs(along) < 1e-9);
  }
  SUBCASE("time concatenation widens the embedding") {
    auto m = build(HeadVariant::Lmsoc);
    auto ex = featurize(raw, m.cfg, HeadVariant::Lmsoc);
    auto emb = time_aware_embedding(m, ex);
    CHECK(emb.size() == 4 + m.head.time_embed.cols);
    // The tail is the frozen row for this timestamp's bin.
    int bin = bin_of(m.head.binning, ex.timestamp);
    for (int i = 0; i < m.head.time_embed.cols; ++i)
      CHECK(emb[4 + i] == m.head.time_embed.at(bin, i));
  }
}

TEST_CASE("prediction ties resolve to the lowest class id") {
  EncoderConfig cfg = tiny_encoder();
  HeadConfig head;
  auto m = make_model<double>(cfg, head, nullptr, 3);
  // Zero everything: all classes get identical log-probabilities.
  m.enc.E.zero();
  m.enc.W1.zero();
  m.enc.W2.zero();
  std::fill(m.enc.b1.begin(), m.enc.b1.end(), 0.0);
  std::fill(m.enc.b2.begin(), m.enc.b2.end(), 0.0);
  auto ex = featurize(raw_batch()[0], cfg, HeadVariant::None);
  CHECK(predict_one(m, ex) == 0);
}

TEST_CASE("batch loss is the mean of single-example losses") {
  auto m = build(HeadVariant::Tda, 37);
  auto batch = featurized_batch(m.cfg, HeadVariant::Tda);
  auto whole = forward_backward(m, batch, nullptr);
  double task = 0.0, time_adv = 0.0;
  for (const auto& ex : batch) {
    auto one = forward_backward(m, std::span<const FeaturizedExample>(&ex, 1),
                                nullptr);
    task += one.task;
    time_adv += one.time_adv;
  }
  CHECK(whole.task == doctest::Approx(task / batch.size()).epsilon(1e-12));
  CHECK(whole.time_adv ==
        doctest::Approx(time_adv / batch.size()).epsilon(1e-12));
}

TEST_CASE("forward_backward rejects malformed batches") {
  auto m = build(HeadVariant::None);
  std::vector<FeaturizedExample> empty;
  CHECK_THROWS_AS(forward_backward(m, empty, nullptr), std::invalid_argument);

  auto batch = featurized_batch(m.cfg, HeadVariant::None);
  batch[0].label = 99;
  CHECK_THROWS_AS(forward_backward(m, batch, nullptr), std::invalid_argument);
}
