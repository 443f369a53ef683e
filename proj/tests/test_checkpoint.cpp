#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <vector>

#include "driftbench/checkpoint.hpp"
#include "driftbench/corpus.hpp"
#include "driftbench/io.hpp"
#include "driftbench/train.hpp"

using namespace driftbench;

namespace {

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "driftbench_ckpt_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

Corpus tiny_corpus() {
  DriftGenConfig g;
  g.n_examples = 80;
  g.t_start = 0;
  g.t_end = 1'000'000;
  g.n_classes = 2;
  g.stable_vocab = 8;
  g.tokens_per_text = 6;
  g.drift_time = 500'000;
  g.neologism_time = 500'000;
  g.acute_start = 300'000;
  g.acute_end = 700'000;
  g.seed = 7;
  return generate_drift_corpus(g);
}

Model<float> trained(HeadVariant variant, std::uint64_t seed) {
  Corpus corpus = tiny_corpus();
  std::vector<TimedExample> train(corpus.examples.begin(),
                                  corpus.examples.begin() + 60);
  std::vector<TimedExample> dev(corpus.examples.begin() + 60,
                                corpus.examples.end());
  EncoderConfig enc;
  enc.hash_buckets = 256;
  enc.embed_dim = 8;
  enc.hidden_dim = 12;
  HeadConfig head;
  head.variant = variant;
  head.n_bins = 4;
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.batch_size = 16;
  tc.epochs = 1;
  return train_on_examples(train, dev, enc, head, tc, 2, seed).model;
}

}  // namespace

TEST_CASE("checkpoints round-trip bit-exactly for every head") {
  for (auto variant : {HeadVariant::None, HeadVariant::TM, HeadVariant::Sep,
                       HeadVariant::Dcwe, HeadVariant::Lmsoc, HeadVariant::Taph,
                       HeadVariant::Tda}) {
    CAPTURE(variant_name(variant));
    auto model = trained(variant, 15);
    auto path = work_dir() / (std::string("model_") + variant_name(variant) + ".bin");
    save_model(model, path);
    auto back = load_model(path);

    CHECK(back.cfg.hash_buckets == model.cfg.hash_buckets);
    CHECK(back.cfg.embed_dim == model.cfg.embed_dim);
    CHECK(back.cfg.hidden_dim == model.cfg.hidden_dim);
    CHECK(back.cfg.n_classes == model.cfg.n_classes);
    CHECK(back.cfg.use_bigrams == model.cfg.use_bigrams);
    CHECK(back.head.variant == model.head.variant);
    CHECK(back.head.binning.mode == model.head.binning.mode);
    CHECK(back.head.binning.boundaries == model.head.binning.boundaries);
    CHECK(back.head.lambda_prior == model.head.lambda_prior);
    CHECK(back.head.prior_k == model.head.prior_k);
    CHECK(back.head.lambda_grl == model.head.lambda_grl);

    CHECK(back.enc.E.a == model.enc.E.a);
    CHECK(back.enc.W1.a == model.enc.W1.a);
    CHECK(back.enc.b1 == model.enc.b1);
    CHECK(back.enc.W2.a == model.enc.W2.a);
    CHECK(back.enc.b2 == model.enc.b2);
    CHECK(back.head.offsets.a == model.head.offsets.a);
    CHECK(back.head.time_embed.a == model.head.time_embed.a);
    CHECK(back.head.w == model.head.w);
    CHECK(back.head.time_W.a == model.head.time_W.a);
    CHECK(back.head.time_b == model.head.time_b);

    // The loaded model must behave identically.
    Corpus corpus = tiny_corpus();
    CHECK(predict(back, corpus.examples) == predict(model, corpus.examples));
  }
}

TEST_CASE("saving twice produces identical bytes") {
  auto model = trained(HeadVariant::Tda, 3);
  auto p1 = work_dir() / "twice_a.bin";
  auto p2 = work_dir() / "twice_b.bin";
  save_model(model, p1);
  save_model(model, p2);
  CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("corrupted checkpoints are rejected") {
  auto model = trained(HeadVariant::None, 5);
  auto path = work_dir() / "corrupt.bin";
  save_model(model, path);
  std::string bytes = read_file(path);

  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    auto p = work_dir() / "bad_magic.bin";
    write_file_atomic(p, bad);
    CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("magic"),
                         std::runtime_error);
  }
  SUBCASE("truncated tensor data") {
    std::string bad = bytes.substr(0, bytes.size() - 17);
    auto p = work_dir() / "truncated.bin";
    write_file_atomic(p, bad);
    CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("truncated"),
                         std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(work_dir() / "nope.bin"), std::runtime_error);
  }
}
