#include "driftbench/encoder.hpp"

namespace driftbench {

void validate(const EncoderConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("encoder: " + msg); };
  if (cfg.hash_buckets <= kNumSpecialBuckets)
    fail("hash_buckets must exceed the reserved bucket count");
  if (cfg.embed_dim <= 0 || cfg.hidden_dim <= 0) fail("dimensions must be positive");
  if (cfg.n_classes < 2) fail("n_classes must be at least 2");
  if (cfg.mlm_epochs < 0) fail("mlm_epochs must be non-negative");
  if (cfg.mask_prob < 0.0 || cfg.mask_prob > 1.0) fail("mask_prob must lie in [0, 1]");
}

namespace {

inline bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}

inline unsigned char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c - 'A' + 'a') : c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = lower(static_cast<unsigned char>(text[i]));
    if (word_byte(c)) {
      cur.push_back(static_cast<char>(c));
      continue;
    }
    if ((c == '#' || c == '@') && cur.empty() && i + 1 < text.size() &&
        word_byte(lower(static_cast<unsigned char>(text[i + 1])))) {
      cur.push_back(static_cast<char>(c));
      continue;
    }
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

inline constexpr std::string_view kMaskToken = "\x1f";

int bucket_of(std::string_view token, const EncoderConfig& cfg) {
  if (token == kSepToken) return kSepBucket;
  if (token == kMaskToken) return kMaskBucket;
  const std::uint64_t content = static_cast<std::uint64_t>(cfg.hash_buckets) -
                                kNumSpecialBuckets;
  return kNumSpecialBuckets + static_cast<int>(fnv1a64(token) % content);
}

}  // namespace

std::vector<int> hash_unigrams(std::span<const std::string> tokens,
                               const EncoderConfig& cfg) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(bucket_of(t, cfg));
  return out;
}

std::vector<int> hash_features(std::span<const std::string> tokens,
                               const EncoderConfig& cfg) {
  std::vector<int> out = hash_unigrams(tokens, cfg);
  if (!cfg.use_bigrams) return out;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i] == kSepToken || tokens[i + 1] == kSepToken) continue;
    out.push_back(bucket_of(tokens[i] + " " + tokens[i + 1], cfg));
  }
  return out;
}

}  // namespace driftbench
