#include "driftbench/temporal.hpp"

#include <cstdio>

namespace driftbench {

const char* variant_name(HeadVariant v) {
  switch (v) {
    case HeadVariant::None: return "NONE";
    case HeadVariant::TM: return "TM";
    case HeadVariant::Sep: return "SEP";
    case HeadVariant::Dcwe: return "DCWE";
    case HeadVariant::Lmsoc: return "LMSOC";
    case HeadVariant::Taph: return "TAPH";
    case HeadVariant::Tda: return "TDA";
  }
  return "?";
}

HeadVariant variant_from(const std::string& s) {
  if (s == "NONE") return HeadVariant::None;
  if (s == "TM") return HeadVariant::TM;
  if (s == "SEP") return HeadVariant::Sep;
  if (s == "DCWE") return HeadVariant::Dcwe;
  if (s == "LMSOC") return HeadVariant::Lmsoc;
  if (s == "TAPH") return HeadVariant::Taph;
  if (s == "TDA") return HeadVariant::Tda;
  throw std::invalid_argument("unknown temporal variant \"" + s + "\"");
}

void validate(const HeadConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("temporal: " + msg); };
  if (cfg.lambda_prior < 0.0) fail("lambda_prior must be non-negative");
  if (cfg.prior_k < 0.0) fail("prior_k must be non-negative");
  if (cfg.k_g < 1) fail("k_g must be at least 1");
  if (cfg.lambda_grl <= 0.0) fail("lambda_grl must be positive");
  if (cfg.n_bins < 2) fail("n_bins must be at least 2");
}

// Days-to-civil conversion (Howard Hinnant's algorithm), so date tokens do
// not depend on the host time zone database.
std::array<std::string, 3> date_tokens(std::int64_t ts) {
  std::int64_t days = ts / 86400;
  if (ts % 86400 < 0) --days;
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t year = y + (m <= 2);

  char buf[16];
  std::array<std::string, 3> out;
  std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(year));
  out[0] = buf;
  std::snprintf(buf, sizeof buf, "%02u", m);
  out[1] = buf;
  std::snprintf(buf, sizeof buf, "%02u", d);
  out[2] = buf;
  return out;
}

std::vector<std::string> prepend_time_tokens(const std::vector<std::string>& tokens,
                                             std::int64_t ts) {
  auto date = date_tokens(ts);
  std::vector<std::string> out(date.begin(), date.end());
  out.insert(out.end(), tokens.begin(), tokens.end());
  return out;
}

std::vector<std::string> append_time_segment(const std::vector<std::string>& tokens,
                                             std::int64_t ts) {
  std::vector<std::string> out = tokens;
  out.emplace_back(kSepToken);
  auto date = date_tokens(ts);
  out.insert(out.end(), date.begin(), date.end());
  return out;
}

Mat<double> lmsoc_time_embedding(int T, int k_g) {
  if (T < 2) throw std::invalid_argument("lmsoc_time_embedding: need at least 2 bins");
  if (k_g < 1 || k_g >= T)
    throw std::invalid_argument("lmsoc_time_embedding: k_g must lie in [1, T)");
  Mat<double> M(T, k_g);
  const double pi = std::acos(-1.0);
  const double scale = std::sqrt(2.0 / T);
  for (int t = 0; t < T; ++t)
    for (int k = 1; k <= k_g; ++k)
      M.at(t, k - 1) = scale * std::cos(pi * k * (t + 0.5) / T);
  return M;
}

}  // namespace driftbench
