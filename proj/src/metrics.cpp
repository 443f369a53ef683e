#include "driftbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "driftbench/rng.hpp"

namespace driftbench {

namespace {

void check_paired(std::span<const int> a, std::span<const int> b, const char* who) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
}

}  // namespace

double f1_binary(std::span<const int> preds, std::span<const int> golds) {
  check_paired(preds, golds, "f1_binary");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && golds[i] == 1) ++tp;
    if (preds[i] == 1 && golds[i] != 1) ++fp;
    if (preds[i] != 1 && golds[i] == 1) ++fn;
  }
  if (2 * tp + fp + fn == 0) return 0.0;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double f1_macro(std::span<const int> preds, std::span<const int> golds, int n_classes) {
  check_paired(preds, golds, "f1_macro");
  if (n_classes < 2) throw std::invalid_argument("f1_macro: n_classes must be at least 2");
  double sum = 0;
  for (int c = 0; c < n_classes; ++c) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && golds[i] == c) ++tp;
      if (preds[i] == c && golds[i] != c) ++fp;
      if (preds[i] != c && golds[i] == c) ++fn;
    }
    if (2 * tp + fp + fn > 0) sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return sum / n_classes;
}

double task_f1(std::span<const int> preds, std::span<const int> golds, int n_classes) {
  return n_classes == 2 ? f1_binary(preds, golds) : f1_macro(preds, golds, n_classes);
}

double tr_score(const ScoreMatrix& matrix) {
  if (matrix.T < 2) throw std::invalid_argument("tr_score: need at least 2 bins");
  double acc = 0;
  for (int i = 0; i < matrix.T; ++i)
    for (int j = 0; j < matrix.T; ++j) {
      if (i == j) continue;
      acc += std::fabs(matrix.at(i, j) - matrix.at(i, i)) / std::abs(i - j);
    }
  return acc / (static_cast<double>(matrix.T) * (matrix.T - 1));
}

ScoreMatrix build_score_matrix(const Corpus& corpus, const TimeBinning& binning,
                               const ModelFactory& factory, std::uint64_t seed) {
  const int T = binning.T();
  if (T < 2) throw std::invalid_argument("build_score_matrix: need at least 2 bins");

  std::vector<std::vector<TimedExample>> bins(T);
  for (const auto& ex : corpus.examples) bins[bin_of(binning, ex.timestamp)].push_back(ex);
  for (int i = 0; i < T; ++i) {
    if (bins[i].empty())
      throw std::invalid_argument("build_score_matrix: bin " + std::to_string(i) +
                                  " is empty");
    std::sort(bins[i].begin(), bins[i].end(),
              [](const TimedExample& a, const TimedExample& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.id < b.id;
              });
  }

  auto golds_of = [](const std::vector<TimedExample>& xs) {
    std::vector<int> g;
    g.reserve(xs.size());
    for (const auto& ex : xs) g.push_back(ex.label);
    return g;
  };

  ScoreMatrix matrix(T);
  for (int i = 0; i < T; ++i) {
    // Held-out carve inside the bin; the diagonal is scored on it so no
    // model is evaluated on its own training examples.
    Rng carve(sub_seed(seed, "tr-dev-" + std::to_string(i)));
    std::size_t n = bins[i].size();
    std::size_t k = std::max<std::size_t>(1, n / 10);
    if (k >= n)
      throw std::invalid_argument("build_score_matrix: bin " + std::to_string(i) +
                                  " too small to carve a dev set");
    auto picks = carve.sample_indices(n, k);
    std::vector<TimedExample> train, dev;
    std::size_t next = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (next < picks.size() && picks[next] == r) {
        dev.push_back(bins[i][r]);
        ++next;
      } else {
        train.push_back(bins[i][r]);
      }
    }
    Predictor model = factory(train, dev, seed);
    for (int j = 0; j < T; ++j) {
      const std::vector<TimedExample>& eval = (j == i) ? dev : bins[j];
      auto preds = model(eval);
      auto golds = golds_of(eval);
      matrix.at(i, j) = task_f1(preds, golds, corpus.n_classes);
    }
  }
  return matrix;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k,
                        std::uint64_t seed, KmeansTrace* trace) {
  const std::size_t n = points.size();
  if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (n < static_cast<std::size_t>(k))
    throw std::invalid_argument("kmeans: fewer points than clusters");
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("kmeans: ragged points");

  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  std::vector<char> chosen(n, 0);

  // Distance-squared-weighted seeding: first centroid uniform, each later
  // one sampled proportionally to the squared distance from the nearest
  // already-chosen centroid.
  std::size_t first = static_cast<std::size_t>(rng.next_below(n));
  centroids.push_back(points[first]);
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = sq_dist(points[i], centroids[0]);
      for (std::size_t j = 1; j < centroids.size(); ++j)
        best = std::min(best, sq_dist(points[i], centroids[j]));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = n;
    if (total > 0) {
      double r = rng.next_real() * total;
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = n - 1;  // guard against accumulated rounding
    } else {
      // Every remaining point duplicates a centroid; take the lowest fresh
      // index to stay deterministic.
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
      if (pick == n) pick = 0;
    }
    centroids.push_back(points[pick]);
    chosen[pick] = 1;
  }

  std::vector<int> assign(n, 0);
  if (trace) {
    trace->iterations = 0;
    trace->objective.clear();
  }
  for (int iter = 0; iter < 100; ++iter) {
    // Assignment step.
    double objective = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(points[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(points[i], centroids[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      assign[i] = best;
      objective += bd;
    }
    if (trace) {
      ++trace->iterations;
      trace->objective.push_back(objective);
    }

    // Update step, reseeding emptied clusters with the point farthest from
    // its assigned centroid.
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) next[assign[i]][j] += points[i][j];
    }
    std::vector<char> used(n, 0);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j) next[c][j] /= static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double fd = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        double d = sq_dist(points[i], centroids[assign[i]]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      used[far] = 1;
      next[c] = points[far];
    }

    double moved = 0;
    for (int c = 0; c < k; ++c) moved = std::max(moved, std::sqrt(sq_dist(next[c], centroids[c])));
    centroids = std::move(next);
    if (moved < 1e-6) break;
  }

  // Final assignment against the converged centroids.
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double bd = sq_dist(points[i], centroids[0]);
    for (int c = 1; c < k; ++c) {
      double d = sq_dist(points[i], centroids[c]);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    assign[i] = best;
  }
  return assign;
}

double nmi(std::span<const int> u, std::span<const int> v) {
  check_paired(u, v, "nmi");
  const double n = static_cast<double>(u.size());
  std::map<int, std::int64_t> cu, cv;
  std::map<std::pair<int, int>, std::int64_t> joint;
  for (std::size_t i = 0; i < u.size(); ++i) {
    ++cu[u[i]];
    ++cv[v[i]];
    ++joint[{u[i], v[i]}];
  }

  auto entropy = [&](const std::map<int, std::int64_t>& counts) {
    double h = 0;
    for (const auto& [_, c] : counts) {
      double p = c / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double hu = entropy(cu), hv = entropy(cv);
  if (hu == 0.0 && hv == 0.0) return 1.0;  // two single-cluster partitions

  double mi = 0;
  for (const auto& [uv, c] : joint) {
    double puv = c / n;
    double pu = cu[uv.first] / n;
    double pv = cv[uv.second] / n;
    mi += puv * std::log(puv / (pu * pv));
  }
  if (mi <= 0.0) return 0.0;
  double out = mi / ((hu + hv) / 2.0);
  return std::min(1.0, std::max(0.0, out));
}

double mcnemar_p(std::span<const int> preds_a, std::span<const int> preds_b,
                 std::span<const int> golds) {
  check_paired(preds_a, golds, "mcnemar_p");
  check_paired(preds_b, golds, "mcnemar_p");
  std::int64_t b = 0, c = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    bool ok_a = preds_a[i] == golds[i];
    bool ok_b = preds_b[i] == golds[i];
    if (ok_a && !ok_b) ++b;
    if (!ok_a && ok_b) ++c;
  }
  const std::int64_t m = b + c;
  if (m == 0) return 1.0;
  const std::int64_t lo = std::min(b, c);
  double tail = 0;
  if (m <= 1000) {
    // Terms C(m, k) / 2^m by recurrence: exact dyadic arithmetic while the
    // binomial coefficients fit in the mantissa, and 2^-1000 is still a
    // normal double.
    double term = std::ldexp(1.0, -static_cast<int>(m));
    for (std::int64_t k = 0; k <= lo; ++k) {
      tail += term;
      term = term * static_cast<double>(m - k) / static_cast<double>(k + 1);
    }
  } else {
    double log_term = -static_cast<double>(m) * std::log(2.0);
    for (std::int64_t k = 0; k <= lo; ++k) {
      tail += std::exp(log_term);
      log_term += std::log(static_cast<double>(m - k)) -
                  std::log(static_cast<double>(k + 1));
    }
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace driftbench
