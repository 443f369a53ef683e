#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "driftbench/corpus.hpp"
#include "driftbench/splits.hpp"

namespace driftbench {

// F1 of the positive class (label 1). Zero denominators yield 0.
double f1_binary(std::span<const int> preds, std::span<const int> golds);

// Unweighted mean of per-class F1 over all n_classes classes. A class with
// no gold and no predicted occurrences contributes 0, so missing classes
// drag the average down rather than being skipped.
double f1_macro(std::span<const int> preds, std::span<const int> golds, int n_classes);

// Binary F1 for two classes, macro otherwise.
double task_f1(std::span<const int> preds, std::span<const int> golds, int n_classes);

// f[i][j] = F1 of a model trained on bin i, evaluated on bin j.
struct ScoreMatrix {
  int T = 0;
  std::vector<double> f;

  ScoreMatrix() = default;
  explicit ScoreMatrix(int t) : T(t), f(static_cast<std::size_t>(t) * t, 0.0) {}
  double& at(int i, int j) { return f[static_cast<std::size_t>(i) * T + j]; }
  double at(int i, int j) const { return f[static_cast<std::size_t>(i) * T + j]; }
};

// Mean over ordered pairs i != j of |f[i][j] - f[i][i]| / |i - j|. Lower
// means performance decays more slowly with temporal distance.
double tr_score(const ScoreMatrix& matrix);

// Trains per-bin models and fills the score matrix. The factory receives a
// train set (90% of the bin), a held-out dev set (the seeded 10% carve, at
// least one example), and a per-bin seed; it returns a predictor. The
// diagonal is evaluated on the held-out carve, off-diagonals on whole bins.
using Predictor = std::function<std::vector<int>(const std::vector<TimedExample>&)>;
using ModelFactory = std::function<Predictor(const std::vector<TimedExample>& train,
                                             const std::vector<TimedExample>& dev,
                                             std::uint64_t seed)>;
ScoreMatrix build_score_matrix(const Corpus& corpus, const TimeBinning& binning,
                               const ModelFactory& factory, std::uint64_t seed);

// Lloyd's algorithm with distance-squared-weighted seeding. Ties in the
// assignment step go to the lowest centroid index; an emptied cluster is
// reseeded with the point farthest from its assigned centroid. Stops when
// no centroid moves more than 1e-6 (L2) or after 100 iterations.
struct KmeansTrace {
  int iterations = 0;
  std::vector<double> objective;  // sum of squared distances after each update
};
std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k,
                        std::uint64_t seed, KmeansTrace* trace = nullptr);

// Mutual information over the joint label distribution, normalized by the
// arithmetic mean of the two entropies. Natural logarithms. Two one-cluster
// partitions score 1; independence scores 0.
double nmi(std::span<const int> u, std::span<const int> v);

// Two-sided exact binomial McNemar test over paired predictions:
// p = min(1, 2 * sum_{k<=min(b,c)} C(b+c, k) / 2^(b+c)), and 1 when the
// models disagree on nothing (b + c = 0).
double mcnemar_p(std::span<const int> preds_a, std::span<const int> preds_b,
                 std::span<const int> golds);

}  // namespace driftbench
