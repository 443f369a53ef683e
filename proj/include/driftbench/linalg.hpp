#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace driftbench {

// Row-major dense matrix. The training code operates on raw rows; nothing
// here allocates per element, so float32 runs stay predictable.
template <typename S>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<S> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, S(0)) {}

  S* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const S* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }

  S& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  S at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  void zero() { std::fill(a.begin(), a.end(), S(0)); }
};

template <typename S>
S dot(const S* x, const S* y, int n) {
  S s = 0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

// y += c * x
template <typename S>
void axpy(S c, const S* x, S* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += c * x[i];
}

}  // namespace driftbench
