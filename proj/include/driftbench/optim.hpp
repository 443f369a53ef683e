#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftbench/model.hpp"

namespace driftbench {

// Flat view over one tensor. `decay` marks weight matrices; biases, Dcwe
// offsets, the Taph direction, and the adversarial head stay undecayed.
template <typename S>
struct ParamRef {
  std::string name;
  S* data = nullptr;
  std::size_t n = 0;
  bool decay = false;
};

// Fixed traversal order: E, W1, b1, W2, b2, then the active head block.
// Params and grads share shapes, so calling this on a Grads mirror yields
// references aligned with the model's. The frozen Lmsoc matrix is excluded.
template <typename S>
std::vector<ParamRef<S>> trainable_params(EncoderParams<S>& enc, TemporalHead<S>& head) {
  std::vector<ParamRef<S>> refs;
  refs.push_back({"E", enc.E.a.data(), enc.E.size(), true});
  refs.push_back({"W1", enc.W1.a.data(), enc.W1.size(), true});
  refs.push_back({"b1", enc.b1.data(), enc.b1.size(), false});
  refs.push_back({"W2", enc.W2.a.data(), enc.W2.size(), true});
  refs.push_back({"b2", enc.b2.data(), enc.b2.size(), false});
  if (!head.offsets.empty())
    refs.push_back({"offsets", head.offsets.a.data(), head.offsets.size(), false});
  if (!head.w.empty()) refs.push_back({"w", head.w.data(), head.w.size(), false});
  if (!head.time_W.empty())
    refs.push_back({"time_W", head.time_W.a.data(), head.time_W.size(), false});
  if (!head.time_b.empty())
    refs.push_back({"time_b", head.time_b.data(), head.time_b.size(), false});
  return refs;
}

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
};

// AdamW: moment-based update with weight decay applied directly to the
// parameter, not folded into the gradient.
template <typename S>
class AdamW {
 public:
  AdamW(const AdamHyper& h, const std::vector<ParamRef<S>>& params) : h_(h) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(p.n, S(0));
      v_.emplace_back(p.n, S(0));
    }
  }

  void step(const std::vector<ParamRef<S>>& params,
            const std::vector<ParamRef<S>>& grads) {
    if (params.size() != grads.size() || params.size() != m_.size())
      throw std::invalid_argument("AdamW::step: tensor list mismatch");
    ++t_;
    const S lr = static_cast<S>(h_.learning_rate);
    const S b1 = static_cast<S>(h_.beta1);
    const S b2 = static_cast<S>(h_.beta2);
    const S eps = static_cast<S>(h_.eps);
    const S wd = static_cast<S>(h_.weight_decay);
    const S bc1 = static_cast<S>(1.0 - std::pow(h_.beta1, t_));
    const S bc2 = static_cast<S>(1.0 - std::pow(h_.beta2, t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].n != grads[k].n || params[k].n != m_[k].size())
        throw std::invalid_argument("AdamW::step: tensor size mismatch");
      S* p = params[k].data;
      const S* g = grads[k].data;
      S* m = m_[k].data();
      S* v = v_[k].data();
      const S decay = params[k].decay ? wd : S(0);
      for (std::size_t i = 0; i < params[k].n; ++i) {
        m[i] = b1 * m[i] + (S(1) - b1) * g[i];
        v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
        const S mhat = m[i] / bc1;
        const S vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + decay * p[i]);
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  AdamHyper h_;
  std::int64_t t_ = 0;
  std::vector<std::vector<S>> m_, v_;
};

}  // namespace driftbench
