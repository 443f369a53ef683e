#pragma once

#include <cmath>
#include <span>
#include <string>

#include "driftbench/model.hpp"
#include "driftbench/optim.hpp"

namespace driftbench {

struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst;  // "tensor[index]"
};

// Central finite differences over every parameter, always in double. Per
// scalar the relative error is |analytic - fd| / max(|analytic|, |fd|, 1e-6);
// the floor keeps FD cancellation noise from blowing up near-zero entries.
//
// For Tda the composition is verified explicitly: encoder parameters are
// checked against d/dp [L_task - lambda * L_time] (the reversal), while the
// time head's own tensors are checked against d/dp [L_time].
inline GradCheckReport grad_check(Model<double>& m,
                                  std::span<const FeaturizedExample> batch,
                                  double eps = 1e-4) {
  Grads<double> grads = make_grads(m);
  grads.zero();
  forward_backward(m, batch, &grads);

  auto params = trainable_params(m.enc, m.head);
  auto grefs = trainable_params(grads.enc, grads.head);
  const bool tda = m.head.variant == HeadVariant::Tda;
  const double lambda = static_cast<double>(m.head.lambda_grl);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const bool time_head = params[k].name == "time_W" || params[k].name == "time_b";
    for (std::size_t i = 0; i < params[k].n; ++i) {
      double saved = params[k].data[i];
      params[k].data[i] = saved + eps;
      LossParts up = forward_backward(m, batch, nullptr);
      params[k].data[i] = saved - eps;
      LossParts down = forward_backward(m, batch, nullptr);
      params[k].data[i] = saved;

      auto target = [&](const LossParts& p) {
        if (!tda) return p.task + p.temporal;
        return time_head ? p.time_adv : p.task - lambda * p.time_adv;
      };
      double fd = (target(up) - target(down)) / (2 * eps);
      double analytic = grefs[k].data[i];
      double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
      double rel = std::fabs(analytic - fd) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = params[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace driftbench
