#include "dynpanel/dgp.hpp"

#include <cmath>

#include "dynpanel/errors.hpp"
#include "dynpanel/parallel.hpp"
#include "dynpanel/rng.hpp"

namespace dynpanel {

void DgpSpec::validate() const {
  if (beta_raw.empty())
    throw Error::data("InvalidSpec", "beta_raw must have at least one entry");
  bool any_nonzero = false;
  for (double b : beta_raw) {
    if (!std::isfinite(b)) throw Error::data("InvalidSpec", "non-finite beta_raw entry");
    if (b != 0.0) any_nonzero = true;
  }
  if (!any_nonzero) throw Error::data("InvalidSpec", "beta_raw must have a nonzero entry");
  if (!std::isfinite(gamma_raw)) throw Error::data("InvalidSpec", "non-finite gamma_raw");
  if (t_max < 3) throw Error::data("InvalidSpec", "t_max must be >= 3");
  if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0))
    throw Error::data("InvalidSpec", "ar_coefficient must lie in (-1, 1)");
  if (fixed_effect_rule == FixedEffectRule::MeanOfX2AcrossPeriods && k() < 2)
    throw Error::data("InvalidSpec", "fixed-effect rule uses the second regressor; K >= 2 required");
}

DgpSpec DgpSpec::design(int id) {
  DgpSpec spec;
  spec.gamma_raw = -1.0;
  spec.t_max = 4;
  switch (id) {
    case 1:
      spec.design_id = DesignId::Design1;
      spec.beta_raw = {1.0, 1.0};
      break;
    case 2:
      spec.design_id = DesignId::Design2;
      spec.beta_raw = {1.0, 1.0};
      spec.ar_coefficient = 0.5;
      break;
    case 3:
      spec.design_id = DesignId::Design3;
      spec.beta_raw = {1.0, 1.0, 1.0};
      break;
    default:
      throw Error::data("InvalidSpec", "design id must be 1, 2 or 3");
  }
  return spec;
}

TrueParams true_params(const DgpSpec& spec) {
  spec.validate();
  double norm = 0.0;
  for (double b : spec.beta_raw) norm += b * b;
  norm = std::sqrt(norm);
  TrueParams out;
  out.beta_normalized.reserve(spec.beta_raw.size());
  for (double b : spec.beta_raw) out.beta_normalized.push_back(b / norm);
  out.gamma_normalized = spec.gamma_raw / norm;
  return out;
}

std::pair<PanelDataset, TrueParams> simulate(const DgpSpec& spec, std::int64_t n,
                                             std::uint64_t seed, int workers) {
  spec.validate();
  if (n < 1) throw Error::data("InvalidSpec", "n must be >= 1");

  const int T = spec.t_max;
  const int K = spec.k();
  PanelDataset data(n, T, K);
  PanelDataset* out = &data;

  parallel_for(n, workers, [&, out](std::int64_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));

    // Regressors for t = 0..T, time-major then coordinate; the AR(1) column
    // (if any) transforms its draws sequentially in t.
    std::vector<double> x(static_cast<std::size_t>(T + 1) * K);
    for (int t = 0; t <= T; ++t)
      for (int j = 0; j < K; ++j) x[static_cast<std::size_t>(t) * K + j] = rng.next_normal();
    if (spec.ar_coefficient != 0.0) {
      for (int t = 1; t <= T; ++t)
        x[static_cast<std::size_t>(t) * K + 1] =
            spec.ar_coefficient * x[static_cast<std::size_t>(t - 1) * K + 1] +
            x[static_cast<std::size_t>(t) * K + 1];
    }

    std::vector<double> eps(T + 1);
    for (int t = 0; t <= T; ++t) eps[t] = rng.next_unit_variance_logistic();

    double alpha = 0.0;
    for (int t = 0; t <= T; ++t) alpha += x[static_cast<std::size_t>(t) * K + 1];
    alpha /= static_cast<double>(T + 1);

    auto utility = [&](int t) {
      double u = alpha;
      for (int j = 0; j < K; ++j)
        u += spec.beta_raw[j] * x[static_cast<std::size_t>(t) * K + j];
      return u;
    };

    int prev = utility(0) - eps[0] > 0.0 ? 1 : 0;  // static index at t=0
    out->set_y(i, 0, prev);
    for (int t = 1; t <= T; ++t) {
      const int yt = utility(t) + spec.gamma_raw * prev - eps[t] > 0.0 ? 1 : 0;
      out->set_y(i, t, yt);
      auto dst = out->x_mut(i, t);
      for (int j = 0; j < K; ++j) dst[j] = x[static_cast<std::size_t>(t) * K + j];
      prev = yt;
    }
  });

  return {std::move(data), true_params(spec)};
}

}  // namespace dynpanel
