#include "dynpanel/identification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dynpanel/errors.hpp"
#include "dynpanel/estimator.hpp"

namespace dynpanel {

namespace {

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

InequalityReport check_identifying_inequality(const DgpSpec& spec, std::int64_t n_large,
                                              int bins, std::int64_t min_bin,
                                              std::uint64_t seed, int workers) {
  if (bins < 2) throw Error::data("InvalidConfig", "need at least 2 bins");
  if (min_bin < 1) throw Error::data("InvalidConfig", "min_bin must be >= 1");
  if (spec.t_max < 4)
    throw Error::data("PanelTooShort", "the inequality check needs t_max >= 4");

  auto [data, truth] = simulate(spec, n_large, seed, workers);
  const std::span<const double> beta(truth.beta_normalized);

  struct Obs {
    double d;
    std::uint8_t y1, y3;
  };
  std::vector<Obs> obs;
  obs.reserve(n_large / 2);
  for (std::int64_t i = 0; i < data.n(); ++i) {
    if (data.y(i, 0) == data.y(i, 2) && data.y(i, 2) == data.y(i, 4)) {
      obs.push_back({data.index_diff(i, 3, 1, beta),
                     static_cast<std::uint8_t>(data.y(i, 1)),
                     static_cast<std::uint8_t>(data.y(i, 3))});
    }
  }

  InequalityReport report;
  report.conditioning_count = static_cast<std::int64_t>(obs.size());
  if (report.conditioning_count < 100)
    throw Error::numerical("InsufficientMass",
                           "only " + std::to_string(report.conditioning_count) +
                               " conditioning observations (need >= 100)");

  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.d < b.d; });

  // Equal-probability bins keep tail counts stable.
  const std::int64_t N = report.conditioning_count;
  std::int64_t agree = 0;
  for (int b = 0; b < bins; ++b) {
    const std::int64_t start = b * N / bins;
    const std::int64_t stop = (b + 1) * N / bins;  // exclusive
    if (stop <= start) continue;
    InequalityBin bin;
    bin.lo = obs[start].d;
    bin.hi = obs[stop - 1].d;
    bin.mid = 0.5 * (bin.lo + bin.hi);
    bin.count = stop - start;
    std::int64_t later = 0, earlier = 0;
    for (std::int64_t j = start; j < stop; ++j) {
      later += obs[j].y3;
      earlier += obs[j].y1;
    }
    bin.p_later = static_cast<double>(later) / static_cast<double>(bin.count);
    bin.p_earlier = static_cast<double>(earlier) / static_cast<double>(bin.count);
    bin.straddles_zero = bin.lo < 0.0 && bin.hi > 0.0;
    bin.eligible = bin.count >= min_bin && !bin.straddles_zero;
    bin.agrees = sign_of(bin.p_later - bin.p_earlier) == sign_of(bin.mid) &&
                 sign_of(bin.mid) != 0;
    if (bin.eligible) {
      ++report.eligible_bins;
      if (bin.agrees) ++agree;
    }
    report.bins.push_back(bin);
  }
  report.agreement_rate = report.eligible_bins > 0
                              ? static_cast<double>(agree) / report.eligible_bins
                              : std::numeric_limits<double>::quiet_NaN();
  return report;
}

MaximizerReport check_population_maximizers(const DgpSpec& spec, std::int64_t n_large,
                                            int beta_grid_points, double gamma_lo,
                                            double gamma_hi, double gamma_step,
                                            std::uint64_t seed, int workers) {
  if (beta_grid_points < 8) throw Error::data("InvalidConfig", "beta grid too coarse");
  if (!(gamma_step > 0.0 && gamma_lo < gamma_hi))
    throw Error::data("InvalidConfig", "bad gamma grid");

  auto [data, truth] = simulate(spec, n_large, seed, workers);
  const int K = data.k();
  const std::span<const double> beta_true(truth.beta_normalized);

  const BetaTerms bterms = build_beta_terms(data, ObjectiveVariant::AdjacentOnly);
  if (bterms.size() == 0)
    throw Error::numerical("InsufficientMass", "empty conditioning set for the direction step");

  MaximizerReport report;

  auto eval_dir = [&](std::span<const double> b) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < bterms.size(); ++t) {
      const double a = bterms.dot(t, b);
      acc += bterms.w[t] * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0));
    }
    return acc / static_cast<double>(data.n());
  };

  if (K == 2) {
    double best = -1e300;
    std::vector<double> best_dir = {1.0, 0.0};
    for (int g = 0; g < beta_grid_points; ++g) {
      const double angle = 2.0 * std::numbers::pi * g / beta_grid_points;
      const std::vector<double> dir = {std::cos(angle), std::sin(angle)};
      const double v = eval_dir(dir);
      if (v > best) {
        best = v;
        best_dir = dir;
      }
    }
    report.beta_argmax = best_dir;
    report.q1_at_argmax = best;
  } else {
    BetaGridConfig grid;
    grid.points_per_level = beta_grid_points;
    grid.levels = 1;
    const SphereMax sm = maximize_sphere_grid(K, eval_dir, grid);
    report.beta_argmax = sm.direction;
    report.q1_at_argmax = sm.value;
  }

  double dot = 0.0;
  for (int j = 0; j < K; ++j) dot += report.beta_argmax[j] * beta_true[j];
  report.beta_angle_distance = std::acos(std::clamp(dot, -1.0, 1.0));

  const double h = bandwidth(n_large);
  const GammaTerms gterms = build_gamma_terms(data, beta_true, h, ObjectiveVariant::AdjacentOnly);
  if (gterms.switcher_terms == 0)
    throw Error::numerical("InsufficientMass",
                           "empty conditioning set for the state-dependence step");
  double best_q2 = -1e300, best_r = gamma_lo;
  for (double r = gamma_lo; r <= gamma_hi + 1e-12; r += gamma_step) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < gterms.size(); ++t) {
      if (gterms.weight[t] == 0.0) continue;
      const double a = gterms.c[t] + r * gterms.d[t];
      acc += gterms.weight[t] * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0));
    }
    acc /= static_cast<double>(data.n());
    if (acc > best_q2) {
      best_q2 = acc;
      best_r = r;
    }
  }
  report.gamma_argmax = best_r;
  report.q2_at_argmax = best_q2;
  report.gamma_abs_error = std::abs(best_r - truth.gamma_normalized);
  return report;
}

}  // namespace dynpanel
