#include "dynpanel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dynpanel/errors.hpp"
#include "dynpanel/parallel.hpp"
#include "dynpanel/rng.hpp"

namespace dynpanel {

double BootstrapConfig::epsilon(std::int64_t n) const {
  if (epsilon_override) return *epsilon_override;
  const double nd = static_cast<double>(n);
  return c * std::pow(nd, -2.0 / 3.0) * std::log(nd);
}

double BootstrapConfig::omega_beta(std::int64_t n) const {
  if (omega_beta_override) return *omega_beta_override;
  const double nd = static_cast<double>(n);
  return std::min(c * std::pow(nd, -1.0 / 7.0) * std::log(nd), 0.5);
}

double BootstrapConfig::omega_gamma(std::int64_t n) const {
  if (omega_gamma_override) return *omega_gamma_override;
  const double nd = static_cast<double>(n);
  return c * std::pow(nd, -3.0 / 28.0) * std::pow(std::log(nd), 1.0 / 7.0);
}

std::int64_t BootstrapConfig::m(std::int64_t n) const {
  if (m_override) return *m_override;
  return static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
}

void BootstrapConfig::validate(std::int64_t n) const {
  if (b_draws < 2) throw Error::data("InvalidConfig", "bootstrap needs b_draws >= 2");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error::data("InvalidConfig", "alpha must lie in (0, 1)");
  if (!(c > 0.0)) throw Error::data("InvalidConfig", "tuning constant c must be positive");
  if (method == BootstrapMethod::Numerical) {
    const double eps = epsilon(n);
    // The boundary epsilon = 1/n is the classic-bootstrap degeneration and is
    // accepted only as an explicit override.
    if (!(eps >= 1.0 / static_cast<double>(n) && eps < 1.0))
      throw Error::data("InvalidConfig", "epsilon must lie in [1/n, 1)");
  }
  if (method == BootstrapMethod::ModifiedObjective) {
    if (!(omega_beta(n) > 0.0) || !(omega_gamma(n) > 0.0))
      throw Error::data("InvalidConfig", "curvature steps must be positive");
  }
  if (method == BootstrapMethod::MOutOfN) {
    const std::int64_t mm = m(n);
    // m = n is accepted as the classic-bootstrap degeneration.
    if (!(mm >= 3 && mm <= n))
      throw Error::data("InvalidConfig", "resample size m must lie in [3, n]");
  }
}

double quantile(std::span<const double> samples, double tau) {
  if (samples.empty()) throw Error::numerical("EmptySample", "quantile of an empty sample");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw Error::data("InvalidConfig", "quantile level must lie in [0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t B = static_cast<std::int64_t>(sorted.size());
  std::int64_t idx = static_cast<std::int64_t>(std::ceil(tau * static_cast<double>(B)));
  idx = std::clamp<std::int64_t>(idx, 1, B);
  return sorted[idx - 1];
}

namespace {

int quantile_index(std::int64_t b, double tau) {
  const std::int64_t idx = static_cast<std::int64_t>(std::ceil(tau * static_cast<double>(b)));
  return static_cast<int>(std::clamp<std::int64_t>(idx, 1, std::max<std::int64_t>(b, 1)));
}

}  // namespace

std::vector<double> estimate_v1(const PanelDataset& data, std::span<const double> beta_hat,
                                double omega, ObjectiveVariant variant) {
  if (!(omega > 0.0)) throw Error::data("InvalidConfig", "omega must be positive");
  const int K = data.k();
  const std::int64_t n = data.n();
  std::vector<double> out(static_cast<std::size_t>(K) * K, 0.0);
  std::vector<double> delta(n);
  std::vector<double> bpp(beta_hat.begin(), beta_hat.end());
  std::vector<double> bpm(beta_hat.begin(), beta_hat.end());
  std::vector<double> bmp(beta_hat.begin(), beta_hat.end());
  std::vector<double> bmm(beta_hat.begin(), beta_hat.end());
  for (int k = 0; k < K; ++k) {
    for (int l = k; l < K; ++l) {
      for (int j = 0; j < K; ++j) bpp[j] = bpm[j] = bmp[j] = bmm[j] = beta_hat[j];
      bpp[k] += omega; bpp[l] += omega;
      bpm[k] += omega; bpm[l] -= omega;
      bmp[k] -= omega; bmp[l] += omega;
      bmm[k] -= omega; bmm[l] -= omega;
      for (std::int64_t i = 0; i < n; ++i) {
        delta[i] = xi(data, i, bpp, variant) - xi(data, i, bpm, variant) -
                   xi(data, i, bmp, variant) + xi(data, i, bmm, variant);
      }
      const double entry =
          pairwise_sum(delta) / (4.0 * omega * omega * static_cast<double>(n));
      out[static_cast<std::size_t>(k) * K + l] = entry;
      out[static_cast<std::size_t>(l) * K + k] = entry;
    }
  }
  return out;
}

double estimate_v2(const PanelDataset& data, const ModelParams& params_hat, double omega,
                   double h, ObjectiveVariant variant) {
  if (!(omega > 0.0)) throw Error::data("InvalidConfig", "omega must be positive");
  const std::int64_t n = data.n();
  std::vector<double> delta(n);
  for (std::int64_t i = 0; i < n; ++i) {
    delta[i] = varsigma(data, i, params_hat.gamma + 2.0 * omega, params_hat.beta, h, variant) -
               2.0 * varsigma(data, i, params_hat.gamma, params_hat.beta, h, variant) +
               varsigma(data, i, params_hat.gamma - 2.0 * omega, params_hat.beta, h, variant);
  }
  return pairwise_sum(delta) / (4.0 * omega * omega * static_cast<double>(n));
}

CurvatureEstimates estimate_curvature(const PanelDataset& data, const EstimateResult& est,
                                      const BootstrapConfig& cfg) {
  CurvatureEstimates out;
  out.k = data.k();
  out.omega_beta = cfg.omega_beta(data.n());
  out.omega_gamma = cfg.omega_gamma(data.n());
  out.v1_hat = estimate_v1(data, est.params.beta, out.omega_beta, est.variant);
  out.v2_hat = estimate_v2(data, est.params, out.omega_gamma, est.h_used, est.variant);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Cached geometry shared by every draw of one bootstrap run.
struct DrawEngine {
  const PanelDataset& data;
  const EstimateResult& est;
  int K;
  std::int64_t n;

  BetaTerms bt;
  std::vector<double> vx, vy;                // K == 2 fast path
  std::vector<std::uint8_t> beta_switcher;   // per individual
  GammaTerms gt;
  std::vector<std::uint8_t> gamma_switcher;  // per individual

  DrawEngine(const PanelDataset& d, const EstimateResult& e, double gamma_h)
      : data(d), est(e), K(d.k()), n(d.n()) {
    bt = build_beta_terms(data, est.variant);
    beta_switcher.assign(n, 0);
    for (std::int64_t t = 0; t < bt.size(); ++t) beta_switcher[bt.owner[t]] = 1;
    if (K == 2) {
      vx.resize(bt.size());
      vy.resize(bt.size());
      for (std::int64_t t = 0; t < bt.size(); ++t) {
        vx[t] = bt.v[2 * t];
        vy[t] = bt.v[2 * t + 1];
      }
    }
    gt = build_gamma_terms(data, est.params.beta, gamma_h, est.variant);
    gamma_switcher.assign(n, 0);
    for (std::int64_t t = 0; t < gt.size(); ++t)
      if (gt.d[t] != 0.0) gamma_switcher[gt.owner[t]] = 1;
  }

  bool resample_has_beta_switcher(std::span<const std::int32_t> counts) const {
    for (std::int64_t t = 0; t < bt.size(); ++t)
      if (counts[bt.owner[t]] > 0) return true;
    return false;
  }
  bool resample_has_gamma_switcher(std::span<const std::int32_t> counts) const {
    for (std::int64_t t = 0; t < gt.size(); ++t)
      if (gt.d[t] != 0.0 && counts[gt.owner[t]] > 0) return true;
    return false;
  }

  // Maximizes sum_t weights[t] * 1[v_t'b > 0] (+ optional quadratic around the
  // point estimate) over the unit sphere.
  std::vector<double> maximize_beta_draw(std::span<const double> weights,
                                         const std::vector<double>* quad_v1) const {
    auto quad_at_dir = [&](std::span<const double> b) {
      double acc = 0.0;
      for (int r = 0; r < K; ++r) {
        const double dr = b[r] - est.params.beta[r];
        for (int s = 0; s < K; ++s) {
          const double ds = b[s] - est.params.beta[s];
          acc += dr * (*quad_v1)[static_cast<std::size_t>(r) * K + s] * ds;
        }
      }
      return 0.5 * acc;
    };

    if (K == 2) {
      auto exact = [&](double angle) {
        const double ct = std::cos(angle), st = std::sin(angle);
        double acc = 0.0;
        for (std::int64_t t = 0; t < bt.size(); ++t) {
          if (weights[t] == 0.0) continue;
          if (vx[t] * ct + vy[t] * st > 0.0) acc += weights[t];
        }
        return acc;
      };
      std::function<double(double)> smooth;
      const std::function<double(double)>* smooth_ptr = nullptr;
      double probe_angles[1];
      std::span<const double> extra;
      if (quad_v1) {
        smooth = [&](double angle) {
          const double b[2] = {std::cos(angle), std::sin(angle)};
          return quad_at_dir(std::span<const double>(b, 2));
        };
        smooth_ptr = &smooth;
        probe_angles[0] = std::atan2(est.params.beta[1], est.params.beta[0]);
        extra = std::span<const double>(probe_angles, 1);
      }
      const CircleMax cm =
          maximize_circle(vx, vy, weights, TermForm::Indicator, exact, smooth_ptr, extra);
      return {std::cos(cm.angle), std::sin(cm.angle)};
    }

    auto eval = [&](std::span<const double> b) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < bt.size(); ++t) {
        if (weights[t] == 0.0) continue;
        if (bt.dot(t, b) > 0.0) acc += weights[t];
      }
      if (quad_v1) acc += quad_at_dir(b);
      return acc;
    };
    std::vector<std::vector<double>> extra;
    if (quad_v1) extra.push_back(est.params.beta);
    const SphereMax sm = maximize_sphere_grid(K, eval, est.beta_grid, extra);
    return sm.direction;
  }

  // Maximizes sum_t weights[t] * 1[c_t + r d_t > 0] (+ optional quadratic)
  // over the configured interval.
  double maximize_gamma_draw(std::span<const double> weights, const double* quad_v2) const {
    auto exact = [&](double r) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < gt.size(); ++t) {
        if (weights[t] == 0.0) continue;
        if (gt.c[t] + r * gt.d[t] > 0.0) acc += weights[t];
      }
      return acc;
    };
    Quad1D quad;
    const Quad1D* quad_ptr = nullptr;
    double probe[1];
    std::span<const double> extra;
    if (quad_v2) {
      quad = {*quad_v2, est.params.gamma};
      quad_ptr = &quad;
      probe[0] = est.params.gamma;
      extra = std::span<const double>(probe, 1);
    }
    const IntervalMax im =
        maximize_piecewise_1d(gt.c, gt.d, weights, TermForm::Indicator, est.gamma_lo,
                              est.gamma_hi, exact, quad_ptr, extra);
    return im.arg;
  }
};

struct DrawPlan {
  std::int64_t resample_size = 0;
  // Final per-term weight = (base + count_coef * count[owner]) * term weight.
  double beta_base = 0.0, beta_count_coef = 0.0;
  double gamma_base = 0.0, gamma_count_coef = 0.0;
  const std::vector<double>* quad_v1 = nullptr;
  const double* quad_v2 = nullptr;
};

void run_draws(const DrawEngine& eng, const BootstrapConfig& cfg, const DrawPlan& plan,
               BootstrapResult& result) {
  const int B = cfg.b_draws;
  const int K = eng.K;
  result.b_draws = B;
  result.beta_draws.assign(static_cast<std::size_t>(B) * K, kNaN);
  result.gamma_draws.assign(B, kNaN);
  std::vector<std::uint8_t> beta_missing(B, 0), gamma_missing(B, 0);

  parallel_for(B, cfg.workers, [&](std::int64_t draw) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(draw));
    std::vector<std::int32_t> counts(eng.n, 0);
    for (std::int64_t j = 0; j < plan.resample_size; ++j)
      counts[static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(eng.n)))]++;

    if (eng.resample_has_beta_switcher(counts)) {
      std::vector<double> weights(eng.bt.size());
      for (std::int64_t t = 0; t < eng.bt.size(); ++t)
        weights[t] =
            (plan.beta_base + plan.beta_count_coef * counts[eng.bt.owner[t]]) * eng.bt.w[t];
      const std::vector<double> b = eng.maximize_beta_draw(weights, plan.quad_v1);
      for (int j = 0; j < K; ++j) result.beta_draws[draw * K + j] = b[j];
    } else {
      beta_missing[draw] = 1;
    }

    if (eng.resample_has_gamma_switcher(counts)) {
      std::vector<double> weights(eng.gt.size());
      for (std::int64_t t = 0; t < eng.gt.size(); ++t)
        weights[t] = (plan.gamma_base + plan.gamma_count_coef * counts[eng.gt.owner[t]]) *
                     eng.gt.weight[t];
      result.gamma_draws[draw] = eng.maximize_gamma_draw(weights, plan.quad_v2);
    } else {
      gamma_missing[draw] = 1;
    }
  });

  for (int d = 0; d < B; ++d) {
    result.missing_beta += beta_missing[d];
    result.missing_gamma += gamma_missing[d];
  }
  if (result.missing_beta > B / 10 || result.missing_gamma > B / 10)
    throw Error::numerical(
        "ResampleDegenerate",
        "more than 10% of bootstrap draws had no switchers (beta: " +
            std::to_string(result.missing_beta) +
            ", gamma: " + std::to_string(result.missing_gamma) + " of " + std::to_string(B) +
            "); the sample is too thin for resampling inference");
}

enum class CiRule { Reflected, Percentile };

// Builds the per-coordinate intervals from the draws. `factor` rescales the
// reflected quantile deviations (1 when the draw distribution mimics the
// sampling distribution directly).
void build_cis(BootstrapResult& result, const EstimateResult& est, double beta_factor,
               double gamma_factor, CiRule rule) {
  const int K = static_cast<int>(est.params.beta.size());
  const double tau_lo = result.alpha / 2.0;
  const double tau_hi = 1.0 - result.alpha / 2.0;

  result.beta_point = est.params.beta;
  result.gamma_point = est.params.gamma;
  result.beta_lower.assign(K, kNaN);
  result.beta_upper.assign(K, kNaN);

  std::vector<double> coord;
  coord.reserve(result.b_draws);
  for (int j = 0; j < K; ++j) {
    coord.clear();
    for (int d = 0; d < result.b_draws; ++d) {
      const double v = result.beta_draws[static_cast<std::size_t>(d) * K + j];
      if (!std::isnan(v)) coord.push_back(v);
    }
    if (coord.empty()) throw Error::numerical("EmptySample", "no usable direction draws");
    const double qlo = quantile(coord, tau_lo);
    const double qhi = quantile(coord, tau_hi);
    const double point = est.params.beta[j];
    if (rule == CiRule::Percentile) {
      result.beta_lower[j] = qlo;
      result.beta_upper[j] = qhi;
    } else {
      result.beta_lower[j] = point - beta_factor * (qhi - point);
      result.beta_upper[j] = point - beta_factor * (qlo - point);
    }
    if (j == 0) {
      result.beta_q_lo_index = quantile_index(static_cast<std::int64_t>(coord.size()), tau_lo);
      result.beta_q_hi_index = quantile_index(static_cast<std::int64_t>(coord.size()), tau_hi);
    }
  }

  coord.clear();
  for (int d = 0; d < result.b_draws; ++d)
    if (!std::isnan(result.gamma_draws[d])) coord.push_back(result.gamma_draws[d]);
  if (coord.empty()) throw Error::numerical("EmptySample", "no usable state-dependence draws");
  const double qlo = quantile(coord, tau_lo);
  const double qhi = quantile(coord, tau_hi);
  result.gamma_q_lo_index = quantile_index(static_cast<std::int64_t>(coord.size()), tau_lo);
  result.gamma_q_hi_index = quantile_index(static_cast<std::int64_t>(coord.size()), tau_hi);
  if (rule == CiRule::Percentile) {
    result.gamma_lower = qlo;
    result.gamma_upper = qhi;
  } else {
    result.gamma_lower = est.params.gamma - gamma_factor * (qhi - est.params.gamma);
    result.gamma_upper = est.params.gamma - gamma_factor * (qlo - est.params.gamma);
  }
}

BootstrapResult make_result(const BootstrapConfig& cfg, const EstimateResult& est) {
  BootstrapResult result;
  result.method = cfg.method;
  result.alpha = cfg.alpha;
  result.c_used = cfg.c;
  result.h_used = est.h_used;
  result.h_draw = est.h_used;
  return result;
}

}  // namespace

BootstrapResult numerical_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                    const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::Numerical)
    throw Error::data("InvalidConfig", "method mismatch: expected Numerical");
  cfg.validate(data.n());
  const std::int64_t n = data.n();
  const double eps = cfg.epsilon(n);
  double s = std::sqrt(static_cast<double>(n) * eps);
  // At epsilon = 1/n the perturbation scale is exactly 1 and the draw
  // objective collapses to the classic resampled objective; force the exact
  // boundary so the equivalence holds bit-for-bit.
  if (std::abs(static_cast<double>(n) * eps - 1.0) < 1e-12) s = 1.0;

  DrawEngine eng(data, est, est.h_used);
  BootstrapResult result = make_result(cfg, est);
  result.epsilon_used = eps;
  result.m_used = n;

  DrawPlan plan;
  plan.resample_size = n;
  plan.beta_base = (1.0 - s) / static_cast<double>(n);
  plan.beta_count_coef = s / static_cast<double>(n);
  plan.gamma_base = plan.beta_base;
  plan.gamma_count_coef = plan.beta_count_coef;
  run_draws(eng, cfg, plan, result);

  const double factor = std::pow(static_cast<double>(n) * eps, -1.0 / 3.0);
  build_cis(result, est, factor, factor, CiRule::Reflected);
  return result;
}

BootstrapResult modified_objective_bootstrap(const PanelDataset& data,
                                             const EstimateResult& est,
                                             const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::ModifiedObjective)
    throw Error::data("InvalidConfig", "method mismatch: expected ModifiedObjective");
  cfg.validate(data.n());
  const std::int64_t n = data.n();

  DrawEngine eng(data, est, est.h_used);
  BootstrapResult result = make_result(cfg, est);
  result.curvature = estimate_curvature(data, est, cfg);
  result.omega_beta_used = result.curvature->omega_beta;
  result.omega_gamma_used = result.curvature->omega_gamma;
  result.curvature_unusable = result.curvature->v2_hat > 0.0;
  result.m_used = n;

  DrawPlan plan;
  plan.resample_size = n;
  plan.beta_base = -1.0 / static_cast<double>(n);
  plan.beta_count_coef = 1.0 / static_cast<double>(n);
  plan.gamma_base = plan.beta_base;
  plan.gamma_count_coef = plan.beta_count_coef;
  plan.quad_v1 = &result.curvature->v1_hat;
  plan.quad_v2 = &result.curvature->v2_hat;
  run_draws(eng, cfg, plan, result);

  build_cis(result, est, 1.0, 1.0, CiRule::Reflected);
  return result;
}

BootstrapResult m_out_of_n_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                     const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::MOutOfN)
    throw Error::data("InvalidConfig", "method mismatch: expected MOutOfN");
  cfg.validate(data.n());
  const std::int64_t n = data.n();
  const std::int64_t m = cfg.m(n);
  const double h_m = bandwidth(m);

  DrawEngine eng(data, est, h_m);
  BootstrapResult result = make_result(cfg, est);
  result.m_used = m;
  result.h_draw = h_m;

  DrawPlan plan;
  plan.resample_size = m;
  plan.beta_base = 0.0;
  plan.beta_count_coef = 1.0 / static_cast<double>(m);
  plan.gamma_base = 0.0;
  plan.gamma_count_coef = 1.0 / static_cast<double>(m);
  run_draws(eng, cfg, plan, result);

  const double beta_factor = std::cbrt(static_cast<double>(m) / static_cast<double>(n));
  const double gamma_factor =
      std::cbrt((static_cast<double>(m) * h_m) / (static_cast<double>(n) * est.h_used));
  build_cis(result, est, beta_factor, gamma_factor, CiRule::Reflected);
  return result;
}

BootstrapResult classic_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                  const BootstrapConfig& cfg) {
  if (cfg.method != BootstrapMethod::Classic)
    throw Error::data("InvalidConfig", "method mismatch: expected Classic");
  cfg.validate(data.n());
  const std::int64_t n = data.n();

  DrawEngine eng(data, est, est.h_used);
  BootstrapResult result = make_result(cfg, est);
  result.inconsistent_method_warning = true;  // diagnostic use only
  result.m_used = n;

  DrawPlan plan;
  plan.resample_size = n;
  plan.beta_base = 0.0;
  plan.beta_count_coef = 1.0 / static_cast<double>(n);
  plan.gamma_base = 0.0;
  plan.gamma_count_coef = 1.0 / static_cast<double>(n);
  run_draws(eng, cfg, plan, result);

  build_cis(result, est, 1.0, 1.0, CiRule::Percentile);
  return result;
}

BootstrapResult run_bootstrap(const PanelDataset& data, const EstimateResult& est,
                              const BootstrapConfig& cfg) {
  switch (cfg.method) {
    case BootstrapMethod::Numerical: return numerical_bootstrap(data, est, cfg);
    case BootstrapMethod::ModifiedObjective: return modified_objective_bootstrap(data, est, cfg);
    case BootstrapMethod::MOutOfN: return m_out_of_n_bootstrap(data, est, cfg);
    case BootstrapMethod::Classic: return classic_bootstrap(data, est, cfg);
  }
  throw Error::data("InvalidConfig", "unknown bootstrap method");
}

}  // namespace dynpanel
