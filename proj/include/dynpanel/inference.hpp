#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dynpanel/estimator.hpp"
#include "dynpanel/panel_data.hpp"

namespace dynpanel {

enum class BootstrapMethod { Numerical, ModifiedObjective, MOutOfN, Classic };

// Resampling configuration. Tuning sequences follow the rate rules
//   epsilon_n = c n^{-2/3} log n            (Numerical)
//   omega_n   = c n^{-1/7} log n, capped at 0.5   (curvature, direction step)
//   omega_n   = c n^{-3/28} (log n)^{1/7}         (curvature, state-dependence step)
//   m         = ceil(n^{2/3})               (MOutOfN)
// each of which can be overridden explicitly.
struct BootstrapConfig {
  BootstrapMethod method = BootstrapMethod::Numerical;
  int b_draws = 199;
  double c = 1.0;
  std::optional<double> epsilon_override;
  std::optional<double> omega_beta_override;
  std::optional<double> omega_gamma_override;
  std::optional<std::int64_t> m_override;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;

  double epsilon(std::int64_t n) const;
  double omega_beta(std::int64_t n) const;
  double omega_gamma(std::int64_t n) const;
  std::int64_t m(std::int64_t n) const;
  void validate(std::int64_t n) const;
};

// Numerical second-derivative estimates of the objective curvatures at the
// point estimate; v1_hat is exactly symmetric by construction.
struct CurvatureEstimates {
  int k = 0;
  std::vector<double> v1_hat;  // k x k, row-major
  double v2_hat = 0.0;
  double omega_beta = 0.0;
  double omega_gamma = 0.0;
};

struct BootstrapResult {
  BootstrapMethod method = BootstrapMethod::Numerical;
  double alpha = 0.05;
  double c_used = 1.0;

  std::vector<double> beta_point;
  double gamma_point = 0.0;
  std::vector<double> beta_lower, beta_upper;
  double gamma_lower = 0.0, gamma_upper = 0.0;

  int b_draws = 0;
  std::vector<double> beta_draws;   // b_draws x k row-major; NaN rows when missing
  std::vector<double> gamma_draws;  // b_draws; NaN when missing
  int missing_beta = 0, missing_gamma = 0;

  double epsilon_used = std::numeric_limits<double>::quiet_NaN();
  double omega_beta_used = std::numeric_limits<double>::quiet_NaN();
  double omega_gamma_used = std::numeric_limits<double>::quiet_NaN();
  double h_used = 0.0;
  double h_draw = 0.0;      // bandwidth inside draws (differs for MOutOfN)
  std::int64_t m_used = 0;  // resample size per draw

  int beta_q_lo_index = 0, beta_q_hi_index = 0;
  int gamma_q_lo_index = 0, gamma_q_hi_index = 0;

  bool inconsistent_method_warning = false;  // set by the classic bootstrap
  bool curvature_unusable = false;           // v2_hat > 0 under ModifiedObjective
  std::optional<CurvatureEstimates> curvature;
};

// Order statistic at the 1-based index ceil(tau * B), clamped to [1, B].
double quantile(std::span<const double> samples, double tau);

// Fourth-difference estimate of the direction-objective curvature matrix.
std::vector<double> estimate_v1(const PanelDataset& data, std::span<const double> beta_hat,
                                double omega,
                                ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);

// Second-difference estimate of the state-dependence objective curvature.
double estimate_v2(const PanelDataset& data, const ModelParams& params_hat, double omega,
                   double h, ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);

CurvatureEstimates estimate_curvature(const PanelDataset& data, const EstimateResult& est,
                                      const BootstrapConfig& cfg);

BootstrapResult numerical_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                    const BootstrapConfig& cfg);
BootstrapResult modified_objective_bootstrap(const PanelDataset& data,
                                             const EstimateResult& est,
                                             const BootstrapConfig& cfg);
BootstrapResult m_out_of_n_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                     const BootstrapConfig& cfg);
BootstrapResult classic_bootstrap(const PanelDataset& data, const EstimateResult& est,
                                  const BootstrapConfig& cfg);

// Dispatches on cfg.method.
BootstrapResult run_bootstrap(const PanelDataset& data, const EstimateResult& est,
                              const BootstrapConfig& cfg);

}  // namespace dynpanel
