#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dynpanel/panel_data.hpp"

namespace dynpanel {

enum class DesignId { Design1, Design2, Design3, Custom };
enum class ErrorLaw { UnitVarianceLogistic };
enum class FixedEffectRule { MeanOfX2AcrossPeriods };

// Simulated data-generating process. The built-in designs share the dynamic
// index y_t = 1[x_t'beta + gamma*y_{t-1} + alpha - eps_t > 0] with a static
// index at t=0, standard-normal regressors (Design 2 makes the second column
// AR(1) with coefficient 0.5), unit-variance logistic errors, and a fixed
// effect equal to the across-period mean of the second regressor column.
struct DgpSpec {
  DesignId design_id = DesignId::Custom;
  std::vector<double> beta_raw;
  double gamma_raw = 0.0;
  int t_max = 4;
  double ar_coefficient = 0.0;
  ErrorLaw error_law = ErrorLaw::UnitVarianceLogistic;
  FixedEffectRule fixed_effect_rule = FixedEffectRule::MeanOfX2AcrossPeriods;

  int k() const { return static_cast<int>(beta_raw.size()); }
  void validate() const;

  static DgpSpec design(int id);  // 1, 2 or 3
};

// Coefficients after rescaling beta_raw to the unit sphere.
struct TrueParams {
  std::vector<double> beta_normalized;
  double gamma_normalized = 0.0;
};

TrueParams true_params(const DgpSpec& spec);

// Deterministic function of (spec, n, seed); per-individual draw streams are
// keyed by (seed, i), so the result is bit-identical for any worker count.
std::pair<PanelDataset, TrueParams> simulate(const DgpSpec& spec, std::int64_t n,
                                             std::uint64_t seed, int workers = 1);

}  // namespace dynpanel
