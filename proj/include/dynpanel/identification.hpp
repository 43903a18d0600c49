#pragma once

#include <cstdint>
#include <vector>

#include "dynpanel/dgp.hpp"

namespace dynpanel {

struct InequalityBin {
  double lo = 0.0, hi = 0.0, mid = 0.0;
  std::int64_t count = 0;
  double p_later = 0.0;    // frequency of y3 = 1 within the bin
  double p_earlier = 0.0;  // frequency of y1 = 1 within the bin
  bool straddles_zero = false;
  bool eligible = false;   // count >= min_bin and not straddling zero
  bool agrees = false;     // sign(p_later - p_earlier) matches sign(mid)
};

// Large-sample frequency check of the monotone link between the conditional
// choice probabilities at periods 1 and 3 and the index difference
// (x3 - x1)'beta, on the conditioning event {y0 = y2 = y4}.
struct InequalityReport {
  std::vector<InequalityBin> bins;
  std::int64_t conditioning_count = 0;
  int eligible_bins = 0;
  double agreement_rate = 0.0;  // agreeing / eligible
};

InequalityReport check_identifying_inequality(const DgpSpec& spec, std::int64_t n_large,
                                              int bins, std::int64_t min_bin,
                                              std::uint64_t seed, int workers = 1);

// Grid argmax of both sample objectives at the known simulation truth,
// reported with distances to the true parameter values.
struct MaximizerReport {
  std::vector<double> beta_argmax;
  double beta_angle_distance = 0.0;  // radians
  double q1_at_argmax = 0.0;
  double gamma_argmax = 0.0;
  double gamma_abs_error = 0.0;
  double q2_at_argmax = 0.0;
};

MaximizerReport check_population_maximizers(const DgpSpec& spec, std::int64_t n_large,
                                            int beta_grid_points, double gamma_lo,
                                            double gamma_hi, double gamma_step,
                                            std::uint64_t seed, int workers = 1);

}  // namespace dynpanel
