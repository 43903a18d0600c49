#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dynpanel/panel_data.hpp"

namespace dynpanel {

enum class KernelId { Epanechnikov };

// Which sample objective the two-step procedure maximizes:
//   AdjacentOnly - first five periods, adjacent-period comparisons for the
//                  state-dependence step;
//   Combined     - AdjacentOnly plus the non-adjacent (1,3) comparison;
//   GeneralT     - all admissible period pairs of a longer panel.
enum class ObjectiveVariant { AdjacentOnly, Combined, GeneralT };

struct BetaGridConfig {
  int points_per_level = 720;
  int levels = 3;
};

struct EstimationConfig {
  KernelId kernel = KernelId::Epanechnikov;
  std::optional<double> bandwidth_override;  // default rule: n^{-1/4} / log(n)
  double gamma_lo = -3.0;
  double gamma_hi = 3.0;
  BetaGridConfig beta_grid;  // used only when K >= 3
  ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly;
  std::uint64_t seed = 0;

  double bandwidth(std::int64_t n) const;
  void validate() const;
};

struct OptimizerTrace {
  std::int64_t beta_arcs = 0;        // K=2: arcs enumerated
  std::int64_t beta_probes = 0;      // K>=3: grid/pattern evaluations
  std::int64_t gamma_intervals = 0;
  int grid_levels = 0;
};

struct EstimateResult {
  ModelParams params;
  double q1_value = 0.0;
  double q2_value = 0.0;
  std::int64_t beta_effective = 0;
  std::int64_t gamma_effective = 0;
  double h_used = 0.0;
  bool beta_degenerate = false;   // direction objective constant on the sphere
  bool gamma_constant = false;    // no breakpoint inside the search interval
  ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly;
  double gamma_lo = -3.0;
  double gamma_hi = 3.0;
  BetaGridConfig beta_grid;
  OptimizerTrace trace;
};

// ---------------------------------------------------------------------------
// Kernels and bandwidth

// (3/4)(1-u^2) on [-1,1], zero outside.
double epanechnikov(double u);

// Scaled kernel h^{-1} K(v/h).
double kernel_weight(double v, double h);

// Default bandwidth rule n^{-1/4} / log(n); requires n >= 3.
double bandwidth(std::int64_t n);

// ---------------------------------------------------------------------------
// Sample objectives (averages over individuals, pairwise-summed)

// Direction objective: mean of switcher-signed agreement sgn((x_t-x_s)'b).
double q1_objective(const PanelDataset& data, std::span<const double> b,
                    ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);

// Kernel-weighted state-dependence objective at candidate r given direction b.
double q2_kernel_objective(const PanelDataset& data, double r, std::span<const double> b,
                           double h,
                           ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);

// Per-individual transformed objective terms used by resampling inference.
// These are the indicator forms of the objective contributions with the
// (unknown-truth) centering terms dropped; the dropped terms are constant in
// the optimization argument, so any argmax is unchanged.
double xi(const PanelDataset& data, std::int64_t i, std::span<const double> b,
          ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);
double varsigma(const PanelDataset& data, std::int64_t i, double r,
                std::span<const double> b, double h,
                ObjectiveVariant variant = ObjectiveVariant::AdjacentOnly);

// ---------------------------------------------------------------------------
// Flattened objective terms, shared by the estimators and the bootstraps.

// One signed comparison per switcher pair: contributes w * g(v'b) to the
// unscaled direction objective (g = sgn or 1[.>0]).
struct BetaTerms {
  int k = 0;
  std::vector<double> v;              // m x k, row-major
  std::vector<double> w;              // outcome differences, +-1
  std::vector<std::int64_t> owner;    // individual index
  std::int64_t size() const { return static_cast<std::int64_t>(w.size()); }
  double dot(std::int64_t t, std::span<const double> b) const {
    const double* row = v.data() + t * k;
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += row[j] * b[j];
    return acc;
  }
};

// One kernel-weighted comparison: contributes weight * g(c + r*d) where
// weight = K_h(index match) * outcome difference. Terms with zero outcome
// difference are not stored.
struct GammaTerms {
  std::vector<double> weight;       // kernel weight times outcome difference
  std::vector<double> c;            // index difference at the compared periods
  std::vector<double> d;            // lag outcome difference in {-1,0,1}
  std::vector<std::int64_t> owner;
  double h = 0.0;
  std::int64_t switcher_terms = 0;  // terms with d != 0 (before kernel weighting)
  std::int64_t active_terms = 0;    // switcher terms with nonzero kernel weight
  std::int64_t size() const { return static_cast<std::int64_t>(weight.size()); }
};

BetaTerms build_beta_terms(const PanelDataset& data, ObjectiveVariant variant);
GammaTerms build_gamma_terms(const PanelDataset& data, std::span<const double> b,
                             double h, ObjectiveVariant variant);

// ---------------------------------------------------------------------------
// Exact maximizers for the piecewise-constant objectives

enum class TermForm { Sign, Indicator };

struct CircleMax {
  double angle = 0.0;
  double value = 0.0;
  bool degenerate = false;  // objective constant on the circle
  std::int64_t arcs = 0;
};

// Exact maximizer over the unit circle of
//   f(theta) = sum_t weights[t] * g(vx[t] cos + vy[t] sin) [+ smooth(theta)].
// Breakpoints are the angles orthogonal to each term direction; the
// piecewise part is swept incrementally, near-maximal arcs are re-evaluated
// with exact_eval, and the midpoint of the winning arc is returned (ties:
// smallest left endpoint in [0, 2pi)).
CircleMax maximize_circle(std::span<const double> vx, std::span<const double> vy,
                          std::span<const double> weights, TermForm form,
                          const std::function<double(double)>& exact_eval,
                          const std::function<double(double)>* smooth = nullptr,
                          std::span<const double> extra_angle_probes = {});

struct IntervalMax {
  double arg = 0.0;
  double value = 0.0;
  bool constant = false;  // no breakpoint inside the interval
  std::int64_t intervals = 0;
};

struct Quad1D {
  double curvature = 0.0;  // adds 0.5 * curvature * (r - center)^2
  double center = 0.0;
};

// Exact maximizer over [lo, hi] of
//   f(r) = sum_t weights[t] * g(c[t] + r d[t]) [+ quad(r)].
// Breakpoints -c/d are enumerated, open intervals swept, candidates
// re-evaluated with exact_eval; ties resolved toward the smallest left
// endpoint.
IntervalMax maximize_piecewise_1d(std::span<const double> c, std::span<const double> d,
                                  std::span<const double> weights, TermForm form,
                                  double lo, double hi,
                                  const std::function<double(double)>& exact_eval,
                                  const Quad1D* quad = nullptr,
                                  std::span<const double> extra_probes = {});

struct SphereMax {
  std::vector<double> direction;
  double value = 0.0;
  std::int64_t probes = 0;
};

// Coarse-to-fine angular grid plus pattern-search refinement for K >= 3.
// Returns the best probed direction; the value is eval at that point.
SphereMax maximize_sphere_grid(int k, const std::function<double(std::span<const double>)>& eval,
                               const BetaGridConfig& grid,
                               std::span<const std::vector<double>> extra_probes = {});

// ---------------------------------------------------------------------------
// Two-step estimation

struct BetaEstimate {
  std::vector<double> beta;
  double q1_value = 0.0;
  bool degenerate = false;
  OptimizerTrace trace;
};

struct GammaEstimate {
  double gamma = 0.0;
  double q2_value = 0.0;
  bool constant = false;
  std::int64_t intervals = 0;
};

// Maximizes the direction objective over the unit sphere. K=2 is solved
// exactly by breakpoint enumeration; K>=3 by hierarchical grids. Throws
// NoSwitchers when the sample carries no identifying variation.
BetaEstimate estimate_beta(const PanelDataset& data, const EstimationConfig& cfg);

// Exact one-dimensional maximization of the kernel-weighted objective over
// the configured interval.
GammaEstimate estimate_gamma(const PanelDataset& data, std::span<const double> beta_hat,
                             const EstimationConfig& cfg);

EstimateResult estimate(const PanelDataset& data, const EstimationConfig& cfg);

}  // namespace dynpanel
