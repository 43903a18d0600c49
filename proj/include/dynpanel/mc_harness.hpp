#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynpanel/dgp.hpp"
#include "dynpanel/estimator.hpp"
#include "dynpanel/inference.hpp"

namespace dynpanel {

// One replicated experiment: simulate, estimate and (optionally) run the
// configured bootstrap methods over every tuning constant in c_sweep.
struct McPlan {
  DgpSpec design;
  std::int64_t n = 5000;
  int replications = 1000;
  EstimationConfig estimation;
  std::vector<BootstrapMethod> bootstrap_methods;  // empty: point estimation only
  std::vector<double> c_sweep = {1.0};
  int b_draws = 199;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: all available cores
  // Median absolute deviation is taken around the true value by default; set
  // false to center it at the replication median instead.
  bool mad_about_truth = true;

  void validate() const;
};

struct ParamStats {
  std::string param;  // "beta2", "beta3", ..., "gamma"
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double mad = 0.0;
  double rmse = 0.0;
};

struct CoverageStats {
  BootstrapMethod method;
  double c = 1.0;
  std::string param;
  double coverage = 0.0;
  double length = 0.0;
};

struct McSummary {
  DesignId design = DesignId::Custom;
  std::int64_t n = 0;
  int replications_requested = 0;
  int replications_completed = 0;
  int failures = 0;
  TrueParams truth;
  std::vector<ParamStats> params;       // free direction coordinates, then gamma
  std::vector<CoverageStats> inference; // empty when no bootstrap configured
};

McSummary run_monte_carlo(const McPlan& plan);

enum class TableFormat { Text, Csv, Json };

// Renders one or more summaries (same design, increasing n) side by side in
// the usual report layout: MEAN/BIAS/MAD/RMSE rows for point estimation and
// COVERAGE/LENGTH blocks per (method, c).
std::string emit_table(std::span<const McSummary> summaries, TableFormat format);
std::string emit_table(const McSummary& summary, TableFormat format);

const char* method_name(BootstrapMethod m);
BootstrapMethod parse_method(const std::string& name);

}  // namespace dynpanel
