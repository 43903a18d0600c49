#include "dynpanel/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "dynpanel/errors.hpp"
#include "dynpanel/parallel.hpp"
#include "dynpanel/rng.hpp"

namespace dynpanel {

void McPlan::validate() const {
  design.validate();
  estimation.validate();
  if (n < 3) throw Error::data("InvalidConfig", "n must be >= 3");
  if (replications < 1) throw Error::data("InvalidConfig", "replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error::data("InvalidConfig", "alpha must lie in (0, 1)");
  if (!bootstrap_methods.empty()) {
    if (b_draws < 2) throw Error::data("InvalidConfig", "b_draws must be >= 2");
    if (c_sweep.empty()) throw Error::data("InvalidConfig", "c_sweep must not be empty");
    for (double c : c_sweep)
      if (!(c > 0.0)) throw Error::data("InvalidConfig", "tuning constants must be positive");
  }
}

const char* method_name(BootstrapMethod m) {
  switch (m) {
    case BootstrapMethod::Numerical: return "numerical";
    case BootstrapMethod::ModifiedObjective: return "modified";
    case BootstrapMethod::MOutOfN: return "mn";
    case BootstrapMethod::Classic: return "classic";
  }
  return "?";
}

BootstrapMethod parse_method(const std::string& name) {
  if (name == "numerical") return BootstrapMethod::Numerical;
  if (name == "modified") return BootstrapMethod::ModifiedObjective;
  if (name == "mn") return BootstrapMethod::MOutOfN;
  if (name == "classic") return BootstrapMethod::Classic;
  throw Error::data("InvalidConfig", "unknown bootstrap method '" + name +
                                         "' (expected numerical|modified|mn|classic)");
}

namespace {

struct CellKey {
  std::size_t method_idx;
  std::size_t c_idx;
};

struct RepOutcome {
  bool ok = false;
  std::vector<double> estimates;               // free coords + gamma
  std::vector<std::uint8_t> covered;           // per (method, c, param)
  std::vector<double> lengths;                 // per (method, c, param)
};

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

McSummary run_monte_carlo(const McPlan& plan) {
  plan.validate();
  const int R = plan.replications;
  const int K = plan.design.k();
  const TrueParams truth = true_params(plan.design);

  // Reported coordinates: the scale normalization pins one direction degree of
  // freedom, so coordinates 2..K are reported along with gamma.
  std::vector<int> free_coords;
  for (int j = 1; j < K; ++j) free_coords.push_back(j);
  const std::size_t n_params = free_coords.size() + 1;

  std::vector<std::string> param_names;
  std::vector<double> param_truth;
  for (int j : free_coords) {
    param_names.push_back("beta" + std::to_string(j + 1));
    param_truth.push_back(truth.beta_normalized[j]);
  }
  param_names.emplace_back("gamma");
  param_truth.push_back(truth.gamma_normalized);

  const std::size_t n_cells = plan.bootstrap_methods.size() * plan.c_sweep.size();

  std::vector<RepOutcome> outcomes(R);
  parallel_for(R, plan.workers, [&](std::int64_t r) {
    RepOutcome& out = outcomes[r];
    const std::uint64_t rep_seed = derive_seed(plan.seed, static_cast<std::uint64_t>(r));
    try {
      auto [data, tp] = simulate(plan.design, plan.n, derive_seed(rep_seed, 1));
      const EstimateResult est = estimate(data, plan.estimation);

      out.estimates.reserve(n_params);
      for (int j : free_coords) out.estimates.push_back(est.params.beta[j]);
      out.estimates.push_back(est.params.gamma);

      out.covered.assign(n_cells * n_params, 0);
      out.lengths.assign(n_cells * n_params, 0.0);
      std::size_t cell = 0;
      for (std::size_t mi = 0; mi < plan.bootstrap_methods.size(); ++mi) {
        for (std::size_t ci = 0; ci < plan.c_sweep.size(); ++ci, ++cell) {
          BootstrapConfig bcfg;
          bcfg.method = plan.bootstrap_methods[mi];
          bcfg.b_draws = plan.b_draws;
          bcfg.c = plan.c_sweep[ci];
          bcfg.alpha = plan.alpha;
          bcfg.seed = derive_seed(rep_seed, 2);  // draws shared across methods and c
          bcfg.workers = 1;
          const BootstrapResult bres = run_bootstrap(data, est, bcfg);
          for (std::size_t p = 0; p < n_params; ++p) {
            double lo, hi, tv;
            if (p < free_coords.size()) {
              lo = bres.beta_lower[free_coords[p]];
              hi = bres.beta_upper[free_coords[p]];
              tv = truth.beta_normalized[free_coords[p]];
            } else {
              lo = bres.gamma_lower;
              hi = bres.gamma_upper;
              tv = truth.gamma_normalized;
            }
            out.covered[cell * n_params + p] = (tv >= lo && tv <= hi) ? 1 : 0;
            out.lengths[cell * n_params + p] = hi - lo;
          }
        }
      }
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  });

  McSummary summary;
  summary.design = plan.design.design_id;
  summary.n = plan.n;
  summary.replications_requested = R;
  summary.truth = truth;

  std::vector<const RepOutcome*> good;
  good.reserve(R);
  for (const auto& o : outcomes)
    if (o.ok) good.push_back(&o);
  summary.replications_completed = static_cast<int>(good.size());
  summary.failures = R - summary.replications_completed;
  if (summary.failures * 20 > R)
    throw Error::numerical("TooManyFailures",
                           std::to_string(summary.failures) + " of " + std::to_string(R) +
                               " replications failed (more than 5%)");
  if (good.empty())
    throw Error::numerical("TooManyFailures", "no replication completed");

  const double Rd = static_cast<double>(good.size());
  for (std::size_t p = 0; p < n_params; ++p) {
    std::vector<double> est(good.size()), dev(good.size()), sq(good.size());
    for (std::size_t r = 0; r < good.size(); ++r) {
      est[r] = good[r]->estimates[p];
      const double d = est[r] - param_truth[p];
      sq[r] = d * d;
    }
    ParamStats ps;
    ps.param = param_names[p];
    ps.truth = param_truth[p];
    ps.mean = pairwise_sum(est) / Rd;
    ps.bias = ps.mean - param_truth[p];
    const double center = plan.mad_about_truth ? param_truth[p] : median_of(est);
    for (std::size_t r = 0; r < good.size(); ++r) dev[r] = std::abs(est[r] - center);
    ps.mad = median_of(dev);
    ps.rmse = std::sqrt(pairwise_sum(sq) / Rd);
    summary.params.push_back(std::move(ps));
  }

  std::size_t cell = 0;
  for (std::size_t mi = 0; mi < plan.bootstrap_methods.size(); ++mi) {
    for (std::size_t ci = 0; ci < plan.c_sweep.size(); ++ci, ++cell) {
      for (std::size_t p = 0; p < n_params; ++p) {
        std::vector<double> cov(good.size()), len(good.size());
        for (std::size_t r = 0; r < good.size(); ++r) {
          cov[r] = good[r]->covered[cell * n_params + p];
          len[r] = good[r]->lengths[cell * n_params + p];
        }
        CoverageStats cs;
        cs.method = plan.bootstrap_methods[mi];
        cs.c = plan.c_sweep[ci];
        cs.param = param_names[p];
        cs.coverage = pairwise_sum(cov) / Rd;
        cs.length = pairwise_sum(len) / Rd;
        summary.inference.push_back(std::move(cs));
      }
    }
  }

  return summary;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string text_table(std::span<const McSummary> summaries) {
  std::ostringstream os;
  const auto& first = summaries.front();
  const std::size_t n_params = first.params.size();
  constexpr std::size_t w = 10;

  os << "Point estimation\n";
  os << pad("", 10);
  for (const auto& s : summaries)
    for (std::size_t p = 0; p < n_params; ++p)
      os << pad(s.params[p].param + "(n=" + std::to_string(s.n) + ")", 18);
  os << "\n";
  const char* stats[4] = {"MEAN", "BIAS", "MAD", "RMSE"};
  for (int row = 0; row < 4; ++row) {
    os << pad(stats[row], 10);
    for (const auto& s : summaries) {
      for (std::size_t p = 0; p < n_params; ++p) {
        const ParamStats& ps = s.params[p];
        const double v = row == 0 ? ps.mean : row == 1 ? ps.bias : row == 2 ? ps.mad : ps.rmse;
        os << pad(fmt(v), 18);
      }
    }
    os << "\n";
  }

  if (!first.inference.empty()) {
    // group rows by (method, c); columns mirror the point-estimation block
    std::vector<std::pair<BootstrapMethod, double>> cells;
    for (const auto& cs : first.inference) {
      if (cells.empty() || cells.back().first != cs.method || cells.back().second != cs.c)
        cells.emplace_back(cs.method, cs.c);
    }
    for (const auto& [method, c] : cells) {
      os << "\n" << method_name(method) << " bootstrap, c=" << fmt(c) << "\n";
      for (const char* stat : {"COVERAGE", "LENGTH"}) {
        os << pad(stat, 10);
        for (const auto& s : summaries) {
          for (std::size_t p = 0; p < n_params; ++p) {
            for (const auto& cs : s.inference) {
              if (cs.method == method && cs.c == c && cs.param == s.params[p].param) {
                os << pad(fmt(std::string(stat) == "COVERAGE" ? cs.coverage : cs.length), w + 8);
                break;
              }
            }
          }
        }
        os << "\n";
      }
    }
  }
  return os.str();
}

std::string csv_table(std::span<const McSummary> summaries) {
  std::ostringstream os;
  os << "section,n,method,c,param,stat,value\n";
  for (const auto& s : summaries) {
    for (const auto& ps : s.params) {
      os << "point," << s.n << ",,," << ps.param << ",MEAN," << fmt_full(ps.mean) << "\n";
      os << "point," << s.n << ",,," << ps.param << ",BIAS," << fmt_full(ps.bias) << "\n";
      os << "point," << s.n << ",,," << ps.param << ",MAD," << fmt_full(ps.mad) << "\n";
      os << "point," << s.n << ",,," << ps.param << ",RMSE," << fmt_full(ps.rmse) << "\n";
    }
    for (const auto& cs : s.inference) {
      os << "inference," << s.n << "," << method_name(cs.method) << "," << fmt_full(cs.c) << ","
         << cs.param << ",COVERAGE," << fmt_full(cs.coverage) << "\n";
      os << "inference," << s.n << "," << method_name(cs.method) << "," << fmt_full(cs.c) << ","
         << cs.param << ",LENGTH," << fmt_full(cs.length) << "\n";
    }
  }
  return os.str();
}

nlohmann::json summary_json(const McSummary& s) {
  nlohmann::json j;
  j["n"] = s.n;
  j["replications_requested"] = s.replications_requested;
  j["replications_completed"] = s.replications_completed;
  j["failures"] = s.failures;
  j["truth"] = {{"beta", s.truth.beta_normalized}, {"gamma", s.truth.gamma_normalized}};
  j["point"] = nlohmann::json::array();
  for (const auto& ps : s.params) {
    j["point"].push_back({{"param", ps.param},
                          {"truth", ps.truth},
                          {"MEAN", ps.mean},
                          {"BIAS", ps.bias},
                          {"MAD", ps.mad},
                          {"RMSE", ps.rmse}});
  }
  j["inference"] = nlohmann::json::array();
  for (const auto& cs : s.inference) {
    j["inference"].push_back({{"method", method_name(cs.method)},
                              {"c", cs.c},
                              {"param", cs.param},
                              {"COVERAGE", cs.coverage},
                              {"LENGTH", cs.length}});
  }
  return j;
}

}  // namespace

std::string emit_table(std::span<const McSummary> summaries, TableFormat format) {
  if (summaries.empty()) throw Error::data("InvalidConfig", "nothing to render");
  switch (format) {
    case TableFormat::Text: return text_table(summaries);
    case TableFormat::Csv: return csv_table(summaries);
    case TableFormat::Json: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : summaries) arr.push_back(summary_json(s));
      return arr.dump(2) + "\n";
    }
  }
  throw Error::data("InvalidConfig", "unknown table format");
}

std::string emit_table(const McSummary& summary, TableFormat format) {
  return emit_table(std::span<const McSummary>(&summary, 1), format);
}

}  // namespace dynpanel
