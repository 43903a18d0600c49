#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dynpanel {

// Balanced binary-outcome panel: outcomes y_{it} for t = 0..T and regressor
// rows x_{it} (K reals) for t = 1..T. The model carries no regressors for the
// initial period, so none are stored. Treat instances as immutable once
// filled; const access is safe to share across threads.
class PanelDataset {
 public:
  PanelDataset(std::int64_t n, int t_max, int k);

  std::int64_t n() const noexcept { return n_; }
  int t_max() const noexcept { return t_max_; }
  int k() const noexcept { return k_; }

  // t in [0, t_max]
  int y(std::int64_t i, int t) const { return y_[i * (t_max_ + 1) + t]; }
  void set_y(std::int64_t i, int t, int value) {
    y_[i * (t_max_ + 1) + t] = static_cast<std::uint8_t>(value);
  }

  // t in [1, t_max]
  std::span<const double> x(std::int64_t i, int t) const {
    return {x_.data() + (i * t_max_ + (t - 1)) * k_, static_cast<std::size_t>(k_)};
  }
  std::span<double> x_mut(std::int64_t i, int t) {
    return {x_.data() + (i * t_max_ + (t - 1)) * k_, static_cast<std::size_t>(k_)};
  }

  // (x_{it} - x_{is})' b for t, s in [1, t_max]
  double index_diff(std::int64_t i, int t, int s, std::span<const double> b) const;

  // Throws Error on any violated invariant (binary outcomes, finite
  // regressors, admissible shape).
  void validate() const;

  // Reorders individuals; used by permutation-invariance checks.
  PanelDataset permuted(std::span<const std::int64_t> order) const;

 private:
  std::int64_t n_;
  int t_max_;
  int k_;
  std::vector<std::uint8_t> y_;
  std::vector<double> x_;
};

struct SwitcherCounts {
  std::int64_t beta_effective = 0;
  std::int64_t gamma_effective = 0;
};

// Counts individuals carrying identifying variation in the first five periods:
// {y0=y2=y4 and y1!=y3} for the direction step, {y1!=y2 and y0!=y3} or
// {y2!=y3 and y1!=y4} for the state-dependence step.
SwitcherCounts switcher_counts(const PanelDataset& data);

// Long-format CSV with header `id,t,y,x1,...,xK`; one row per (id, t) for
// t = 0..T. Regressor cells at t=0 may be blank and are discarded either way.
PanelDataset load_csv(const std::string& path);
void save_csv(const PanelDataset& data, const std::string& path);

// Preference parameters: unit-norm direction plus state-dependence scalar.
struct ModelParams {
  std::vector<double> beta;
  double gamma = 0.0;

  // Checks ||beta|| = 1 within 1e-12 and gamma within [lo, hi].
  void validate(double gamma_lo, double gamma_hi) const;
};

}  // namespace dynpanel
