#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynpanel/dgp.hpp"
#include "dynpanel/errors.hpp"
#include "dynpanel/rng.hpp"

using namespace dynpanel;

namespace {

bool datasets_equal(const PanelDataset& a, const PanelDataset& b) {
  if (a.n() != b.n() || a.t_max() != b.t_max() || a.k() != b.k()) return false;
  for (std::int64_t i = 0; i < a.n(); ++i) {
    for (int t = 0; t <= a.t_max(); ++t)
      if (a.y(i, t) != b.y(i, t)) return false;
    for (int t = 1; t <= a.t_max(); ++t)
      for (int j = 0; j < a.k(); ++j)
        if (a.x(i, t)[j] != b.x(i, t)[j]) return false;
  }
  return true;
}

// Pooled lag-1 autocorrelation of one regressor column over stored periods.
double lag1_autocorr(const PanelDataset& data, int col) {
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < data.n(); ++i) {
    for (int t = 2; t <= data.t_max(); ++t) {
      const double a = data.x(i, t - 1)[col];
      const double b = data.x(i, t)[col];
      sx += a; sy += b; sxy += a * b; sxx += a * a; syy += b * b;
      ++count;
    }
  }
  const double nd = static_cast<double>(count);
  const double cov = sxy / nd - (sx / nd) * (sy / nd);
  const double va = sxx / nd - (sx / nd) * (sx / nd);
  const double vb = syy / nd - (sy / nd) * (sy / nd);
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("design presets normalize to the stated true values") {
  const auto t1 = true_params(DgpSpec::design(1));
  CHECK(t1.beta_normalized[0] == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(t1.beta_normalized[1] == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(t1.gamma_normalized == doctest::Approx(-0.7071067811865476).epsilon(1e-12));

  const auto t3 = true_params(DgpSpec::design(3));
  for (double b : t3.beta_normalized)
    CHECK(b == doctest::Approx(0.5773502691896257).epsilon(1e-12));
  CHECK(t3.gamma_normalized == doctest::Approx(-0.5773502691896257).epsilon(1e-12));

  double norm = 0.0;
  for (double b : t3.beta_normalized) norm += b * b;
  CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-12);
}

TEST_CASE("simulation moments: standard normal regressors, non-degenerate outcomes") {
  auto [data, truth] = simulate(DgpSpec::design(1), 100000, 42, 2);
  for (int col = 0; col < 2; ++col) {
    double s = 0, ss = 0;
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < data.n(); ++i) {
      for (int t = 1; t <= 4; ++t) {
        const double v = data.x(i, t)[col];
        s += v; ss += v * v;
        ++count;
      }
    }
    const double mean = s / count;
    const double var = ss / count - mean * mean;
    CHECK(var >= 0.98);
    CHECK(var <= 1.02);
  }
  double ysum = 0;
  for (std::int64_t i = 0; i < data.n(); ++i)
    for (int t = 1; t <= 4; ++t) ysum += data.y(i, t);
  const double ymean = ysum / (4.0 * data.n());
  CHECK(ymean >= 0.3);
  CHECK(ymean <= 0.7);
}

TEST_CASE("simulation is bit-reproducible and worker-count independent") {
  const DgpSpec spec = DgpSpec::design(1);
  auto [a, ta] = simulate(spec, 5000, 123, 1);
  auto [b, tb] = simulate(spec, 5000, 123, 1);
  auto [c, tc] = simulate(spec, 5000, 123, 4);
  CHECK(datasets_equal(a, b));
  CHECK(datasets_equal(a, c));
  auto [d, td] = simulate(spec, 5000, 124, 1);
  CHECK_FALSE(datasets_equal(a, d));
}

TEST_CASE("regressor serial dependence matches the design") {
  auto [d1, t1] = simulate(DgpSpec::design(1), 60000, 7, 2);
  CHECK(std::abs(lag1_autocorr(d1, 1)) <= 0.02);
  auto [d2, t2] = simulate(DgpSpec::design(2), 60000, 7, 2);
  CHECK(std::abs(lag1_autocorr(d2, 1) - 0.5) <= 0.02);
  // first column stays serially independent in both designs
  CHECK(std::abs(lag1_autocorr(d2, 0)) <= 0.02);
}

TEST_CASE("logistic error draws have unit variance") {
  CounterRng rng(99, 0);
  const std::int64_t n = 1000000;
  double s = 0, ss = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double e = rng.next_unit_variance_logistic();
    s += e;
    ss += e * e;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  CHECK(var >= 0.98);
  CHECK(var <= 1.02);
  CHECK(std::abs(mean) <= 0.01);
}

TEST_CASE("switcher shares match the benchmark design") {
  auto [data, truth] = simulate(DgpSpec::design(1), 100000, 2024, 2);
  const auto counts = switcher_counts(data);
  const double beta_share = static_cast<double>(counts.beta_effective) / data.n();
  const double gamma_share = static_cast<double>(counts.gamma_effective) / data.n();
  CHECK(beta_share >= 0.12);
  CHECK(beta_share <= 0.16);
  CHECK(gamma_share >= 0.36);
  CHECK(gamma_share <= 0.42);
}

TEST_CASE("invalid specifications are rejected") {
  DgpSpec bad_rho = DgpSpec::design(2);
  bad_rho.ar_coefficient = 1.0;
  CHECK_THROWS_AS(simulate(bad_rho, 10, 1), Error);

  DgpSpec zero_beta;
  zero_beta.beta_raw = {0.0, 0.0};
  CHECK_THROWS_AS(simulate(zero_beta, 10, 1), Error);

  CHECK_THROWS_AS(DgpSpec::design(4), Error);
  CHECK_THROWS_AS(simulate(DgpSpec::design(1), 0, 1), Error);
}

TEST_CASE("longer panels simulate and validate") {
  DgpSpec spec = DgpSpec::design(1);
  spec.t_max = 7;
  auto [data, truth] = simulate(spec, 50, 3);
  CHECK(data.t_max() == 7);
  CHECK_NOTHROW(data.validate());
}
