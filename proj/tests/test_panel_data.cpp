#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "dynpanel/dgp.hpp"
#include "dynpanel/errors.hpp"
#include "dynpanel/panel_data.hpp"
#include "dynpanel/rng.hpp"

using namespace dynpanel;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/dynpanel_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

PanelDataset from_y_pattern(const std::vector<std::vector<int>>& patterns) {
  PanelDataset data(static_cast<std::int64_t>(patterns.size()), 4, 2);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    for (int t = 0; t <= 4; ++t) data.set_y(static_cast<std::int64_t>(i), t, patterns[i][t]);
    for (int t = 1; t <= 4; ++t) {
      auto x = data.x_mut(static_cast<std::int64_t>(i), t);
      x[0] = 0.1 * t + 0.01 * static_cast<double>(i);
      x[1] = -0.2 * t;
    }
  }
  return data;
}

}  // namespace

TEST_CASE("csv load: well-formed two-individual file") {
  const std::string path = temp_path("ok.csv");
  write_file(path,
             "id,t,y,x1,x2\n"
             "7,0,1,,\n"
             "7,1,0,0.5,-1.25\n"
             "7,2,1,0.25,0.75\n"
             "7,3,1,1.5,2.5\n"
             "7,4,0,-0.5,0.125\n"
             "9,0,0,,\n"
             "9,1,1,0.1,0.2\n"
             "9,2,0,0.3,0.4\n"
             "9,3,1,0.5,0.6\n"
             "9,4,0,0.7,0.8\n");
  const PanelDataset data = load_csv(path);
  CHECK(data.n() == 2);
  CHECK(data.t_max() == 4);
  CHECK(data.k() == 2);
  CHECK(data.y(0, 0) == 1);
  CHECK(data.y(1, 4) == 0);
  CHECK(data.x(0, 1)[1] == -1.25);
  CHECK(data.x(1, 4)[0] == 0.7);
}

TEST_CASE("csv load: initial-period regressors may be present, are discarded") {
  const std::string path = temp_path("t0x.csv");
  write_file(path,
             "id,t,y,x1\n"
             "1,0,1,99.0\n"
             "1,1,0,0.5\n"
             "1,2,1,0.25\n"
             "1,3,1,1.5\n"
             "1,4,0,-0.5\n");
  const PanelDataset data = load_csv(path);
  CHECK(data.n() == 1);
  CHECK(data.k() == 1);
  CHECK(data.x(0, 1)[0] == 0.5);
}

TEST_CASE("csv load: non-binary outcome is rejected") {
  const std::string path = temp_path("bady.csv");
  write_file(path,
             "id,t,y,x1\n"
             "7,0,1,\n"
             "7,1,0,0.5\n"
             "7,2,1,0.25\n"
             "7,3,2,1.5\n"
             "7,4,0,-0.5\n");
  try {
    load_csv(path);
    FAIL("expected NonBinaryOutcome");
  } catch (const Error& e) {
    CHECK(e.code() == "NonBinaryOutcome");
  }
}

TEST_CASE("csv load: ragged panel is rejected") {
  const std::string path = temp_path("ragged.csv");
  write_file(path,
             "id,t,y,x1\n"
             "1,0,1,\n"
             "1,1,0,0.5\n"
             "1,2,1,0.25\n"
             "1,3,1,1.5\n"
             "1,4,0,-0.5\n"
             "2,0,1,\n"
             "2,1,0,0.5\n"
             "2,2,1,0.25\n"
             "2,3,1,1.5\n");
  try {
    load_csv(path);
    FAIL("expected RaggedPanel");
  } catch (const Error& e) {
    CHECK(e.code() == "RaggedPanel");
    CHECK(e.kind() == Error::Kind::Data);
  }
}

TEST_CASE("csv load: missing interior period is rejected") {
  const std::string path = temp_path("gap.csv");
  write_file(path,
             "id,t,y,x1\n"
             "1,0,1,\n"
             "1,1,0,0.5\n"
             "1,3,1,1.5\n"
             "1,4,0,-0.5\n");
  try {
    load_csv(path);
    FAIL("expected MissingPeriod");
  } catch (const Error& e) {
    CHECK(e.code() == "MissingPeriod");
  }
}

TEST_CASE("csv load: malformed numbers are rejected") {
  const std::string path = temp_path("garbage.csv");
  write_file(path,
             "id,t,y,x1\n"
             "1,0,1,\n"
             "1,1,0,abc\n"
             "1,2,1,0.25\n"
             "1,3,1,1.5\n"
             "1,4,0,-0.5\n");
  try {
    load_csv(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == "ParseError");
  }
}

TEST_CASE("csv round trip is the identity on simulated data") {
  auto [data, truth] = simulate(DgpSpec::design(1), 200, 71);
  const std::string path = temp_path("roundtrip.csv");
  save_csv(data, path);
  const PanelDataset back = load_csv(path);
  REQUIRE(back.n() == data.n());
  REQUIRE(back.t_max() == data.t_max());
  REQUIRE(back.k() == data.k());
  for (std::int64_t i = 0; i < data.n(); ++i) {
    for (int t = 0; t <= data.t_max(); ++t) CHECK(back.y(i, t) == data.y(i, t));
    for (int t = 1; t <= data.t_max(); ++t) {
      for (int j = 0; j < data.k(); ++j) {
        // 17 significant digits round-trip doubles exactly
        CHECK(back.x(i, t)[j] == data.x(i, t)[j]);
      }
    }
  }
}

TEST_CASE("switcher counts: membership rules") {
  SUBCASE("constant outcome paths have no switchers") {
    const auto counts = switcher_counts(from_y_pattern({{1, 1, 1, 1, 1}, {0, 0, 0, 0, 0}}));
    CHECK(counts.beta_effective == 0);
    CHECK(counts.gamma_effective == 0);
  }
  SUBCASE("alternating path: state-dependence switcher only") {
    // y = (1,0,1,0,1): y0=y2=y4 holds but y1 = y3, so the direction rule
    // fails; {y1!=y2, y0!=y3} holds.
    const auto counts = switcher_counts(from_y_pattern({{1, 0, 1, 0, 1}}));
    CHECK(counts.beta_effective == 0);
    CHECK(counts.gamma_effective == 1);
  }
  SUBCASE("direction switcher without state-dependence variation") {
    // y = (1,0,1,1,1): y0=y2=y4 and y1 != y3; neither gamma pattern holds.
    const auto counts = switcher_counts(from_y_pattern({{1, 0, 1, 1, 1}}));
    CHECK(counts.beta_effective == 1);
    CHECK(counts.gamma_effective == 0);
  }
  SUBCASE("second gamma pattern") {
    // y = (0,0,1,0,1): y2!=y3 and y1!=y4.
    const auto counts = switcher_counts(from_y_pattern({{0, 0, 1, 0, 1}}));
    CHECK(counts.beta_effective == 0);
    CHECK(counts.gamma_effective == 1);
  }
}

TEST_CASE("switcher counts: invariant under permutation of individuals") {
  auto [data, truth] = simulate(DgpSpec::design(1), 300, 5);
  const auto base = switcher_counts(data);
  std::vector<std::int64_t> order(data.n());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(17, 0);
  for (std::int64_t i = data.n() - 1; i > 0; --i)
    std::swap(order[i], order[rng.next_below(static_cast<std::uint64_t>(i + 1))]);
  const auto permuted = switcher_counts(data.permuted(order));
  CHECK(permuted.beta_effective == base.beta_effective);
  CHECK(permuted.gamma_effective == base.gamma_effective);
}

TEST_CASE("switcher counts require five periods") {
  PanelDataset data(2, 3, 1);
  CHECK_THROWS_AS(switcher_counts(data), Error);
}

TEST_CASE("model params validation") {
  ModelParams good{{0.6, 0.8}, -0.5};
  CHECK_NOTHROW(good.validate(-3.0, 3.0));
  ModelParams off_sphere{{0.6, 0.9}, -0.5};
  CHECK_THROWS_AS(off_sphere.validate(-3.0, 3.0), Error);
  ModelParams out_of_bounds{{0.6, 0.8}, -5.0};
  CHECK_THROWS_AS(out_of_bounds.validate(-3.0, 3.0), Error);
}
