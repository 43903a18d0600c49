#include "dynpanel/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dynpanel/errors.hpp"
#include "dynpanel/parallel.hpp"

namespace dynpanel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sgn(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }
double ind(double a) { return a > 0.0 ? 1.0 : 0.0; }

// Enumerates the direction-step comparison pairs (s, t) for one individual:
// f(s, t, w) with w = y_t - y_s != 0 and matched neighbours.
template <typename F>
void visit_beta_pairs(const PanelDataset& data, std::int64_t i, ObjectiveVariant variant,
                      F&& f) {
  const int T = data.t_max();
  if (variant == ObjectiveVariant::GeneralT) {
    for (int s = 1; s + 2 <= T - 1; ++s) {
      for (int t = s + 2; t <= T - 1; ++t) {
        if (data.y(i, s - 1) != data.y(i, t - 1)) continue;
        if (data.y(i, s + 1) != data.y(i, t + 1)) continue;
        const int w = data.y(i, t) - data.y(i, s);
        if (w != 0) f(s, t, w);
      }
    }
    return;
  }
  // First-five-periods form: compare periods 1 and 3 with y0 = y2 = y4.
  if (data.y(i, 0) == data.y(i, 2) && data.y(i, 2) == data.y(i, 4)) {
    const int w = data.y(i, 3) - data.y(i, 1);
    if (w != 0) f(1, 3, w);
  }
}

// Enumerates the state-dependence comparison terms for one individual:
// f(kt1, kt0, w, ct1, ct0, d) contributing
//   K_h((x_{kt1}-x_{kt0})'b) * w * g((x_{ct1}-x_{ct0})'b + r*d).
// Terms with w = 0 are skipped.
template <typename F>
void visit_gamma_terms(const PanelDataset& data, std::int64_t i, ObjectiveVariant variant,
                       F&& f) {
  const int T = data.t_max();
  const bool general = variant == ObjectiveVariant::GeneralT;
  const int adj_hi = general ? T - 1 : std::min(T - 1, 3);
  for (int t = 2; t <= adj_hi; ++t) {
    const int w = data.y(i, t) - data.y(i, t - 1);
    if (w == 0) continue;
    f(t + 1, t, w, t, t - 1, data.y(i, t + 1) - data.y(i, t - 2));
  }
  if (variant == ObjectiveVariant::AdjacentOnly) return;
  const int s_hi = general ? T - 3 : std::min(T - 3, 1);
  for (int s = 1; s <= s_hi; ++s) {
    const int t_hi = general ? T - 1 : std::min(T - 1, 3);
    for (int t = s + 2; t <= t_hi; ++t) {
      if (data.y(i, s + 1) != data.y(i, t + 1)) continue;
      const int w = data.y(i, t) - data.y(i, s);
      if (w == 0) continue;
      f(t + 1, s + 1, w, t, s, data.y(i, t - 1) - data.y(i, s - 1));
    }
  }
}

void require_estimable(const PanelDataset& data) {
  if (data.t_max() < 4)
    throw Error::data("PanelTooShort", "estimation requires t_max >= 4");
}

}  // namespace

// ---------------------------------------------------------------------------

double EstimationConfig::bandwidth(std::int64_t n) const {
  if (bandwidth_override) return *bandwidth_override;
  return dynpanel::bandwidth(n);
}

void EstimationConfig::validate() const {
  if (bandwidth_override && !(*bandwidth_override > 0.0))
    throw Error::data("InvalidConfig", "bandwidth must be positive");
  if (!(gamma_lo < gamma_hi))
    throw Error::data("InvalidConfig", "gamma bounds must satisfy lo < hi");
  if (beta_grid.points_per_level < 8)
    throw Error::data("InvalidConfig", "grid resolution must be >= 8");
  if (beta_grid.levels < 1)
    throw Error::data("InvalidConfig", "grid levels must be >= 1");
}

double epanechnikov(double u) {
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

double kernel_weight(double v, double h) { return epanechnikov(v / h) / h; }

double bandwidth(std::int64_t n) {
  if (n < 3) throw Error::data("InvalidConfig", "bandwidth rule requires n >= 3");
  const double nd = static_cast<double>(n);
  return std::pow(nd, -0.25) / std::log(nd);
}

// ---------------------------------------------------------------------------

double q1_objective(const PanelDataset& data, std::span<const double> b,
                    ObjectiveVariant variant) {
  require_estimable(data);
  std::vector<double> contrib(data.n(), 0.0);
  for (std::int64_t i = 0; i < data.n(); ++i) {
    double acc = 0.0;
    visit_beta_pairs(data, i, variant, [&](int s, int t, int w) {
      acc += w * sgn(data.index_diff(i, t, s, b));
    });
    contrib[i] = acc;
  }
  return pairwise_sum(contrib) / static_cast<double>(data.n());
}

double q2_kernel_objective(const PanelDataset& data, double r, std::span<const double> b,
                           double h, ObjectiveVariant variant) {
  require_estimable(data);
  if (!(h > 0.0)) throw Error::data("InvalidConfig", "bandwidth must be positive");
  std::vector<double> contrib(data.n(), 0.0);
  for (std::int64_t i = 0; i < data.n(); ++i) {
    double acc = 0.0;
    visit_gamma_terms(data, i, variant, [&](int kt1, int kt0, int w, int ct1, int ct0, int d) {
      const double kw = kernel_weight(data.index_diff(i, kt1, kt0, b), h);
      if (kw == 0.0) return;
      acc += kw * w * sgn(data.index_diff(i, ct1, ct0, b) + r * d);
    });
    contrib[i] = acc;
  }
  return pairwise_sum(contrib) / static_cast<double>(data.n());
}

double xi(const PanelDataset& data, std::int64_t i, std::span<const double> b,
          ObjectiveVariant variant) {
  double acc = 0.0;
  visit_beta_pairs(data, i, variant, [&](int s, int t, int w) {
    acc += w * ind(data.index_diff(i, t, s, b));
  });
  return acc;
}

double varsigma(const PanelDataset& data, std::int64_t i, double r,
                std::span<const double> b, double h, ObjectiveVariant variant) {
  double acc = 0.0;
  visit_gamma_terms(data, i, variant, [&](int kt1, int kt0, int w, int ct1, int ct0, int d) {
    const double kw = kernel_weight(data.index_diff(i, kt1, kt0, b), h);
    if (kw == 0.0) return;
    acc += kw * w * ind(data.index_diff(i, ct1, ct0, b) + r * d);
  });
  return acc;
}

BetaTerms build_beta_terms(const PanelDataset& data, ObjectiveVariant variant) {
  require_estimable(data);
  BetaTerms terms;
  terms.k = data.k();
  for (std::int64_t i = 0; i < data.n(); ++i) {
    visit_beta_pairs(data, i, variant, [&](int s, int t, int w) {
      const auto xt = data.x(i, t);
      const auto xs = data.x(i, s);
      for (int j = 0; j < terms.k; ++j) terms.v.push_back(xt[j] - xs[j]);
      terms.w.push_back(static_cast<double>(w));
      terms.owner.push_back(i);
    });
  }
  return terms;
}

GammaTerms build_gamma_terms(const PanelDataset& data, std::span<const double> b,
                             double h, ObjectiveVariant variant) {
  require_estimable(data);
  if (!(h > 0.0)) throw Error::data("InvalidConfig", "bandwidth must be positive");
  GammaTerms terms;
  terms.h = h;
  for (std::int64_t i = 0; i < data.n(); ++i) {
    visit_gamma_terms(data, i, variant, [&](int kt1, int kt0, int w, int ct1, int ct0, int d) {
      const double kw = kernel_weight(data.index_diff(i, kt1, kt0, b), h);
      terms.weight.push_back(kw * w);
      terms.c.push_back(data.index_diff(i, ct1, ct0, b));
      terms.d.push_back(static_cast<double>(d));
      terms.owner.push_back(i);
      if (d != 0) {
        ++terms.switcher_terms;
        if (kw != 0.0) ++terms.active_terms;
      }
    });
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Exact maximizer over the unit circle

namespace {

struct SweepEvent {
  double pos;
  double jump;
};

double normalize_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Collapses equal positions; returns sorted unique positions and net jumps.
void collapse_events(std::vector<SweepEvent>& events, std::vector<double>& pos,
                     std::vector<double>& jump) {
  std::sort(events.begin(), events.end(),
            [](const SweepEvent& a, const SweepEvent& b) { return a.pos < b.pos; });
  for (const auto& e : events) {
    if (!pos.empty() && e.pos == pos.back()) {
      jump.back() += e.jump;
    } else {
      pos.push_back(e.pos);
      jump.push_back(e.jump);
    }
  }
}

}  // namespace

CircleMax maximize_circle(std::span<const double> vx, std::span<const double> vy,
                          std::span<const double> weights, TermForm form,
                          const std::function<double(double)>& exact_eval,
                          const std::function<double(double)>* smooth,
                          std::span<const double> extra_angle_probes) {
  const double jump_scale = form == TermForm::Sign ? 2.0 : 1.0;
  const std::size_t m = vx.size();

  std::vector<SweepEvent> events;
  events.reserve(2 * m);
  for (std::size_t t = 0; t < m; ++t) {
    if (weights[t] == 0.0) continue;
    if (vx[t] == 0.0 && vy[t] == 0.0) continue;
    const double phi = std::atan2(vy[t], vx[t]);
    const double j = jump_scale * weights[t];
    events.push_back({normalize_angle(phi - std::numbers::pi / 2.0), j});
    events.push_back({normalize_angle(phi + std::numbers::pi / 2.0), -j});
  }

  CircleMax out;
  auto probe_value = [&](double angle) {
    double v = exact_eval(angle);
    if (smooth) v += (*smooth)(angle);
    return v;
  };

  if (events.empty()) {
    out.degenerate = true;
    bool have = false;
    double best = 0.0, best_angle = 0.0;
    for (double a : extra_angle_probes) {
      const double v = probe_value(a);
      if (!have || v > best) best = v, best_angle = a, have = true;
    }
    for (double a : {0.0, 0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi}) {
      const double v = probe_value(a);
      if (!have || v > best) best = v, best_angle = a, have = true;
    }
    out.angle = normalize_angle(best_angle);
    out.value = best;
    return out;
  }

  std::vector<double> pos, jump;
  collapse_events(events, pos, jump);
  const std::size_t arcs = pos.size();
  out.arcs = static_cast<std::int64_t>(arcs);

  // Incremental piecewise values per arc; arc j spans (pos[j], pos[j+1]).
  auto piecewise_at = [&](double angle) {
    const double ct = std::cos(angle), st = std::sin(angle);
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      if (weights[t] == 0.0) continue;
      const double a = vx[t] * ct + vy[t] * st;
      acc += weights[t] * (form == TermForm::Sign ? sgn(a) : ind(a));
    }
    return acc;
  };

  auto arc_mid = [&](std::size_t j) {
    const double hi = j + 1 < arcs ? pos[j + 1] : pos[0] + kTwoPi;
    return normalize_angle(0.5 * (pos[j] + hi));
  };
  auto arc_width = [&](std::size_t j) {
    const double hi = j + 1 < arcs ? pos[j + 1] : pos[0] + kTwoPi;
    return hi - pos[j];
  };

  std::vector<double> value(arcs);
  value[0] = piecewise_at(arc_mid(0));
  double scale = std::abs(value[0]);
  for (std::size_t j = 1; j < arcs; ++j) {
    value[j] = value[j - 1] + jump[j];
    scale = std::max(scale, std::abs(value[j]));
  }

  // Rank arcs by sweep value (plus the smooth part at arc midpoints when
  // present), then settle near-maximal arcs with the exact evaluator.
  std::vector<double> score(arcs);
  double best_score = -1e300;
  for (std::size_t j = 0; j < arcs; ++j) {
    score[j] = smooth ? value[j] + (*smooth)(arc_mid(j)) : value[j];
    best_score = std::max(best_score, score[j]);
  }

  std::vector<std::size_t> candidates;
  const double margin = 1e-9 * std::max(1.0, scale);
  for (std::size_t j = 0; j < arcs; ++j)
    if (score[j] >= best_score - margin) candidates.push_back(j);
  if (smooth) {
    // Within-arc smooth variation can reshuffle near-by arcs; widen the
    // candidate set to the highest-scoring arcs and probe near their edges.
    std::vector<std::size_t> order(arcs);
    for (std::size_t j = 0; j < arcs; ++j) order[j] = j;
    const std::size_t keep = std::min<std::size_t>(arcs, 32);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return score[a] != score[b] ? score[a] > score[b] : a < b;
                      });
    candidates.insert(candidates.end(), order.begin(), order.begin() + keep);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  bool have = false;
  double best = 0.0, best_angle = 0.0;
  auto consider = [&](double angle) {
    const double v = probe_value(angle);
    if (!have || v > best) best = v, best_angle = angle, have = true;
  };
  for (std::size_t j : candidates) {
    consider(arc_mid(j));
    if (smooth) {
      const double w = arc_width(j);
      consider(normalize_angle(pos[j] + 1e-3 * w));
      consider(normalize_angle(pos[j] + w - 1e-3 * w));
    }
  }
  for (double a : extra_angle_probes) consider(a);

  out.angle = best_angle;
  out.value = best;
  return out;
}

// ---------------------------------------------------------------------------
// Exact maximizer over an interval

IntervalMax maximize_piecewise_1d(std::span<const double> c, std::span<const double> d,
                                  std::span<const double> weights, TermForm form,
                                  double lo, double hi,
                                  const std::function<double(double)>& exact_eval,
                                  const Quad1D* quad,
                                  std::span<const double> extra_probes) {
  if (!(lo < hi)) throw Error::data("InvalidConfig", "interval bounds must satisfy lo < hi");
  const double jump_scale = form == TermForm::Sign ? 2.0 : 1.0;
  const std::size_t m = c.size();

  std::vector<SweepEvent> events;
  for (std::size_t t = 0; t < m; ++t) {
    if (weights[t] == 0.0 || d[t] == 0.0) continue;
    const double bp = -c[t] / d[t];
    if (!(bp > lo && bp < hi)) continue;
    // crossing upward in r flips the argument sign along d's direction
    events.push_back({bp, jump_scale * weights[t] * (d[t] > 0.0 ? 1.0 : -1.0)});
  }

  IntervalMax out;
  auto probe_value = [&](double r) {
    double v = exact_eval(r);
    if (quad) v += 0.5 * quad->curvature * (r - quad->center) * (r - quad->center);
    return v;
  };

  if (events.empty()) {
    out.constant = true;
    bool have = false;
    double best = 0.0, best_r = 0.0;
    auto consider = [&](double r) {
      if (!(r >= lo && r <= hi)) return;
      const double v = probe_value(r);
      if (!have || v > best) best = v, best_r = r, have = true;
    };
    consider(0.5 * (lo + hi));
    if (quad) {
      consider(std::clamp(quad->center, lo, hi));
      consider(lo + 1e-9 * (hi - lo));
      consider(hi - 1e-9 * (hi - lo));
    }
    for (double r : extra_probes) consider(r);
    out.arg = best_r;
    out.value = best;
    out.intervals = 1;
    return out;
  }

  std::vector<double> pos, jump;
  collapse_events(events, pos, jump);
  const std::size_t nbp = pos.size();
  const std::size_t nintervals = nbp + 1;
  out.intervals = static_cast<std::int64_t>(nintervals);

  auto interval_lo = [&](std::size_t j) { return j == 0 ? lo : pos[j - 1]; };
  auto interval_hi = [&](std::size_t j) { return j == nbp ? hi : pos[j]; };
  auto interval_mid = [&](std::size_t j) { return 0.5 * (interval_lo(j) + interval_hi(j)); };

  auto piecewise_at = [&](double r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      if (weights[t] == 0.0) continue;
      const double a = c[t] + r * d[t];
      acc += weights[t] * (form == TermForm::Sign ? sgn(a) : ind(a));
    }
    return acc;
  };

  std::vector<double> value(nintervals);
  value[0] = piecewise_at(interval_mid(0));
  double scale = std::abs(value[0]);
  for (std::size_t j = 1; j < nintervals; ++j) {
    value[j] = value[j - 1] + jump[j - 1];
    scale = std::max(scale, std::abs(value[j]));
  }

  double best_sweep = -1e300;
  for (double v : value) best_sweep = std::max(best_sweep, v);
  const double margin = 1e-9 * std::max(1.0, scale);

  bool have = false;
  double best = 0.0, best_r = 0.0;
  auto consider = [&](double r) {
    if (!(r >= lo && r <= hi)) return;
    const double v = probe_value(r);
    if (!have || v > best) best = v, best_r = r, have = true;
  };

  if (quad) {
    // The quadratic part makes within-interval position matter; probe every
    // interval (term counts here are small).
    for (std::size_t j = 0; j < nintervals; ++j) {
      const double a = interval_lo(j), b = interval_hi(j);
      const double w = b - a;
      consider(interval_mid(j));
      const double clamped = std::clamp(quad->center, a + 1e-9 * w, b - 1e-9 * w);
      consider(clamped);
      consider(a + 1e-9 * w);
      consider(b - 1e-9 * w);
    }
  } else {
    for (std::size_t j = 0; j < nintervals; ++j) {
      if (value[j] < best_sweep - margin) continue;
      consider(interval_mid(j));
    }
  }
  for (double r : extra_probes) consider(r);

  out.arg = best_r;
  out.value = best;
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchical grid search on the sphere (K >= 3)

namespace {

void spherical_to_unit(std::span<const double> angles, std::span<double> out) {
  const int k = static_cast<int>(out.size());
  double prod = 1.0;
  for (int j = 0; j < k - 1; ++j) {
    out[j] = prod * std::cos(angles[j]);
    prod *= std::sin(angles[j]);
  }
  out[k - 1] = prod;
}

}  // namespace

SphereMax maximize_sphere_grid(int k, const std::function<double(std::span<const double>)>& eval,
                               const BetaGridConfig& grid,
                               std::span<const std::vector<double>> extra_probes) {
  if (k < 3) throw Error::data("InvalidConfig", "grid search applies to K >= 3");
  const int na = k - 1;  // free angles; the last one is periodic over [0, 2pi)

  // Per-axis counts: the periodic axis gets twice the resolution of the polar
  // axes so cells are roughly square.
  int base = std::max(3, static_cast<int>(std::llround(
                             std::pow(grid.points_per_level / 2.0, 1.0 / na))));
  SphereMax out;
  out.direction.assign(k, 0.0);

  std::vector<double> best_angles(na, 0.0);
  std::vector<double> best_dir(k, 0.0);
  std::vector<double> dir(k);
  bool have = false;
  double best = 0.0;

  auto probe = [&](std::span<const double> angles) {
    spherical_to_unit(angles, dir);
    const double v = eval(dir);
    ++out.probes;
    if (!have || v > best) {
      best = v;
      best_angles.assign(angles.begin(), angles.end());
      best_dir = dir;
      have = true;
    }
  };

  std::vector<double> center(na, 0.0);
  std::vector<double> halfwidth(na);
  std::vector<int> counts(na, base);
  counts[na - 1] = 2 * base;
  for (int j = 0; j < na - 1; ++j) halfwidth[j] = std::numbers::pi / 2.0;
  halfwidth[na - 1] = std::numbers::pi;
  for (int j = 0; j < na - 1; ++j) center[j] = std::numbers::pi / 2.0;
  center[na - 1] = std::numbers::pi;

  std::vector<double> angles(na);
  std::vector<double> spacing(na, 0.0);
  for (int level = 0; level < grid.levels; ++level) {
    std::int64_t total = 1;
    for (int j = 0; j < na; ++j) total *= counts[j];
    for (std::int64_t idx = 0; idx < total; ++idx) {
      std::int64_t rem = idx;
      for (int j = 0; j < na; ++j) {
        const int cj = counts[j];
        const int pos = static_cast<int>(rem % cj);
        rem /= cj;
        const double step = 2.0 * halfwidth[j] / cj;
        angles[j] = center[j] - halfwidth[j] + (pos + 0.5) * step;
        spacing[j] = step;
      }
      probe(angles);
    }
    center = best_angles;
    for (int j = 0; j < na; ++j) halfwidth[j] = 1.5 * spacing[j];
  }

  // Pattern-search polish around the grid winner.
  std::vector<double> step(na);
  for (int j = 0; j < na; ++j) step[j] = spacing[j];
  std::vector<double> trial(na);
  for (int iter = 0; iter < 200; ++iter) {
    bool improved = false;
    for (int j = 0; j < na; ++j) {
      for (double sign : {1.0, -1.0}) {
        trial = best_angles;
        trial[j] += sign * step[j];
        spherical_to_unit(trial, dir);
        const double v = eval(dir);
        ++out.probes;
        if (v > best) {
          best = v;
          best_angles = trial;
          best_dir = dir;
          improved = true;
        }
      }
    }
    if (!improved) {
      double max_step = 0.0;
      for (int j = 0; j < na; ++j) {
        step[j] *= 0.5;
        max_step = std::max(max_step, step[j]);
      }
      if (max_step < 1e-7) break;
    }
  }

  for (const auto& extra : extra_probes) {
    const double v = eval(extra);
    ++out.probes;
    if (!have || v > best) {
      best = v;
      best_dir.assign(extra.begin(), extra.end());
      have = true;
    }
  }

  out.direction = best_dir;
  out.value = best;
  return out;
}

// ---------------------------------------------------------------------------
// Two-step estimation

BetaEstimate estimate_beta(const PanelDataset& data, const EstimationConfig& cfg) {
  cfg.validate();
  require_estimable(data);
  const BetaTerms terms = build_beta_terms(data, cfg.variant);
  if (terms.size() == 0)
    throw Error::numerical("NoSwitchers",
                           "no individual carries identifying variation for the direction step");

  BetaEstimate out;
  const int K = data.k();
  if (K == 2) {
    std::vector<double> vx(terms.size()), vy(terms.size());
    for (std::int64_t t = 0; t < terms.size(); ++t) {
      vx[t] = terms.v[2 * t];
      vy[t] = terms.v[2 * t + 1];
    }
    auto exact = [&](double angle) {
      const double b[2] = {std::cos(angle), std::sin(angle)};
      return q1_objective(data, std::span<const double>(b, 2), cfg.variant);
    };
    const CircleMax cm = maximize_circle(vx, vy, terms.w, TermForm::Sign, exact);
    out.degenerate = cm.degenerate;
    out.trace.beta_arcs = cm.arcs;
    out.beta = cm.degenerate ? std::vector<double>{1.0, 0.0}
                             : std::vector<double>{std::cos(cm.angle), std::sin(cm.angle)};
  } else if (K == 1) {
    // The sphere is {-1, +1}.
    const double plus_one = 1.0, minus_one = -1.0;
    const double vp = q1_objective(data, std::span<const double>(&plus_one, 1), cfg.variant);
    const double vm = q1_objective(data, std::span<const double>(&minus_one, 1), cfg.variant);
    out.beta = {vm > vp ? -1.0 : 1.0};
    out.degenerate = vm == vp;
  } else {
    auto eval = [&](std::span<const double> bdir) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < terms.size(); ++t)
        acc += terms.w[t] * sgn(terms.dot(t, bdir));
      return acc;
    };
    const SphereMax sm = maximize_sphere_grid(K, eval, cfg.beta_grid);
    out.beta = sm.direction;
    out.trace.beta_probes = sm.probes;
    out.trace.grid_levels = cfg.beta_grid.levels;
  }
  out.q1_value = q1_objective(data, out.beta, cfg.variant);
  return out;
}

GammaEstimate estimate_gamma(const PanelDataset& data, std::span<const double> beta_hat,
                             const EstimationConfig& cfg) {
  cfg.validate();
  require_estimable(data);
  const double h = cfg.bandwidth(data.n());
  const GammaTerms terms = build_gamma_terms(data, beta_hat, h, cfg.variant);
  if (terms.switcher_terms == 0)
    throw Error::numerical("NoGammaSwitchers",
                           "no individual carries identifying variation for the "
                           "state-dependence step");
  if (terms.active_terms == 0)
    throw Error::numerical("AllWeightsZero",
                           "every kernel weight vanished at h=" + std::to_string(h) +
                               "; bandwidth too small for this sample");

  auto exact = [&](double r) {
    return q2_kernel_objective(data, r, beta_hat, h, cfg.variant);
  };
  const IntervalMax im = maximize_piecewise_1d(terms.c, terms.d, terms.weight,
                                               TermForm::Sign, cfg.gamma_lo, cfg.gamma_hi,
                                               exact);
  GammaEstimate out;
  out.gamma = im.arg;
  out.q2_value = im.value;
  out.constant = im.constant;
  out.intervals = im.intervals;
  return out;
}

EstimateResult estimate(const PanelDataset& data, const EstimationConfig& cfg) {
  cfg.validate();
  require_estimable(data);

  EstimateResult result;
  result.variant = cfg.variant;
  result.gamma_lo = cfg.gamma_lo;
  result.gamma_hi = cfg.gamma_hi;
  result.beta_grid = cfg.beta_grid;
  const SwitcherCounts counts = switcher_counts(data);
  result.beta_effective = counts.beta_effective;
  result.gamma_effective = counts.gamma_effective;
  result.h_used = cfg.bandwidth(data.n());

  BetaEstimate be = estimate_beta(data, cfg);
  result.params.beta = be.beta;
  result.q1_value = be.q1_value;
  result.beta_degenerate = be.degenerate;
  result.trace = be.trace;

  GammaEstimate ge = estimate_gamma(data, result.params.beta, cfg);
  result.params.gamma = ge.gamma;
  result.q2_value = ge.q2_value;
  result.gamma_constant = ge.constant;
  result.trace.gamma_intervals = ge.intervals;
  return result;
}

}  // namespace dynpanel
