#pragma once

// Time evolution of the two-atom state with rates re-solved at every stage:
//   da/dt   = -(2 Gamma + 1) a + Gamma
//   dn/dt   = -2 (2 Gamma + 1) n - 2 (2a - 1) + 8 Gamma_bar rho
//   drho/dt = -(2 Gamma + 1) rho + Gamma_bar n
// Integrated with the Dormand-Prince 5(4) pair; steps are clipped so that
// every reporting time is hit exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "superrad/error.hpp"
#include "superrad/rates.hpp"

namespace superrad {

struct Derivatives {
  double da = 0.0;
  double dn = 0.0;
  double drho = 0.0;
};

inline Derivatives derivatives(const TwoAtomState& s, double Gamma, double Gamma_bar) {
  const double k = 2.0 * Gamma + 1.0;
  return {-k * s.a + Gamma, -2.0 * k * s.n - 2.0 * (2.0 * s.a - 1.0) + 8.0 * Gamma_bar * s.rho,
          -k * s.rho + Gamma_bar * s.n};
}

inline Derivatives derivatives(const TwoAtomState& s, const RateSet& r) {
  return derivatives(s, r.Gamma, r.Gamma_bar);
}

struct IntegratorConfig {
  double t_end = 50.0;
  double rtol = 1e-9;
  double atol = 1e-14;
  int report_points = 400;     // log-spaced, plus t = 0
  double first_report = 1e-3;
  bool auto_extend = true;     // double t_end while a(t_end) > extend_threshold
  double extend_threshold = 1e-4;
  double max_t_end = 1600.0;
  double min_step = 1e-14;
  long max_steps = 5'000'000;

  void validate() const {
    if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("integrator tolerances must be positive");
    if (report_points < 2) throw ValidationError("report_points must be >= 2");
    if (!(first_report > 0.0 && first_report < t_end))
      throw ValidationError("first report time must lie in (0, t_end)");
  }
};

struct TimeSeries {
  std::vector<double> t;
  std::vector<TwoAtomState> states;
  std::vector<RateSet> rates;
  std::vector<double> emission;  // -da/dt
  std::vector<double> emitted;   // ∫_0^t (-da/dt), integrated alongside the state
  // -da/dt at every accepted step, finer than the reporting grid during the burst.
  std::vector<double> step_t;
  std::vector<double> step_emission;
  long steps_accepted = 0;
  long steps_rejected = 0;
  bool extended = false;         // t_end was raised automatically
  bool reached_threshold = true; // a(t_end) <= extend_threshold

  std::size_t size() const { return t.size(); }
};

/// t = 0 followed by `points` log-spaced times over [first, t_end].
inline std::vector<double> reporting_grid(double first, double t_end, int points) {
  std::vector<double> g{0.0};
  const double l0 = std::log(first), l1 = std::log(t_end);
  for (int i = 0; i < points; ++i) g.push_back(std::exp(l0 + (l1 - l0) * i / (points - 1)));
  g.back() = t_end;
  return g;
}

namespace detail {

struct Y {
  std::array<double, 4> v{};  // a, n, rho, emitted
};

inline bool within_bounds(const Y& y) {
  constexpr double slack = 1e-12;
  return y.v[0] >= -slack && y.v[0] <= 1.0 + slack && y.v[1] >= -1.0 - slack && y.v[1] <= 1.0 + slack &&
         std::abs(y.v[2]) <= 0.5 + slack;
}

inline TwoAtomState clamp_state(const Y& y) {
  return {std::clamp(y.v[0], 0.0, 1.0), std::clamp(y.v[1], -1.0, 1.0), std::clamp(y.v[2], -0.5, 0.5)};
}

template <class Model>
TimeSeries integrate_once(const Model& model, const TwoAtomState& initial, const IntegratorConfig& cfg) {
  // Dormand-Prince 5(4) tableau.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  // Always the smallest root, so the right-hand side is a function of the state alone.
  auto rhs = [&](const Y& y, RateSet* out = nullptr) {
    const TwoAtomState s = clamp_state(y);
    const RateSet r = rates_at(model, s);
    const Derivatives d = derivatives(s, r);
    if (out) *out = r;
    return Y{{d.da, d.dn, d.drho, -d.da}};
  };
  auto axpy = [](const Y& y, double h, std::initializer_list<std::pair<double, const Y*>> terms) {
    Y out = y;
    for (const auto& [c, k] : terms)
      for (int i = 0; i < 4; ++i) out.v[i] += h * c * k->v[i];
    return out;
  };

  const auto grid = reporting_grid(cfg.first_report, cfg.t_end, cfg.report_points);
  TimeSeries ts;
  Y y{{initial.a, initial.n, initial.rho, 0.0}};
  RateSet r0;
  Y k1 = rhs(y, &r0);
  auto record = [&](double t, const Y& yy, const RateSet& r, const Y& k) {
    ts.t.push_back(t);
    ts.states.push_back(clamp_state(yy));
    ts.rates.push_back(r);
    ts.emission.push_back(-k.v[0]);
    ts.emitted.push_back(yy.v[3]);
  };
  record(0.0, y, r0, k1);
  ts.step_t.push_back(0.0);
  ts.step_emission.push_back(-k1.v[0]);

  double t = 0.0;
  double h = std::min(1e-4, grid[1]);
  std::size_t next = 1;
  std::string stage_error;
  while (next < grid.size()) {
    if (ts.steps_accepted + ts.steps_rejected > cfg.max_steps)
      throw NumericalError("integrate: step budget exhausted at t=" + fmt(t));
    const double target = grid[next];
    bool lands = false;
    double step = h;
    if (t + step >= target * (1.0 - 1e-14)) {
      step = target - t;
      lands = true;
    }
    if (step < cfg.min_step)
      throw NumericalError("integrate: step size underflow at t=" + fmt(t) + " (a=" +
                           fmt(y.v[0]) + ", n=" + fmt(y.v[1]) +
                           ", rho=" + fmt(y.v[2]) + ")" +
                           (stage_error.empty() ? std::string() : "; last stage error: " + stage_error));

    // A stage outside the region where Gamma has a root rejects the step.
    Y k2, k3, k4, k5, k6, y5, k7;
    RateSet r_new;
    try {
      k2 = rhs(axpy(y, step, {{a21, &k1}}));
      k3 = rhs(axpy(y, step, {{a31, &k1}, {a32, &k2}}));
      k4 = rhs(axpy(y, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
      k5 = rhs(axpy(y, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
      k6 = rhs(axpy(y, step, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
      y5 = axpy(y, step, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
      if (!within_bounds(y5)) {
        ++ts.steps_rejected;
        h = 0.5 * step;
        continue;
      }
      k7 = rhs(y5, &r_new);
    } catch (const NumericalError& e) {
      ++ts.steps_rejected;
      stage_error = e.what();
      h = 0.5 * step;
      continue;
    }
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double e = step * (e1 * k1.v[i] + e3 * k3.v[i] + e4 * k4.v[i] + e5 * k5.v[i] + e6 * k6.v[i] +
                               e7 * k7.v[i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y.v[i]), std::abs(y5.v[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) {
      ++ts.steps_rejected;
      h = 0.5 * step;
      continue;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (err > 1.0) {
      ++ts.steps_rejected;
      h = step * factor;
      continue;
    }
    ++ts.steps_accepted;
    t = lands ? target : t + step;
    y = y5;
    k1 = k7;  // first-same-as-last
    ts.step_t.push_back(t);
    ts.step_emission.push_back(-k7.v[0]);
    if (lands) {
      record(t, y, r_new, k7);
      ++next;
      h = std::max(h, step * factor);
    } else {
      h = step * factor;
    }
  }
  ts.reached_threshold = ts.states.back().a <= cfg.extend_threshold;
  return ts;
}

}  // namespace detail

/// Integrates from `initial` over [0, t_end]. With auto_extend, t_end is
/// doubled (up to max_t_end) while a(t_end) exceeds extend_threshold.
template <class Model>
TimeSeries integrate(const Model& model, const TwoAtomState& initial, IntegratorConfig cfg = {}) {
  cfg.validate();
  initial.validate();
  TimeSeries ts = detail::integrate_once(model, initial, cfg);
  bool extended = false;
  while (cfg.auto_extend && !ts.reached_threshold && cfg.t_end * 2.0 <= cfg.max_t_end) {
    cfg.t_end *= 2.0;
    ts = detail::integrate_once(model, initial, cfg);
    extended = true;
  }
  ts.extended = extended;
  return ts;
}

struct PeakSummary {
  double a_dot_max = 0.0;
  double t_max = 0.0;
  bool burst = false;
  std::optional<std::pair<double, double>> subradiant_window;
  double rho_max = 0.0;  // largest coherence along the trajectory
};

/// True iff -da/dt on t in [0, window] rises above its t = 0 value by the
/// relative margin.
inline bool detect_burst(const TimeSeries& ts, double window = 5.0, double margin = 1e-6) {
  if (ts.size() == 0) throw ValidationError("detect_burst: empty time series");
  const double e0 = ts.emission.front();
  double best = e0;
  for (std::size_t i = 0; i < ts.size() && ts.t[i] <= window; ++i) best = std::max(best, ts.emission[i]);
  for (std::size_t i = 0; i < ts.step_t.size() && ts.step_t[i] <= window; ++i)
    best = std::max(best, ts.step_emission[i]);
  return best > e0 + margin * std::abs(e0);
}

namespace detail {

// Maximum of samples (x, y), refined by the parabola through the three
// samples around the discrete maximum. Returns (x_max, y_max).
inline std::pair<double, double> refined_maximum(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t i = std::size_t(std::max_element(y.begin(), y.end()) - y.begin());
  if (i == 0 || i + 1 >= x.size()) return {x[i], y[i]};
  const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
  const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double c2 = (d12 - d01) / (x2 - x0);
  if (!(c2 < 0.0)) return {x1, y1};
  const double tv = std::clamp(0.5 * (x0 + x1) - d01 / (2.0 * c2), x0, x2);
  return {tv, y0 + d01 * (tv - x0) + c2 * (tv - x0) * (tv - x1)};
}

}  // namespace detail

/// Peak of -da/dt and the longest post-peak run with -da/dt < threshold * a.
/// The peak is refined by a parabola through the samples around the discrete
/// maximum; the accepted integrator steps are used when recorded, since the
/// burst can be shorter than the first reporting interval.
inline PeakSummary peak_and_subradiance(const TimeSeries& ts, double threshold = 0.95) {
  if (ts.size() < 3) throw ValidationError("peak_and_subradiance: need at least three samples");
  PeakSummary p;
  p.burst = detect_burst(ts);
  const auto it = std::max_element(ts.emission.begin(), ts.emission.end());
  const std::size_t i = std::size_t(it - ts.emission.begin());
  if (i + 1 >= ts.size())
    throw NumericalError("peak_and_subradiance: emission still rising at t_end=" + fmt(ts.t.back()) +
                         "; integrate longer");
  if (i == 0 && !p.burst) {
    p.a_dot_max = ts.emission[0];
    p.t_max = 0.0;
  } else {
    const bool fine = ts.step_t.size() >= 3;
    const auto [tm, em] = fine ? detail::refined_maximum(ts.step_t, ts.step_emission)
                               : detail::refined_maximum(ts.t, ts.emission);
    p.t_max = tm;
    p.a_dot_max = em;
  }
  for (const auto& s : ts.states) p.rho_max = std::max(p.rho_max, s.rho);

  std::size_t best_len = 0, best_start = 0, run_start = 0, run_len = 0;
  for (std::size_t j = i + 1; j < ts.size(); ++j) {
    const double a = ts.states[j].a;
    const bool sub = a > 0.0 && ts.emission[j] < threshold * a;
    if (sub) {
      if (run_len == 0) run_start = j;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  if (best_len >= 2) p.subradiant_window = std::make_pair(ts.t[best_start], ts.t[best_start + best_len - 1]);
  return p;
}

}  // namespace superrad
