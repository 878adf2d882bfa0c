#pragma once

// Subcommand drivers: each runs one computation from a validated RunConfig and
// writes its tables, summaries and plots through an OutputWriter.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "superrad/analysis.hpp"
#include "superrad/dynamics.hpp"
#include "superrad/geometry.hpp"
#include "superrad/greens.hpp"
#include "superrad/io/config.hpp"
#include "superrad/io/csv.hpp"
#include "superrad/io/output.hpp"
#include "superrad/io/svg.hpp"
#include "superrad/rates.hpp"

namespace superrad::io {

inline Table timeseries_table(const TimeSeries& ts) {
  Table t;
  t.header = {"t", "a", "n", "rho", "Gamma", "Gamma_bar", "emission"};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& s = ts.states[i];
    const auto& r = ts.rates[i];
    t.add({ts.t[i], s.a, s.n, s.rho, r.Gamma, r.Gamma_bar, ts.emission[i]});
  }
  return t;
}

inline json peak_json(const PeakSummary& p) {
  json j;
  j["a_dot_max"] = p.a_dot_max;
  j["t_max"] = p.t_max;
  j["burst"] = p.burst;
  j["rho_max"] = p.rho_max;
  if (p.subradiant_window)
    j["subradiant_window"] = {p.subradiant_window->first, p.subradiant_window->second};
  else
    j["subradiant_window"] = nullptr;
  j["subradiant_threshold"] = 0.95;
  return j;
}

inline json run_json(const TimeSeries& ts) {
  return {{"t_end", ts.t.back()},
          {"extended", ts.extended},
          {"reached_threshold", ts.reached_threshold},
          {"steps_accepted", ts.steps_accepted},
          {"steps_rejected", ts.steps_rejected},
          {"a_end", ts.states.back().a}};
}

/// Time series without the t = 0 sample, for log-time plots.
inline Series positive_time(const std::string& label, const TimeSeries& ts, const std::vector<double>& y) {
  Series s{label, {}, {}};
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts.t[i] > 0.0) {
      s.x.push_back(ts.t[i]);
      s.y.push_back(y[i]);
    }
  return s;
}

inline std::vector<double> populations(const TimeSeries& ts) {
  std::vector<double> a;
  for (const auto& s : ts.states) a.push_back(s.a);
  return a;
}

inline std::vector<double> coherences(const TimeSeries& ts) {
  std::vector<double> r;
  for (const auto& s : ts.states) r.push_back(s.rho);
  return r;
}

inline json run_simulate(const RunConfig& cfg, OutputWriter& out) {
  TableCache cache(cfg.quadrature());
  const LatticeRateModel model = make_lattice_model(cfg.lattice(), cfg.variant_value(), cfg.quadrature(), &cache);
  const TimeSeries ts = integrate(model, TwoAtomState::inverted(), cfg.integrator());
  const PeakSummary peak = peak_and_subradiance(ts);
  out.write_csv("timeseries.csv", timeseries_table(ts));
  json s;
  s["atom_count"] = model.atom_count();
  s["dim"] = cfg.dim;
  s["n_rad"] = cfg.n_rad;
  s["spacing"] = cfg.spacing;
  s["variant"] = cfg.variant;
  s["peak"] = peak_json(peak);
  s["run"] = run_json(ts);
  s["Gamma_initial"] = ts.rates.front().Gamma;
  out.write_json("summary.json", s);
  if (cfg.svg) {
    out.write_svg("emission.svg", {positive_time("-da/dt", ts, ts.emission)},
                  {"Emission per particle", "t [1/gamma]", "-da/dt [gamma]", true, true});
    out.write_svg("population.svg",
                  {positive_time("a", ts, populations(ts)), positive_time("rho", ts, coherences(ts))},
                  {"Population and coherence", "t [1/gamma]", "value", true, false});
  }
  return s;
}

inline Table rates_table() {
  Table t;
  t.header = {"a", "n", "rho", "exponent", "Gamma", "Gamma_bar", "Gamma1", "Gamma2", "Gamma_bar1", "Gamma_bar2"};
  return t;
}

inline void add_rates_row(Table& t, const TwoAtomState& s, const RateSet& r) {
  t.add({s.a, s.n, s.rho, r.medium.exponent, r.Gamma, r.Gamma_bar, r.Gamma1, r.Gamma2, r.Gamma_bar1, r.Gamma_bar2});
}

inline json rates_json(const TwoAtomState& s, const RateSet& r) {
  return {{"a", s.a},           {"n", s.n},           {"rho", s.rho},
          {"exponent", r.medium.exponent},            {"Gamma", r.Gamma},
          {"Gamma_bar", r.Gamma_bar},                 {"Gamma1", r.Gamma1},
          {"Gamma2", r.Gamma2}, {"Gamma_bar1", r.Gamma_bar1}, {"Gamma_bar2", r.Gamma_bar2}};
}

/// Rates at the configured state, plus a scan over a in [0, 1] at n = 1, rho = 0.
inline json run_rates(const RunConfig& cfg, OutputWriter& out) {
  TableCache cache(cfg.quadrature());
  const LatticeRateModel model = make_lattice_model(cfg.lattice(), cfg.variant_value(), cfg.quadrature(), &cache);
  const TwoAtomState state{cfg.a, cfg.n, cfg.rho};
  const RateSet r = rates_at(model, state);
  Table t = rates_table();
  double guess = -1.0;
  for (int i = 0; i < cfg.points; ++i) {
    const TwoAtomState s{double(i) / (cfg.points - 1), 1.0, 0.0};
    const RateSet ri = rates_at(model, s, guess);
    guess = ri.Gamma;
    add_rates_row(t, s, ri);
  }
  out.write_csv("rates.csv", t);
  json s;
  s["atom_count"] = model.atom_count();
  s["state"] = rates_json(state, r);
  s["variant"] = cfg.variant;
  out.write_json("rates.json", s);
  if (cfg.svg) {
    Series g{"Gamma", {}, {}}, gb{"Gamma_bar", {}, {}};
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      g.x.push_back(std::get<double>(t.rows[i][0]));
      g.y.push_back(std::get<double>(t.rows[i][4]));
      gb.x.push_back(g.x.back());
      gb.y.push_back(std::get<double>(t.rows[i][5]));
    }
    out.write_svg("rates.svg", {g, gb}, {"Collective rates", "a", "rate [gamma]", false, false});
  }
  return s;
}

/// g(rho) on a log-spaced grid at a fixed medium exponent.
inline json run_greens(const RunConfig& cfg, OutputWriter& out) {
  Table t;
  t.header = {"rho", "re_g", "im_g", "abs_g"};
  Series mag{"|g|", {}, {}};
  const QuadratureConfig q = cfg.quadrature();
  const double l0 = std::log(cfg.rho_min), l1 = std::log(cfg.rho_max);
  for (int i = 0; i < cfg.points; ++i) {
    const double r = std::exp(l0 + (l1 - l0) * i / (cfg.points - 1));
    const cplx g = cfg.dim == 3 ? greens_3d(r, cfg.exponent) : greens_2d(r, cfg.exponent, q);
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
      throw NumericalError("greens: g overflows at rho=" + fmt(r) + " for exponent " + fmt(cfg.exponent));
    t.add({r, g.real(), g.imag(), std::abs(g)});
    mag.x.push_back(r);
    mag.y.push_back(std::abs(g));
  }
  out.write_csv("greens.csv", t);
  json s{{"dim", cfg.dim}, {"exponent", cfg.exponent}, {"points", cfg.points}};
  out.write_json("summary.json", s);
  if (cfg.svg)
    out.write_svg("greens.svg", {mag}, {"Green's function magnitude", "rho [lambda]", "|g|", true, true});
  return s;
}

/// Matched homogeneous gas against the array, on a shared reporting grid.
inline json run_gas(const RunConfig& cfg, OutputWriter& out) {
  const LatticeSpec spec = cfg.lattice();
  const GasRateModel gas(match_gas(spec));
  TableCache cache(cfg.quadrature());
  const LatticeRateModel array = make_lattice_model(spec, Variant::averaged(), cfg.quadrature(), &cache);
  IntegratorConfig ic = cfg.integrator();
  TimeSeries tg = integrate(gas, TwoAtomState::inverted(), ic);
  TimeSeries ta = integrate(array, TwoAtomState::inverted(), ic);
  const double T = std::max(tg.t.back(), ta.t.back());
  ic.auto_extend = false;
  ic.t_end = T;
  if (tg.t.back() < T) tg = integrate(gas, TwoAtomState::inverted(), ic);
  if (ta.t.back() < T) ta = integrate(array, TwoAtomState::inverted(), ic);

  const PeakSummary pg = peak_and_subradiance(tg);
  const PeakSummary pa = peak_and_subradiance(ta);
  const double late_from = pa.subradiant_window ? pa.subradiant_window->second : pa.t_max;
  bool slower = true;
  std::size_t late_samples = 0;
  double max_rho_diff = 0.0;
  for (std::size_t i = 0; i < tg.size(); ++i) {
    max_rho_diff = std::max(max_rho_diff, std::abs(tg.states[i].rho - ta.states[i].rho));
    if (tg.t[i] > late_from) {
      ++late_samples;
      slower = slower && tg.states[i].a > ta.states[i].a;
    }
  }

  out.write_csv("timeseries.csv", timeseries_table(tg));
  out.write_csv("array_timeseries.csv", timeseries_table(ta));
  json s;
  s["gas"] = {{"density", gas.gas().density}, {"radius", gas.gas().radius}, {"atom_count", gas.atom_count()},
              {"peak", peak_json(pg)}, {"run", run_json(tg)}};
  s["array"] = {{"atom_count", array.atom_count()}, {"peak", peak_json(pa)}, {"run", run_json(ta)}};
  s["peak_ratio"] = pg.a_dot_max / pa.a_dot_max;
  s["max_abs_rho_difference"] = max_rho_diff;
  s["late_time_from"] = late_from;
  s["late_samples"] = late_samples;
  s["gas_slower_late"] = slower && late_samples > 0;
  out.write_json("comparison.json", s);
  if (cfg.svg) {
    out.write_svg("population.svg", {positive_time("gas", tg, populations(tg)), positive_time("array", ta, populations(ta))},
                  {"Population: gas vs array", "t [1/gamma]", "a", true, true});
    out.write_svg("emission.svg",
                  {positive_time("gas", tg, tg.emission), positive_time("array", ta, ta.emission)},
                  {"Emission: gas vs array", "t [1/gamma]", "-da/dt [gamma]", true, true});
  }
  return s;
}

inline Table scaling_table(const std::vector<ScalingPoint>& pts) {
  Table t;
  t.header = {"dim", "n_rad", "d", "variant", "size", "optical_depth", "a_dot_max", "t_max", "burst", "rho_max",
              "status"};
  for (const auto& p : pts)
    t.add({(long long)p.dim, (long long)p.n_rad, p.d, to_string(p.variant.kind), p.size(), p.optical_depth(),
           p.a_dot_max, p.t_max, (long long)(p.burst ? 1 : 0), p.rho_max, p.status});
  return t;
}

inline std::vector<ScalingPoint> scaling_points_from_csv(const TextTable& t) {
  std::vector<ScalingPoint> pts;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ScalingPoint p;
    p.dim = int(t.number(i, "dim"));
    p.n_rad = int(t.number(i, "n_rad"));
    p.d = t.number(i, "d");
    const int vc = t.column("variant");
    if (vc >= 0) p.variant.kind = parse_variant_kind(t.rows[i][std::size_t(vc)]);
    p.a_dot_max = t.number(i, "a_dot_max");
    p.t_max = t.number(i, "t_max");
    const int bc = t.column("burst");
    p.burst = bc >= 0 && t.rows[i][std::size_t(bc)] == "1";
    const int sc = t.column("status");
    p.status = sc >= 0 ? t.rows[i][std::size_t(sc)] : "ok";
    p.ok = p.status == "ok";
    const int rc = t.column("rho_max");
    if (rc >= 0) p.rho_max = t.number(i, "rho_max");
    pts.push_back(p);
  }
  if (pts.empty()) throw ValidationError("fit: input has no rows");
  for (const auto& p : pts)
    if (p.dim != pts.front().dim) throw ValidationError("fit: input mixes dimensions");
  return pts;
}

inline json linear_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"count", f.count}};
}

inline json power_json(const PowerFit2D& f) {
  return {{"density_exponent", f.density_exponent},
          {"size_exponent", f.size_exponent},
          {"log_constant", f.log_constant},
          {"rms_rel_residual", f.rms_rel_residual},
          {"count", f.count},
          {"log_alternative",
           {{"slope", f.log_alternative.slope},
            {"intercept", f.log_alternative.intercept},
            {"rms_rel_residual", f.log_rms_rel_residual}}}};
}

/// Mean distance in size between consecutive extrema at each spacing.
inline std::optional<double> extrema_spacing(const std::vector<ScalingPoint>& ext) {
  std::map<double, std::vector<double>> by_d;
  for (const auto& p : ext) by_d[p.d].push_back(p.size());
  double sum = 0.0;
  int count = 0;
  for (auto& [d, v] : by_d) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      sum += v[i] - v[i - 1];
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

/// Log-log slope of a_dot_max against n_rad, averaged over spacings.
inline std::optional<double> mean_size_slope(const std::vector<ScalingPoint>& pts) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_d;
  for (const auto& p : usable(pts)) {
    by_d[p.d].first.push_back(std::log(double(p.n_rad)));
    by_d[p.d].second.push_back(std::log(p.a_dot_max));
  }
  double sum = 0.0;
  int count = 0;
  for (auto& [d, xy] : by_d)
    if (xy.first.size() >= 2) {
      sum += fit_line(xy.first, xy.second).slope;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / count;
}

/// Scaling-law fits for a set of sweep points. Fits that cannot be formed
/// (too few points) are reported as errors in the summary.
inline json fits_json(const std::vector<ScalingPoint>& pts) {
  json j;
  const int dim = pts.front().dim;
  j["dim"] = dim;
  j["points_total"] = pts.size();
  j["points_ok"] = usable(pts).size();
  json status = json::array();
  for (const auto& p : pts) status.push_back({{"n_rad", p.n_rad}, {"d", p.d}, {"status", p.status}});
  j["point_status"] = status;
  auto attempt = [&](const char* key, auto&& fn) {
    try {
      j[key] = fn();
    } catch (const ValidationError& e) {
      j[key] = {{"error", e.what()}};
    }
  };
  if (dim == 3) {
    attempt("linear_3d", [&] {
      const Fit3D f = fit_linear_3d(pts);
      return json{{"peak_collapse", linear_json(f.peak)},
                  {"inverse_t_max", linear_json(f.inverse_t)},
                  {"collapse_band", f.collapse_band}};
    });
    if (auto s = mean_size_slope(pts)) {
      j["peak_size_slope"] = *s;
      j["total_intensity_exponent"] = 1.0 + *s / 3.0;
    }
  } else {
    attempt("power_2d_all", [&] { return power_json(fit_power_2d(pts)); });
    const auto maxima = local_extrema(pts, false);
    const auto minima = local_extrema(pts, true);
    attempt("power_2d_maxima", [&] { return power_json(fit_power_2d(maxima)); });
    attempt("power_2d_minima", [&] { return power_json(fit_power_2d(minima)); });
    const auto sm = extrema_spacing(maxima), sn = extrema_spacing(minima);
    j["maxima_spacing"] = sm ? json(*sm) : json(nullptr);
    j["minima_spacing"] = sn ? json(*sn) : json(nullptr);
  }
  return j;
}

inline std::vector<Series> scaling_series(const std::vector<ScalingPoint>& pts) {
  std::map<double, Series> by_d;
  for (const auto& p : usable(pts)) {
    auto& s = by_d[p.d];
    s.label = "d=" + detail::num(p.d);
    s.x.push_back(p.size());
    s.y.push_back(p.dim == 3 ? p.a_dot_max * p.d * p.d * p.d : p.a_dot_max);
  }
  std::vector<Series> out;
  for (auto& [d, s] : by_d) out.push_back(std::move(s));
  return out;
}

inline json run_peak_scan(const RunConfig& cfg, OutputWriter& out) {
  const SweepConfig sc{cfg.integrator(), cfg.quadrature()};
  const auto pts = sweep_peaks(cfg.dim, cfg.sweep_n_rads(), cfg.sweep_spacings(), cfg.variant_value(), sc);
  out.write_csv("scaling.csv", scaling_table(pts));
  json fits = fits_json(pts);
  fits["variant"] = cfg.variant;
  out.write_json("fits.json", fits);
  if (cfg.svg) {
    const auto series = scaling_series(pts);
    if (!series.empty())
      out.write_svg("scaling.svg", series,
                    {"Peak emission scaling", "n_rad d [lambda]",
                     cfg.dim == 3 ? "-da/dt max * d^3" : "-da/dt max", true, true});
  }
  return fits;
}

inline json run_fit(const RunConfig& cfg, OutputWriter& out) {
  std::ifstream in(cfg.input);
  if (!in) throw ValidationError("fit: cannot open input '" + cfg.input + "'");
  const auto pts = scaling_points_from_csv(read_csv(in));
  json fits = fits_json(pts);
  fits["input"] = cfg.input;
  out.write_json("fits.json", fits);
  return fits;
}

inline json diagram_json(const PhaseDiagram& pd) {
  json pts = json::array();
  for (const auto& [n, d] : pd.points) pts.push_back({{"n_rad", n}, {"d_crit", d}});
  json j{{"method", pd.method},
         {"points", pts},
         {"nondecreasing", nondecreasing(pd)}};
  if (pd.points.size() >= 2)
    j["fit"] = {{"a", pd.fit.a}, {"b", pd.fit.b}, {"rms_rel_residual", pd.fit.rms_rel_residual}};
  if (pd.method == "peak_extrapolation") j["reference_d"] = pd.reference_d;
  return j;
}

inline json run_phase_diagram(const RunConfig& cfg, OutputWriter& out) {
  const SweepConfig sc{cfg.integrator(), cfg.quadrature()};
  const auto n_rads = cfg.sweep_n_rads();
  const Variant variant = cfg.variant_value();
  TableCache cache(cfg.quadrature());
  std::vector<PhaseDiagram> diagrams;
  if (cfg.method == "direct" || cfg.method == "both")
    diagrams.push_back(phase_diagram_direct(cfg.dim, n_rads, cfg.d_lo, cfg.d_hi, sc, cfg.bisect_tol, variant, &cache));
  if (cfg.method == "peak" || cfg.method == "both")
    diagrams.push_back(
        phase_diagram_from_peak(sweep_peaks(cfg.dim, n_rads, {cfg.reference_d}, variant, sc, &cache)));

  Table t;
  t.header = {"method", "n_rad", "d_crit"};
  json s;
  s["dim"] = cfg.dim;
  s["variant"] = cfg.variant;
  s["diagrams"] = json::array();
  std::vector<Series> series;
  for (const auto& pd : diagrams) {
    Series ser{pd.method, {}, {}};
    for (const auto& [n, d] : pd.points) {
      t.add({pd.method, (long long)n, d});
      ser.x.push_back(n);
      ser.y.push_back(d);
    }
    series.push_back(ser);
    s["diagrams"].push_back(diagram_json(pd));
  }
  if (diagrams.size() == 2) {
    bool exceeds = true;
    for (std::size_t i = 0; i < diagrams[0].points.size(); ++i)
      exceeds = exceeds && diagrams[1].points[i].second > diagrams[0].points[i].second;
    s["peak_exceeds_direct"] = exceeds;
  }
  out.write_csv("phase_diagram.csv", t);
  out.write_json("phase_diagram.json", s);
  if (cfg.svg)
    out.write_svg("phase_diagram.svg", series, {"Critical spacing", "n_rad", "d_crit [lambda]", false, false});
  return s;
}

/// Runs the configured subcommand and commits the output directory.
inline json run_command(const RunConfig& cfg) {
  cfg.validate();
  OutputWriter out(cfg.out_dir);
  json s;
  if (cfg.command == "simulate") s = run_simulate(cfg, out);
  else if (cfg.command == "rates") s = run_rates(cfg, out);
  else if (cfg.command == "greens") s = run_greens(cfg, out);
  else if (cfg.command == "gas") s = run_gas(cfg, out);
  else if (cfg.command == "peak-scan") s = run_peak_scan(cfg, out);
  else if (cfg.command == "phase-diagram") s = run_phase_diagram(cfg, out);
  else if (cfg.command == "fit") s = run_fit(cfg, out);
  out.commit(to_json(cfg));
  return s;
}

}  // namespace superrad::io
