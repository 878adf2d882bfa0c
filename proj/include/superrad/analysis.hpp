#pragma once

// Parameter sweeps over lattice size and spacing, peak-scaling fits, and
// superradiance phase diagrams.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "superrad/dynamics.hpp"
#include "superrad/error.hpp"
#include "superrad/geometry.hpp"
#include "superrad/greens.hpp"
#include "superrad/rates.hpp"

namespace superrad {

struct ScalingPoint {
  int dim = 3;
  int n_rad = 1;
  double d = 0.1;
  Variant variant;
  double a_dot_max = 0.0;
  double t_max = 0.0;
  bool burst = false;
  double rho_max = 0.0;
  bool ok = false;
  std::string status;  // "ok" or the failure message

  double size() const { return n_rad * d; }
  double optical_depth() const { return n_rad / (d * d); }
};

struct SweepConfig {
  IntegratorConfig integrator;
  QuadratureConfig quadrature;
};

/// Shares 2D kernel tables between runs at the same spacing. Each table is
/// built once with every distance any registered lattice needs.
class TableCache {
 public:
  explicit TableCache(QuadratureConfig q = {}) : q_(q) {}

  void require(double d, const std::vector<int>& ks) {
    auto& want = wanted_[d];
    want.insert(ks.begin(), ks.end());
  }

  std::shared_ptr<const Greens2DTable> get(double d, const std::vector<int>& ks) {
    require(d, ks);
    auto it = tables_.find(d);
    if (it != tables_.end()) {
      bool complete = true;
      for (int k : ks) complete = complete && it->second->column(k) >= 0;
      if (complete) return it->second;
    }
    const double limit = 2.0 * exponent_scale(d, 2);
    const auto& want = wanted_[d];
    auto table = tabulate_2d(d, std::vector<int>(want.begin(), want.end()), -limit, limit, q_);
    tables_[d] = table;
    return table;
  }

 private:
  QuadratureConfig q_;
  std::map<double, std::set<int>> wanted_;
  std::map<double, std::shared_ptr<const Greens2DTable>> tables_;
};

/// Builds the rate model of one lattice, drawing 2D tables from `cache`.
inline LatticeRateModel make_lattice_model(const LatticeSpec& spec, const Variant& variant,
                                           const QuadratureConfig& q, TableCache* cache) {
  AtomSet atoms = build_lattice(spec);
  std::shared_ptr<const Greens2DTable> table;
  if (spec.dimensionality == 2 && atoms.size() > 1 && cache)
    table = cache->get(spec.spacing, kernel_ks(atoms, variant_histogram(atoms, variant)));
  return LatticeRateModel(std::move(atoms), variant, q, table);
}

/// Peak metrics of one trajectory from full inversion.
template <class Model>
ScalingPoint peak_point(const Model& model, int dim, int n_rad, double d, const IntegratorConfig& cfg) {
  ScalingPoint p;
  p.dim = dim;
  p.n_rad = n_rad;
  p.d = d;
  p.variant = model.variant();
  const TimeSeries ts = integrate(model, TwoAtomState::inverted(), cfg);
  const PeakSummary s = peak_and_subradiance(ts);
  p.a_dot_max = s.a_dot_max;
  p.t_max = s.t_max;
  p.burst = s.burst;
  p.rho_max = s.rho_max;
  p.ok = true;
  p.status = "ok";
  return p;
}

/// One trajectory and peak analysis per (n_rad, d). Per-point failures are
/// recorded in the point's status and the sweep continues.
inline std::vector<ScalingPoint> sweep_peaks(int dim, const std::vector<int>& n_rads, const std::vector<double>& ds,
                                             const Variant& variant, const SweepConfig& cfg = {},
                                             TableCache* cache = nullptr) {
  if (n_rads.empty() || ds.empty()) throw ValidationError("sweep_peaks: n_rad and spacing lists must be non-empty");
  TableCache local(cfg.quadrature);
  if (!cache) cache = &local;
  if (dim == 2)
    for (double d : ds)
      for (int n : n_rads) {
        const AtomSet atoms = build_lattice({dim, d, n});
        cache->require(d, kernel_ks(atoms, variant_histogram(atoms, variant)));
      }
  std::vector<ScalingPoint> out;
  bool any_ok = false;
  for (double d : ds)
    for (int n : n_rads) {
      try {
        const LatticeRateModel model = make_lattice_model({dim, d, n}, variant, cfg.quadrature, cache);
        out.push_back(peak_point(model, dim, n, d, cfg.integrator));
        any_ok = true;
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        ScalingPoint p;
        p.dim = dim;
        p.n_rad = n;
        p.d = d;
        p.variant = variant;
        p.status = e.what();
        out.push_back(p);
      }
    }
  if (!any_ok) throw NumericalError("sweep_peaks: every sweep point failed; first error: " + out.front().status);
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;

  double operator()(double x) const { return intercept + slope * x; }
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("fit_line: x and y differ in length");
  if (x.size() < 2) throw ValidationError("fit_line: need at least two points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 1e-300 * (1.0 + mx * mx))) throw ValidationError("fit_line: degenerate abscissa (all x equal)");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss_res += std::pow(y[i] - f(x[i]), 2);
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.count = x.size();
  return f;
}

struct Fit3D {
  LinearFit peak;        // a_dot_max d^3 versus n_rad d
  LinearFit inverse_t;   // 1/t_max versus n_rad / d^2
  double collapse_band;  // largest |y - fit| / fit over the peak points
};

inline std::vector<ScalingPoint> usable(const std::vector<ScalingPoint>& pts) {
  std::vector<ScalingPoint> out;
  for (const auto& p : pts)
    if (p.ok) out.push_back(p);
  return out;
}

inline Fit3D fit_linear_3d(const std::vector<ScalingPoint>& points) {
  const auto pts = usable(points);
  if (pts.size() < 4) throw ValidationError("fit_linear_3d: need at least four successful points");
  std::vector<double> x, y, o, it;
  for (const auto& p : pts) {
    x.push_back(p.size());
    y.push_back(p.a_dot_max * p.d * p.d * p.d);
    if (p.t_max > 0.0) {
      o.push_back(p.optical_depth());
      it.push_back(1.0 / p.t_max);
    }
  }
  Fit3D f;
  f.peak = fit_line(x, y);
  f.inverse_t = fit_line(o, it);
  f.collapse_band = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.collapse_band = std::max(f.collapse_band, std::abs(y[i] - f.peak(x[i])) / std::abs(f.peak(x[i])));
  return f;
}

/// log(a_dot_max) = c - alpha log(d) + beta log(n_rad d), and the logarithmic
/// alternative a_dot_max d^alpha = c0 + c1 log(n_rad d) at the same alpha.
struct PowerFit2D {
  double density_exponent = 0.0;  // alpha
  double size_exponent = 0.0;     // beta
  double log_constant = 0.0;
  double rms_rel_residual = 0.0;
  LinearFit log_alternative;
  double log_rms_rel_residual = 0.0;
  std::size_t count = 0;
};

inline PowerFit2D fit_power_2d(const std::vector<ScalingPoint>& points) {
  const auto pts = usable(points);
  if (pts.size() < 6) throw ValidationError("fit_power_2d: need at least six successful points");
  double smin = pts.front().size(), smax = smin;
  for (const auto& p : pts) {
    if (!(p.a_dot_max > 0.0)) throw ValidationError("fit_power_2d: non-positive peak value");
    smin = std::min(smin, p.size());
    smax = std::max(smax, p.size());
  }
  if (smax < 3.0 * smin) throw ValidationError("fit_power_2d: sizes must span at least a factor of 3");

  // Normal equations for y = c + u1 * log d + u2 * log s.
  double m[3][3] = {{0}}, r[3] = {0};
  for (const auto& p : pts) {
    const double v[3] = {1.0, std::log(p.d), std::log(p.size())};
    const double y = std::log(p.a_dot_max);
    for (int i = 0; i < 3; ++i) {
      r[i] += v[i] * y;
      for (int j = 0; j < 3; ++j) m[i][j] += v[i] * v[j];
    }
  }
  auto det3 = [](double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double det = det3(m);
  if (!(std::abs(det) > 1e-12)) throw ValidationError("fit_power_2d: spacing and size are not independent");
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    double t[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t[i][j] = (j == c) ? r[i] : m[i][j];
    sol[c] = det3(t) / det;
  }
  PowerFit2D f;
  f.log_constant = sol[0];
  f.density_exponent = -sol[1];
  f.size_exponent = sol[2];
  f.count = pts.size();
  double ss = 0.0;
  for (const auto& p : pts) {
    const double model = std::exp(sol[0] + sol[1] * std::log(p.d) + sol[2] * std::log(p.size()));
    ss += std::pow((p.a_dot_max - model) / p.a_dot_max, 2);
  }
  f.rms_rel_residual = std::sqrt(ss / double(pts.size()));

  std::vector<double> lx, ly;
  for (const auto& p : pts) {
    lx.push_back(std::log(p.size()));
    ly.push_back(p.a_dot_max * std::pow(p.d, f.density_exponent));
  }
  f.log_alternative = fit_line(lx, ly);
  double sl = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) sl += std::pow((ly[i] - f.log_alternative(lx[i])) / ly[i], 2);
  f.log_rms_rel_residual = std::sqrt(sl / double(pts.size()));
  return f;
}

/// Interior local minima (or maxima) of a_dot_max over n_rad at each spacing.
inline std::vector<ScalingPoint> local_extrema(const std::vector<ScalingPoint>& points, bool minima) {
  std::map<double, std::vector<ScalingPoint>> by_d;
  for (const auto& p : usable(points)) by_d[p.d].push_back(p);
  std::vector<ScalingPoint> out;
  for (auto& [d, v] : by_d) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.n_rad < b.n_rad; });
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      const double l = v[i - 1].a_dot_max, c = v[i].a_dot_max, r = v[i + 1].a_dot_max;
      if (minima ? (c < l && c < r) : (c > l && c > r)) out.push_back(v[i]);
    }
  }
  return out;
}

/// d_crit = a + b sqrt(n_rad).
struct SqrtFit {
  double a = 0.0;
  double b = 0.0;
  double rms_rel_residual = 0.0;
};

struct PhaseDiagram {
  std::vector<std::pair<int, double>> points;  // (n_rad, d_crit)
  std::string method;                          // "direct" or "peak_extrapolation"
  SqrtFit fit;
  double reference_d = 0.0;                    // peak method only
};

inline SqrtFit fit_sqrt(const std::vector<std::pair<int, double>>& pts) {
  std::vector<double> x, y;
  for (const auto& [n, d] : pts) {
    x.push_back(std::sqrt(double(n)));
    y.push_back(d);
  }
  const LinearFit l = fit_line(x, y);
  SqrtFit f{l.intercept, l.slope, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow((y[i] - l(x[i])) / y[i], 2);
  f.rms_rel_residual = std::sqrt(ss / double(x.size()));
  return f;
}

/// Burst test of one lattice, integrating only over the burst window.
inline bool lattice_bursts(int dim, int n_rad, double d, const Variant& variant, const SweepConfig& cfg,
                           TableCache* cache) {
  IntegratorConfig ic = cfg.integrator;
  ic.t_end = 5.0;
  ic.auto_extend = false;
  ic.first_report = std::min(ic.first_report, 1e-3);
  const LatticeRateModel model = make_lattice_model({dim, d, n_rad}, variant, cfg.quadrature, cache);
  return detect_burst(integrate(model, TwoAtomState::inverted(), ic));
}

/// Per n_rad, bisects the spacing between a bursting `d_lo` and a
/// non-bursting `d_hi` down to `tol`.
inline PhaseDiagram phase_diagram_direct(int dim, const std::vector<int>& n_rads, double d_lo, double d_hi,
                                         const SweepConfig& cfg = {}, double tol = 0.002,
                                         const Variant& variant = Variant::averaged(), TableCache* cache = nullptr) {
  if (n_rads.empty()) throw ValidationError("phase_diagram_direct: empty n_rad list");
  if (!(d_lo > 0.0 && d_hi > d_lo)) throw ValidationError("phase_diagram_direct: need 0 < d_lo < d_hi");
  if (!(tol > 0.0)) throw ValidationError("phase_diagram_direct: tolerance must be positive");
  TableCache local(cfg.quadrature);
  if (!cache) cache = &local;
  PhaseDiagram pd;
  pd.method = "direct";
  for (int n : n_rads) {
    const bool lo_burst = lattice_bursts(dim, n, d_lo, variant, cfg, cache);
    const bool hi_burst = lattice_bursts(dim, n, d_hi, variant, cfg, cache);
    if (!lo_burst)
      throw ValidationError("phase_diagram_direct: lower spacing d=" + fmt(d_lo) +
                            " shows no burst for n_rad=" + std::to_string(n) + "; bracket does not straddle");
    if (hi_burst)
      throw ValidationError("phase_diagram_direct: upper spacing d=" + fmt(d_hi) +
                            " still bursts for n_rad=" + std::to_string(n) + "; bracket does not straddle");
    double lo = d_lo, hi = d_hi;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (lattice_bursts(dim, n, mid, variant, cfg, cache)) lo = mid;
      else hi = mid;
    }
    pd.points.emplace_back(n, 0.5 * (lo + hi));
  }
  std::sort(pd.points.begin(), pd.points.end());
  if (pd.points.size() >= 2) pd.fit = fit_sqrt(pd.points);
  return pd;
}

/// d_crit = d sqrt(a_dot_max) from peaks computed at spacing d.
inline PhaseDiagram phase_diagram_from_peak(const std::vector<ScalingPoint>& points) {
  PhaseDiagram pd;
  pd.method = "peak_extrapolation";
  for (const auto& p : usable(points)) {
    if (!(p.a_dot_max > 0.0))
      throw ValidationError("phase_diagram_from_peak: non-positive peak at n_rad=" + std::to_string(p.n_rad));
    pd.points.emplace_back(p.n_rad, p.d * std::sqrt(p.a_dot_max));
    pd.reference_d = p.d;
  }
  if (pd.points.empty()) throw ValidationError("phase_diagram_from_peak: no usable points");
  std::sort(pd.points.begin(), pd.points.end());
  if (pd.points.size() >= 2) pd.fit = fit_sqrt(pd.points);
  return pd;
}

/// True iff d_crit does not decrease with n_rad.
inline bool nondecreasing(const PhaseDiagram& pd) {
  for (std::size_t i = 1; i < pd.points.size(); ++i)
    if (pd.points[i].second < pd.points[i - 1].second) return false;
  return true;
}

}  // namespace superrad
