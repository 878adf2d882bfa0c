#pragma once

// In-medium retarded Green's functions in reduced units.
//
// Units: gamma = 1, lambda = 1, k0 = 2*pi. The dimensionless kernel is
// g = (p^2 / hbar^2 gamma) * D^ret, so that free-space |g(r)| = 1/(2 k0 r)
// and every rate sum is gamma^2 * Σ g g*.
//
//   3D:  g(r)   = -(i / (2 k0 r)) exp(-i k0 r) exp(xi r)
//   2D:  g(rho) = -(i/2) * I(chi),
//        I(chi) = ∫_0^∞ du u J0(u k0 rho) / (sqrt(u^2 - 1 + 2 i eps) - i chi)
//
// The 2D integral is split at u = 1. Below, t = sqrt(1 - u^2) maps the
// pole sqrt(1-u^2) = chi onto a simple pole at t = chi, giving
//   A(chi) = -i ∫_0^1 phi(t) / (t - chi - i0) dt,   phi(t) = t J0(b sqrt(1 - t^2)),
// with b = k0 rho. Above, v = sqrt(u^2 - 1) gives
//   B(chi) = ∫_0^∞ v psi(v) / (v - i chi) dv,        psi(v) = J0(b sqrt(1 + v^2)),
// whose oscillatory tail beyond v = V is expanded in powers of i chi / v.
// The eps -> 0+ limit is taken analytically: the pole contributes its
// principal value plus i*pi*phi(chi). The only point where the limit does not
// exist is chi = 1 (logarithmic divergence); there eps caps |1 - chi| from below.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "superrad/error.hpp"
#include "superrad/quadrature.hpp"

namespace superrad {

using cplx = std::complex<double>;

inline constexpr double k0 = 2.0 * std::numbers::pi;

struct MediumParams {
  int dimensionality = 3;
  double exponent = 0.0;  // xi (per wavelength) in 3D, chi in 2D
  double a = 0.5;
  double Gamma = 0.0;
  double spacing = 1.0;
};

/// Prefactor pi / (k0^2 d^D) in reduced units.
inline double exponent_scale(double spacing, int dim) {
  return std::numbers::pi / (k0 * k0 * std::pow(spacing, dim));
}

/// xi (3D) or chi (2D) for a given population, cooperative rate and spacing.
inline MediumParams medium_exponent(double a, double Gamma, double spacing, int dim) {
  if (dim != 2 && dim != 3) throw ValidationError("medium_exponent: dimensionality must be 2 or 3");
  if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("medium_exponent: population a must lie in [0,1]");
  if (!(spacing > 0.0)) throw ValidationError("medium_exponent: spacing must be positive");
  if (Gamma < 0.0 || !std::isfinite(Gamma))
    throw NumericalError("medium_exponent: negative or non-finite cooperative rate Gamma=" +
                         fmt(Gamma));
  const double x = (2.0 * a - 1.0) / (0.5 + Gamma) * exponent_scale(spacing, dim);
  return MediumParams{dim, x, a, Gamma, spacing};
}

inline cplx greens_3d(double r, double xi) {
  if (!(r > 0.0)) throw ValidationError("greens_3d: distance must be positive (self-term is excluded)");
  const double mag = std::exp(xi * r) / (2.0 * k0 * r);
  return cplx(0.0, -mag) * std::polar(1.0, -k0 * r);
}

inline cplx greens_3d(double r, const MediumParams& medium) {
  if (medium.dimensionality != 3) throw ValidationError("greens_3d: medium is not three-dimensional");
  return greens_3d(r, medium.exponent);
}

struct QuadratureConfig {
  double epsilon = 1e-5;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_bessel_segments = 2000;
  int acceleration_depth = 12;
  double table_tol = 2e-9;  // midpoint tolerance of tabulated kernels

  void validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("quadrature: epsilon must be positive");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(table_tol > 0.0))
      throw ValidationError("quadrature: tolerances must be positive");
    if (max_bessel_segments < 8) throw ValidationError("quadrature: max_bessel_segments must be >= 8");
    if (acceleration_depth < 0) throw ValidationError("quadrature: acceleration_depth must be >= 0");
  }
};

namespace detail {

inline double bessel_j0(double x) { return boost::math::cyl_bessel_j(0, x); }

/// phi(t) = t J0(b sqrt(1 - t^2)), continued analytically beyond |t| = 1.
inline double phi_kernel(double t, double b) {
  const double s = 1.0 - t * t;
  if (s >= 0.0) return t * bessel_j0(b * std::sqrt(s));
  return t * boost::math::cyl_bessel_i(0, b * std::sqrt(-s));
}

}  // namespace detail

/// Quadrature data for the 2D kernel at one in-plane distance. Building it
/// costs a few thousand Bessel evaluations; afterwards I(chi) is evaluated
/// for any |chi| <= chi_limit in O(#nodes) arithmetic.
class Greens2DKernel {
 public:
  Greens2DKernel(double rho, double chi_limit, const QuadratureConfig& q) : rho_(rho), q_(q) {
    if (!(rho > 0.0)) throw ValidationError("greens_2d: distance must be positive (integral diverges at 0)");
    q.validate();
    b_ = k0 * rho;
    v_split_ = std::max(4.0, 2.0 * std::abs(chi_limit) + 2.0);
    chi_limit_ = 0.5 * v_split_;
    subtract_above_ = std::min(0.25, 1.0 / (b_ * b_));
    build_lower();
    build_upper();
    build_tail();
  }

  double rho() const { return rho_; }
  double b() const { return b_; }
  double chi_limit() const { return chi_limit_; }

  double phi(double chi) const { return detail::phi_kernel(chi, b_); }

  /// I(chi), the Fourier-Bessel integral (see header comment).
  cplx integral(double chi) const {
    if (std::abs(chi) > chi_limit_ * (1.0 + 1e-12))
      throw NumericalError("greens_2d: chi=" + fmt(chi) + " outside kernel range");
    return lower(chi) + upper(chi);
  }

  cplx value(double chi) const { return cplx(0.0, -0.5) * integral(chi); }

 private:
  // A(chi)
  cplx lower(double chi) const {
    double sum = 0.0;
    if (chi > 0.0 && chi <= 1.0 + subtract_above_) {
      const double pc = phi(chi);
      for (std::size_t j = 0; j < t_.size(); ++j) {
        const double dt = t_[j] - chi;
        if (std::abs(dt) > 1e-9) {
          sum += wt_[j] * (phi_t_[j] - pc) / dt;
        } else {
          const double h = 1e-6;
          sum += wt_[j] * (phi(chi + h) - phi(chi - h)) / (2.0 * h);
        }
      }
      const double gap = std::max(std::abs(1.0 - chi), q_.epsilon);
      const cplx log_term(std::log(gap) - std::log(chi), chi < 1.0 ? std::numbers::pi : 0.0);
      return cplx(0.0, -1.0) * (sum + pc * log_term);
    }
    for (std::size_t j = 0; j < t_.size(); ++j) sum += wt_[j] * phi_t_[j] / (t_[j] - chi);
    return cplx(0.0, -sum);
  }

  // B(chi) = ∫_0^V c(v)/(v - i chi) + Σ_k (i chi)^k M_k
  cplx upper(double chi) const {
    double re = 0.0, im = 0.0;
    const double chi2 = chi * chi;
    for (std::size_t j = 0; j < v_.size(); ++j) {
      const double inv = cv_[j] / (v_[j] * v_[j] + chi2);
      re += inv * v_[j];
      im += inv * chi;
    }
    cplx tail(0.0, 0.0);
    cplx p(1.0, 0.0);
    const cplx ic(0.0, chi);
    for (double m : moments_) {
      tail += p * m;
      p *= ic;
    }
    return cplx(re, im) + tail;
  }

  void build_lower() {
    const double coarse = std::min(1.0 / 16.0, 1.0 / (b_ + 1.0));
    const auto bp = quad::graded_breakpoints(0.0, 1.0, coarse, 1e-12, true, true);
    for (const auto& n : quad::composite_rule(bp)) {
      t_.push_back(n.x);
      wt_.push_back(n.w);
      phi_t_.push_back(detail::phi_kernel(n.x, b_));
    }
  }

  void build_upper() {
    const double coarse = std::min(0.25, std::numbers::pi / b_);
    const auto bp = quad::graded_breakpoints(0.0, v_split_, coarse, 1e-12, true, false);
    for (const auto& n : quad::composite_rule(bp)) {
      v_.push_back(n.x);
      cv_.push_back(n.w * n.x * detail::bessel_j0(b_ * std::sqrt(1.0 + n.x * n.x)));
    }
  }

  // M_k = ∫_V^∞ psi(v) v^-k dv, integrated between consecutive zeros of psi and
  // accelerated by iterated averaging of the partial sums.
  void build_tail() {
    constexpr int n_moments = 56;
    const double arg0 = b_ * std::sqrt(1.0 + v_split_ * v_split_);
    int m = std::max(1, int(std::floor(arg0 / std::numbers::pi)));
    while (m > 1 && boost::math::cyl_bessel_j_zero(0.0, m - 1) > arg0) --m;
    while (boost::math::cyl_bessel_j_zero(0.0, m) <= arg0) ++m;

    auto zero_at = [&](int idx) {
      const double j = boost::math::cyl_bessel_j_zero(0.0, idx);
      return std::sqrt((j / b_) * (j / b_) - 1.0);
    };
    auto integrand = [&](double v, std::span<double> out) {
      const double psi = detail::bessel_j0(b_ * std::sqrt(1.0 + v * v));
      double p = psi;
      const double inv = 1.0 / v;
      for (double& o : out) {
        o = p;
        p *= inv;
      }
    };

    const double scale = 1.0 / b_;
    const double tol = 0.1 * std::max(q_.abs_tol, q_.rel_tol * scale);
    std::vector<double> running(n_moments, 0.0), scratch;
    std::vector<std::vector<double>> partial(n_moments);
    double lo = v_split_;
    double previous = 0.0;
    bool have_previous = false;
    const int min_segments = q_.acceleration_depth + 4;
    for (int seg = 0; seg < q_.max_bessel_segments; ++seg) {
      const double hi = zero_at(m + seg);
      quad::gauss_kronrod_vector(integrand, lo, hi, 1e-3 * tol, 8, std::span<double>(running), scratch);
      for (int k = 0; k < n_moments; ++k) partial[k].push_back(running[k]);
      lo = hi;
      if (seg + 1 < min_segments) continue;
      const double est = quad::averaged_limit(partial[0], q_.acceleration_depth);
      if (have_previous && std::abs(est - previous) <= tol) {
        moments_.resize(n_moments);
        for (int k = 0; k < n_moments; ++k)
          moments_[k] = quad::averaged_limit(partial[k], q_.acceleration_depth);
        return;
      }
      previous = est;
      have_previous = true;
    }
    throw NumericalError("greens_2d: oscillatory tail did not converge after " +
                         std::to_string(q_.max_bessel_segments) + " Bessel segments (rho=" +
                         fmt(rho_) + ", last partial sum=" + fmt(running[0]) +
                         ", last accelerated estimate=" + fmt(previous) + ")");
  }

  double rho_ = 0.0;
  QuadratureConfig q_;
  double b_ = 0.0;
  double v_split_ = 4.0;
  double chi_limit_ = 2.0;
  double subtract_above_ = 0.25;
  std::vector<double> t_, wt_, phi_t_;
  std::vector<double> v_, cv_;
  std::vector<double> moments_;
};

inline cplx greens_2d(double rho, double chi, const QuadratureConfig& q = {}) {
  Greens2DKernel kernel(rho, std::abs(chi), q);
  return kernel.value(chi);
}

inline cplx greens_2d(double rho, const MediumParams& medium, const QuadratureConfig& q = {}) {
  if (medium.dimensionality != 2) throw ValidationError("greens_2d: medium is not two-dimensional");
  return greens_2d(rho, medium.exponent, q);
}

/// Free-space in-plane slice -(i/(2 k0 rho)) exp(-i k0 rho).
inline cplx greens_free(double r) { return greens_3d(r, 0.0); }

class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// 2D kernel values for the lattice distances spacing*sqrt(k), tabulated on
/// one adaptive chi grid per distance. What is interpolated is the smooth
/// remainder
///   R(chi) = I(chi) + i phi(chi) w(chi) S(chi),  S = ln|1-chi| + i pi [chi<1],
/// together with phi(chi) w(chi). The window w is 1 for |chi| <= 1 and falls
/// smoothly to 0 before phi (which grows like I0(b sqrt(chi^2 - 1))) gets
/// large. S is smooth away from chi = 1, so the logarithmic singularity is
/// carried entirely by the exact S added back at query time.
class Greens2DTable {
 public:
  Greens2DTable(double spacing, std::vector<int> ks, double chi_lo, double chi_hi,
                const QuadratureConfig& q = {})
      : spacing_(spacing), ks_(std::move(ks)), lo_(chi_lo), hi_(chi_hi), q_(q) {
    q.validate();
    if (!(chi_lo < chi_hi)) throw ValidationError("tabulate_2d: chi grid must be increasing");
    if (ks_.empty()) throw ValidationError("tabulate_2d: no distances requested");
    std::sort(ks_.begin(), ks_.end());
    ks_.erase(std::unique(ks_.begin(), ks_.end()), ks_.end());
    const double limit = std::max(std::abs(chi_lo), std::abs(chi_hi));
    columns_.reserve(ks_.size());
    for (int k : ks_) {
      if (k <= 0) throw ValidationError("tabulate_2d: squared norms must be positive");
      Greens2DKernel kernel(spacing * std::sqrt(double(k)), limit, q);
      Column col;
      // The window ends where b sqrt(chi^2 - 1) reaches 3.
      const double b = kernel.b();
      col.window_width = 0.5 * (std::sqrt(1.0 + 9.0 / (b * b)) - 1.0);
      build(kernel, col);
      columns_.push_back(std::move(col));
      kernels_.push_back(std::move(kernel));
    }
  }

  const std::vector<int>& ks() const { return ks_; }
  double spacing() const { return spacing_; }
  double chi_lo() const { return lo_; }
  double chi_hi() const { return hi_; }

  /// Total number of stored nodes over all distances.
  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& c : columns_) n += c.grid.size();
    return n;
  }
  const std::vector<double>& grid(std::size_t column) const { return columns_.at(column).grid; }

  /// Column of a squared norm, or -1.
  int column(int k) const {
    auto it = std::lower_bound(ks_.begin(), ks_.end(), k);
    return (it != ks_.end() && *it == k) ? int(it - ks_.begin()) : -1;
  }

  /// g(spacing*sqrt(k), chi) for every tabulated k, in ks() order.
  void evaluate(double chi, std::span<cplx> out) const {
    check_range(chi);
    const cplx s = singular_factor(chi);
    for (std::size_t c = 0; c < columns_.size(); ++c) out[c] = interpolate(columns_[c], chi, s);
  }

  cplx evaluate_k(int k, double chi) const {
    check_range(chi);
    const int c = column(k);
    if (c < 0) throw ValidationError("tabulate_2d: distance d*sqrt(" + std::to_string(k) + ") not tabulated");
    return interpolate(columns_[c], chi, singular_factor(chi));
  }

  /// Exact (non-interpolated) values, for validation.
  void evaluate_direct(double chi, std::span<cplx> out) const {
    for (std::size_t c = 0; c < kernels_.size(); ++c) out[c] = kernels_[c].value(chi);
  }

 private:
  struct Column {
    double window_width = 0.25;
    std::vector<double> grid;
    std::vector<cplx> rem;
    std::vector<double> wphi;
  };

  void check_range(double chi) const {
    if (!(chi >= lo_ && chi <= hi_))
      throw RangeError("tabulate_2d: chi=" + fmt(chi) + " outside tabulated range [" +
                       fmt(lo_) + ", " + fmt(hi_) + "]");
  }

  cplx singular_factor(double chi) const {
    const double gap = std::max(std::abs(1.0 - chi), q_.epsilon);
    return cplx(std::log(gap), chi < 1.0 ? std::numbers::pi : 0.0);
  }

  // C5 step from 0 to 1 on [0, 1] (degree 11), smooth enough for the
  // 6-point interpolation stencil.
  static double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double x3 = x * x * x;
    return x3 * x3 *
           (462.0 + x * (-1980.0 + x * (3465.0 + x * (-3080.0 + x * (1386.0 - 252.0 * x)))));
  }

  // 1 for |chi| <= 1 + r, 0 for |chi| >= 1 + 2r.
  static double window(double r, double chi) {
    const double x = std::abs(chi);
    if (x <= 1.0 + r) return 1.0;
    return smooth_step(((1.0 + 2.0 * r) - x) / r);
  }

  void sample(const Greens2DKernel& kernel, double r, double chi, cplx& rem, double& wphi) const {
    const double w = window(r, chi);
    wphi = w > 0.0 ? w * kernel.phi(chi) : 0.0;
    rem = kernel.integral(chi) + cplx(0.0, 1.0) * wphi * singular_factor(chi);
  }

  static constexpr int stencil_size = 6;
  using Weights = std::array<double, stencil_size>;

  // Lagrange stencil on a non-uniform grid, centered on the bracketing interval.
  static std::size_t stencil(const std::vector<double>& g, double chi, Weights& w) {
    constexpr std::size_t half = stencil_size / 2;
    const std::size_t n = g.size();
    std::size_t i = std::size_t(std::upper_bound(g.begin(), g.end(), chi) - g.begin());
    i = (i == 0) ? 0 : i - 1;
    std::size_t base = (i + 1 >= half) ? i + 1 - half : 0;
    if (base + stencil_size > n) base = n - stencil_size;
    for (int p = 0; p < stencil_size; ++p) {
      double l = 1.0;
      for (int q = 0; q < stencil_size; ++q)
        if (q != p) l *= (chi - g[base + q]) / (g[base + p] - g[base + q]);
      w[p] = l;
    }
    return base;
  }

  static cplx interpolate(const Column& col, double chi, cplx s) {
    Weights w;
    const std::size_t base = stencil(col.grid, chi, w);
    cplx r(0.0, 0.0);
    double p = 0.0;
    for (int i = 0; i < stencil_size; ++i) {
      r += w[i] * col.rem[base + i];
      p += w[i] * col.wphi[base + i];
    }
    return cplx(0.0, -0.5) * (r - cplx(0.0, 1.0) * p * s);
  }

  // Bisects intervals whose midpoint is not reproduced by interpolation.
  void build(const Greens2DKernel& kernel, Column& col) const {
    const double r = col.window_width;
    const int n0 = std::max(8, int(std::ceil((hi_ - lo_) / 0.25)));
    std::vector<double> nodes;
    for (int i = 0; i <= n0; ++i) {
      double x = lo_ + (hi_ - lo_) * i / n0;
      if (std::abs(x - 1.0) < 10.0 * q_.epsilon) x = 1.0 + (x < 1.0 ? -10.0 : 10.0) * q_.epsilon;
      nodes.push_back(x);
    }
    std::vector<cplx> rem(nodes.size());
    std::vector<double> wphi(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) sample(kernel, r, nodes[i], rem[i], wphi[i]);

    const double floor = 1e-2 / kernel.b();
    constexpr double min_width = 1e-7;
    for (int pass = 0; pass < 40; ++pass) {
      std::vector<double> nn;
      std::vector<cplx> nr;
      std::vector<double> np;
      bool refined = false;
      for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        nn.push_back(nodes[i]);
        nr.push_back(rem[i]);
        np.push_back(wphi[i]);
        const double a = nodes[i], b = nodes[i + 1];
        const double mid = 0.5 * (a + b);
        if (b - a < min_width || std::abs(mid - 1.0) < 10.0 * q_.epsilon) continue;
        Weights w;
        const std::size_t base = stencil(nodes, mid, w);
        cplx ri(0.0, 0.0);
        double pi = 0.0;
        for (int s = 0; s < stencil_size; ++s) {
          ri += w[s] * rem[base + s];
          pi += w[s] * wphi[base + s];
        }
        cplx rd;
        double pd;
        sample(kernel, r, mid, rd, pd);
        // Judge the reconstructed integral, not the remainder: near chi = 1
        // the remainder is much larger than the integral itself.
        const cplx sf = singular_factor(mid);
        const cplx id = rd - cplx(0.0, 1.0) * pd * sf;
        const cplx ii = ri - cplx(0.0, 1.0) * pi * sf;
        const double tol = q_.table_tol * std::max(std::abs(id), floor);
        if (std::abs(ii - id) > tol) {
          nn.push_back(mid);
          nr.push_back(rd);
          np.push_back(pd);
          refined = true;
        }
      }
      nn.push_back(nodes.back());
      nr.push_back(rem.back());
      np.push_back(wphi.back());
      nodes = std::move(nn);
      rem = std::move(nr);
      wphi = std::move(np);
      if (!refined) break;
    }
    col.grid = std::move(nodes);
    col.rem = std::move(rem);
    col.wphi = std::move(wphi);
  }

  double spacing_;
  std::vector<int> ks_;
  double lo_, hi_;
  QuadratureConfig q_;
  std::vector<Greens2DKernel> kernels_;
  std::vector<Column> columns_;
};

/// Tabulates the 2D kernel over a chi grid for the given lattice distances.
inline std::shared_ptr<const Greens2DTable> tabulate_2d(double spacing, std::vector<int> ks,
                                                        double chi_lo, double chi_hi,
                                                        const QuadratureConfig& q = {}) {
  return std::make_shared<const Greens2DTable>(spacing, std::move(ks), chi_lo, chi_hi, q);
}

}  // namespace superrad
