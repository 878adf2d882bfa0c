#pragma once

// Collective decay rates of a probe pair inside a lattice or a homogeneous gas.
//
// With gamma = 1 and the probe at the center (self term excluded):
//   Gamma (1/2 + Gamma) = 2 (a S_abs + rho S_coh),
//   S_abs = Σ_x |g(x)|^2,  S_coh = |Σ_x g(x)|^2,
// where g depends on Gamma through the medium exponent. Gamma_1 and Gamma_2
// are the a- and rho-weighted parts; Gamma_bar_2 = Gamma_2, and Gamma_bar_1
// depends on how the second probe is placed (see Variant).
//
// In 3D the kernel carries exp(xi r), which overflows for dense inverted
// lattices before Gamma has been solved for. All sums are therefore formed
// with g scaled by exp(-xi r_ref), and the self-consistency is solved on
//   ln(Gamma (Gamma + 1/2)) = ln(2 Q_scaled) + 2 xi r_ref.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "superrad/error.hpp"
#include "superrad/geometry.hpp"
#include "superrad/greens.hpp"

namespace superrad {

struct TwoAtomState {
  double a = 1.0;    // average upper-level population
  double n = 1.0;    // two-atom inversion
  double rho = 0.0;  // two-atom coherence rho_eg,ge

  static TwoAtomState inverted() { return {1.0, 1.0, 0.0}; }
  static TwoAtomState ground() { return {0.0, 1.0, 0.0}; }

  void validate() const {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("state: a must lie in [0,1], got " + fmt(a));
    if (!(n >= -1.0 && n <= 1.0)) throw ValidationError("state: n must lie in [-1,1], got " + fmt(n));
    if (!(std::abs(rho) <= 0.5)) throw ValidationError("state: |rho| must not exceed 1/2, got " + fmt(rho));
  }
};

enum class VariantKind { pair, nearest_neighbor, mean, averaged };

/// Placement of the second probe for Gamma_bar_1.
struct Variant {
  VariantKind kind = VariantKind::averaged;
  LatticeVector offset{0, 0, 0};  // second probe, pair variant only

  static Variant pair(LatticeVector r2) { return {VariantKind::pair, r2}; }
  static Variant nearest_neighbor() { return {VariantKind::nearest_neighbor, {1, 0, 0}}; }
  static Variant mean() { return {VariantKind::mean, {0, 0, 0}}; }
  static Variant averaged() { return {VariantKind::averaged, {0, 0, 0}}; }

  bool uses_offset() const { return kind == VariantKind::pair || kind == VariantKind::nearest_neighbor; }
};

inline std::string to_string(VariantKind k) {
  switch (k) {
    case VariantKind::pair: return "pair";
    case VariantKind::nearest_neighbor: return "nn";
    case VariantKind::mean: return "mean";
    case VariantKind::averaged: return "avg";
  }
  return "?";
}

inline VariantKind parse_variant_kind(const std::string& s) {
  if (s == "pair") return VariantKind::pair;
  if (s == "nn") return VariantKind::nearest_neighbor;
  if (s == "mean") return VariantKind::mean;
  if (s == "avg") return VariantKind::averaged;
  throw ValidationError("unknown variant '" + s + "' (expected pair, nn, mean or avg)");
}

struct RateSet {
  double gamma = 1.0;
  double Gamma = 0.0;
  double Gamma_bar = 0.0;
  double Gamma1 = 0.0;
  double Gamma2 = 0.0;
  double Gamma_bar1 = 0.0;
  double Gamma_bar2 = 0.0;
  Variant variant;
  MediumParams medium;
};

/// Lattice sums at one medium exponent. All entries are multiplied by
/// exp(-log_scale); the physical value of each is entry * exp(log_scale).
struct SumCache {
  double S_abs = 0.0;
  double S_coh = 0.0;
  std::vector<cplx> cross;  // Σ_x g(x) g*(r2 - x), one per requested offset
  double log_scale = 0.0;

  double S_abs_physical() const { return S_abs * std::exp(log_scale); }
  double S_coh_physical() const { return S_coh * std::exp(log_scale); }
  cplx cross_physical(std::size_t i) const { return cross.at(i) * std::exp(log_scale); }
};

namespace detail {

/// g at the lattice distances spacing*sqrt(k), k = 0..k_max (entry 0 unused),
/// scaled by exp(-xi r_ref) in 3D.
class KernelRow {
 public:
  void fill_3d(double spacing, double xi, double r_ref, int k_max) {
    values_.assign(std::size_t(k_max) + 1, cplx(0.0, 0.0));
    for (int k = 1; k <= k_max; ++k) {
      const double r = spacing * std::sqrt(double(k));
      const double mag = std::exp(xi * (r - r_ref)) / (2.0 * k0 * r);
      values_[k] = cplx(0.0, -mag) * std::polar(1.0, -k0 * r);
    }
  }

  void fill_2d(const Greens2DTable& table, double chi, const std::vector<int>& ks, int k_max) {
    values_.assign(std::size_t(k_max) + 1, cplx(0.0, 0.0));
    for (int k : ks) values_[k] = table.evaluate_k(k, chi);
  }

  cplx operator[](int k) const { return values_[std::size_t(k)]; }
  int k_max() const { return int(values_.size()) - 1; }

 private:
  std::vector<cplx> values_;
};

inline cplx histogram_sum(const std::vector<PairCount>& hist, const KernelRow& g) {
  cplx s(0.0, 0.0);
  for (const auto& h : hist) s += double(h.count) * g[h.k1] * std::conj(g[h.k2]);
  return s;
}

}  // namespace detail

/// Histogram behind the cross sum of a variant (empty for averaged).
inline std::vector<PairCount> variant_histogram(const AtomSet& atoms, const Variant& variant) {
  if (variant.kind == VariantKind::nearest_neighbor && atoms.radius_index() < 1)
    throw ValidationError("nn variant needs at least one neighbor (n_rad >= 3)");
  if (variant.uses_offset()) {
    const LatticeVector off = variant.offset;
    if (!atoms.contains(off)) throw ValidationError("pair variant: probe offset is not a site of the lattice");
    if (norm2(off) == 0) {
      std::vector<PairCount> h;
      for (const auto& s : atoms.shells) h.push_back({s.k, s.k, s.multiplicity});
      return h;
    }
    return offset_histogram(atoms, off);
  }
  if (variant.kind == VariantKind::mean) return mean_histogram(atoms);
  return {};
}

/// Squared norms k at which the kernel is needed: center shells plus the
/// distances appearing in the cross histogram.
inline std::vector<int> kernel_ks(const AtomSet& atoms, const std::vector<PairCount>& hist) {
  int k_max = 0;
  for (const auto& s : atoms.shells) k_max = std::max(k_max, s.k);
  for (const auto& h : hist) k_max = std::max({k_max, h.k1, h.k2});
  std::vector<char> used(std::size_t(k_max) + 1, 0);
  for (const auto& s : atoms.shells) used[s.k] = 1;
  for (const auto& h : hist) used[h.k1] = used[h.k2] = 1;
  std::vector<int> ks;
  for (int k = 1; k <= k_max; ++k)
    if (used[k]) ks.push_back(k);
  return ks;
}

/// Rates for a finite lattice with the probe at its center.
class LatticeRateModel {
 public:
  LatticeRateModel(AtomSet atoms, Variant variant, QuadratureConfig q = {},
                   std::shared_ptr<const Greens2DTable> table = nullptr)
      : atoms_(std::move(atoms)), variant_(variant), q_(q), table_(std::move(table)) {
    q_.validate();
    cross_hist_ = variant_histogram(atoms_, variant_);
    const int R = atoms_.radius_index();
    k_center_max_ = R * R;
    k_max_ = k_center_max_;
    for (const auto& h : cross_hist_) k_max_ = std::max({k_max_, h.k1, h.k2});
    for (const auto& s : atoms_.shells) center_ks_.push_back(s.k);
    all_ks_ = kernel_ks(atoms_, cross_hist_);

    if (atoms_.dimensionality() == 2 && !atoms_.shells.empty()) {
      if (!table_) table_ = tabulate_2d(atoms_.spacing(), all_ks_, -chi_limit(), chi_limit(), q_);
      if (std::abs(table_->spacing() - atoms_.spacing()) > 1e-12 * atoms_.spacing())
        throw ValidationError("2D kernel table was built for a different spacing");
      for (int k : all_ks_)
        if (table_->column(k) < 0)
          throw ValidationError("2D kernel table lacks distance d*sqrt(" + std::to_string(k) + ")");
    }
  }

  const AtomSet& atoms() const { return atoms_; }
  const Variant& variant() const { return variant_; }
  int dimensionality() const { return atoms_.dimensionality(); }
  double atom_count() const { return double(atoms_.size()); }
  const std::vector<int>& required_ks() const { return all_ks_; }
  std::shared_ptr<const Greens2DTable> table() const { return table_; }

  /// Largest |chi| reachable with a in [0,1] and Gamma >= 0.
  double chi_limit() const { return 2.0 * exponent_scale(atoms_.spacing(), 2); }

  /// Scaled S_abs and S_coh at a given exponent (cross sums omitted).
  SumCache center_sums(double exponent) const {
    detail::KernelRow row;
    const double log_scale = fill(row, exponent, k_center_max_, center_ks_);
    SumCache c;
    c.log_scale = log_scale;
    cplx total(0.0, 0.0);
    for (const auto& s : atoms_.shells) {
      const cplx g = row[s.k];
      c.S_abs += double(s.multiplicity) * std::norm(g);
      total += double(s.multiplicity) * g;
    }
    c.S_coh = std::norm(total);
    return c;
  }

  /// Center sums plus the cross sum of the configured variant.
  SumCache sums(double exponent) const {
    detail::KernelRow row;
    const double log_scale = fill(row, exponent, k_max_, all_ks_);
    SumCache c;
    c.log_scale = log_scale;
    cplx total(0.0, 0.0);
    for (const auto& s : atoms_.shells) {
      const cplx g = row[s.k];
      c.S_abs += double(s.multiplicity) * std::norm(g);
      total += double(s.multiplicity) * g;
    }
    c.S_coh = std::norm(total);
    if (!cross_hist_.empty()) c.cross.push_back(detail::histogram_sum(cross_hist_, row));
    else if (variant_.uses_offset() || variant_.kind == VariantKind::mean) c.cross.push_back(0.0);
    return c;
  }

  double exponent_at(const TwoAtomState& s, double Gamma) const {
    return medium_exponent(s.a, Gamma, atoms_.spacing(), dimensionality()).exponent;
  }

  /// Reference radius of the 3D overflow scaling.
  double r_ref() const { return atoms_.radius_index() * atoms_.spacing(); }

 private:
  double fill(detail::KernelRow& row, double exponent, int k_max, const std::vector<int>& ks) const {
    if (dimensionality() == 3) {
      const double r_ref = exponent > 0.0 ? this->r_ref() : 0.0;
      row.fill_3d(atoms_.spacing(), exponent, r_ref, k_max);
      return 2.0 * exponent * r_ref;
    }
    if (ks.empty()) {
      row.fill_3d(atoms_.spacing(), 0.0, 0.0, 0);
      return 0.0;
    }
    row.fill_2d(*table_, exponent, ks, k_max);
    return 0.0;
  }

  AtomSet atoms_;
  Variant variant_;
  QuadratureConfig q_;
  std::shared_ptr<const Greens2DTable> table_;
  std::vector<PairCount> cross_hist_;
  std::vector<int> center_ks_;
  std::vector<int> all_ks_;
  int k_center_max_ = 0;
  int k_max_ = 0;
};

/// Rates for a homogeneous 3D gas sphere, using the continuum replacement
/// Σ_x -> density ∫ d^3x around the center. Only the averaged variant exists.
class GasRateModel {
 public:
  explicit GasRateModel(GasSpec gas) : gas_(gas) {
    if (gas_.dimensionality != 3) throw ValidationError("gas: only the 3D gas is defined");
    if (!(gas_.density > 0.0)) throw ValidationError("gas: density must be positive");
    if (!(gas_.radius > 0.0)) throw ValidationError("gas: radius must be positive");
  }

  const GasSpec& gas() const { return gas_; }
  Variant variant() const { return Variant::averaged(); }
  int dimensionality() const { return 3; }
  double atom_count() const { return gas_.atom_count(); }
  double spacing() const { return std::cbrt(1.0 / gas_.density); }
  double r_ref() const { return gas_.radius; }

  double exponent_at(const TwoAtomState& s, double Gamma) const {
    return medium_exponent(s.a, Gamma, spacing(), 3).exponent;
  }

  SumCache center_sums(double xi) const {
    const double R = gas_.radius;
    const double pref = std::numbers::pi * gas_.density / (k0 * k0);
    SumCache c;
    const bool scaled = xi > 0.0;
    c.log_scale = scaled ? 2.0 * xi * R : 0.0;
    // ∫_0^R exp(2 xi r) dr, times exp(-2 xi R) when scaled.
    double radial;
    if (std::abs(xi) * R < 1e-12) radial = R;
    else if (scaled) radial = -std::expm1(-2.0 * xi * R) / (2.0 * xi);
    else radial = std::expm1(2.0 * xi * R) / (2.0 * xi);
    c.S_abs = pref * radial;
    // ∫_0^R r exp(c r) dr = [exp(cR)(cR - 1) + 1] / c^2 with c = xi - i k0.
    const cplx cc(xi, -k0);
    const cplx shift = scaled ? std::exp(cplx(0.0, -k0 * R)) : std::exp(cc * R);
    const cplx one = scaled ? cplx(std::exp(-xi * R), 0.0) : cplx(1.0, 0.0);
    const cplx integral = (shift * (cc * R - 1.0) + one) / (cc * cc);
    const cplx total = 2.0 * std::numbers::pi * gas_.density / k0 * cplx(0.0, -1.0) * integral;
    c.S_coh = std::norm(total);
    return c;
  }

  SumCache sums(double xi) const { return center_sums(xi); }

 private:
  GasSpec gas_;
};

/// Self-consistent Gamma for a model exposing center_sums/exponent_at/r_ref.
/// `guess` (if positive) seeds the bracket search.
template <class Model>
double solve_gamma(const Model& model, const TwoAtomState& s, double guess = -1.0) {
  s.validate();
  if (s.a == 0.0 && s.rho == 0.0) return 0.0;

  // ln(2 Q) at a given Gamma, including the overflow scaling; nullopt if Q <= 0.
  auto log_rhs = [&](double Gamma) -> std::optional<double> {
    const SumCache c = model.center_sums(model.exponent_at(s, Gamma));
    const double q = s.a * c.S_abs + s.rho * c.S_coh;
    if (!(q > 0.0)) return std::nullopt;
    return std::log(2.0 * q) + c.log_scale;
  };
  auto residual = [&](double Gamma) {
    const auto r = log_rhs(Gamma);
    if (!r) return 1e3;
    return std::log(Gamma * (Gamma + 0.5)) - *r;
  };

  const SumCache at0 = model.center_sums(model.exponent_at(s, 0.0));
  const double q0 = s.a * at0.S_abs + s.rho * at0.S_coh;
  if (q0 == 0.0) return 0.0;
  // A coherence at roundoff level with a depleted population: no cooperative decay.
  if (q0 < 0.0 && std::abs(s.rho) <= 1e-12) return 0.0;
  if (q0 < 0.0)
    throw NumericalError("solve_gamma: rate sums are negative at Gamma=0 (rho=" + fmt(s.rho) +
                         " < -a regime, a=" + fmt(s.a) + "); no non-negative root");

  double lo, hi, f_lo, f_hi;
  const double start = guess > 0.0 ? guess : 1e-3;
  double x = start;
  double fx = residual(x);
  int iterations = 0;
  constexpr int max_doublings = 2000;
  if (fx < 0.0) {
    lo = x;
    f_lo = fx;
    do {
      x *= 2.0;
      fx = residual(x);
      if (++iterations > max_doublings || !std::isfinite(x))
        throw NumericalError("solve_gamma: no upper bracket found (last Gamma=" + fmt(lo) + ")");
      if (fx < 0.0) {
        lo = x;
        f_lo = fx;
      }
    } while (fx < 0.0);
    hi = x;
    f_hi = fx;
  } else {
    hi = x;
    f_hi = fx;
    do {
      x *= 0.5;
      if (++iterations > max_doublings || x < 1e-300) return 0.0;
      fx = residual(x);
      if (fx >= 0.0) {
        hi = x;
        f_hi = fx;
      }
    } while (fx >= 0.0);
    lo = x;
    f_lo = fx;
  }
  if (f_hi == 0.0) return hi;

  boost::uintmax_t max_iter = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, tol, max_iter);
  if (max_iter >= 200)
    throw NumericalError("solve_gamma: root refinement did not converge; last iterates " + fmt(a) +
                         ", " + fmt(b));
  return 0.5 * (a + b);
}

/// Gamma_bar decomposition given a solved Gamma and the sums at its exponent.
inline void fill_rate_parts(RateSet& r, const TwoAtomState& s, const SumCache& c, double atom_count) {
  const double scale = std::exp(c.log_scale);
  const double denom = 0.5 + r.Gamma;
  const double s_abs = c.S_abs * scale;
  const double s_coh = c.S_coh * scale;
  if (!std::isfinite(s_abs) || !std::isfinite(s_coh))
    throw NumericalError("rate sums overflow at Gamma=" + fmt(r.Gamma));
  r.Gamma1 = 2.0 * s.a * s_abs / denom;
  r.Gamma2 = 2.0 * s.rho * s_coh / denom;
  r.Gamma_bar2 = r.Gamma2;
  switch (r.variant.kind) {
    case VariantKind::pair:
    case VariantKind::nearest_neighbor:
      r.Gamma_bar1 = c.cross.empty() ? 0.0 : 2.0 * s.a * (c.cross[0].real() * scale) / denom;
      break;
    case VariantKind::mean:
      r.Gamma_bar1 = c.cross.empty() ? 0.0 : 2.0 * s.a * (c.cross[0].real() * scale) / denom / atom_count;
      break;
    case VariantKind::averaged:
      r.Gamma_bar1 = 2.0 * s.a * s_coh / denom / atom_count;
      break;
  }
  r.Gamma_bar = r.Gamma_bar1 + r.Gamma_bar2;
}

inline double medium_spacing(const LatticeRateModel& m) { return m.atoms().spacing(); }
inline double medium_spacing(const GasRateModel& m) { return m.spacing(); }

/// Gamma, Gamma_bar and their parts at a state.
template <class Model>
RateSet rates_at(const Model& model, const TwoAtomState& s, double guess = -1.0) {
  RateSet r;
  r.variant = model.variant();
  r.Gamma = solve_gamma(model, s, guess);
  r.medium = medium_exponent(s.a, r.Gamma, medium_spacing(model), model.dimensionality());
  fill_rate_parts(r, s, model.sums(r.medium.exponent), model.atom_count());
  return r;
}

/// Lattice sums at an exponent for arbitrary probe offsets, in physical units.
/// S_abs and S_coh use the center shell table; each cross sum is a direct
/// O(N) loop over the atoms.
inline SumCache lattice_sums(const AtomSet& atoms, const MediumParams& medium,
                             const std::vector<LatticeVector>& probe_offsets,
                             const QuadratureConfig& q = {},
                             std::shared_ptr<const Greens2DTable> table = nullptr) {
  const int dim = atoms.dimensionality();
  if (medium.dimensionality != dim) throw ValidationError("lattice_sums: medium and lattice dimensions differ");
  auto kernel = [&](int k) -> cplx {
    const double r = atoms.spacing() * std::sqrt(double(k));
    if (dim == 3) return greens_3d(r, medium.exponent);
    if (table && table->column(k) >= 0) return table->evaluate_k(k, medium.exponent);
    return greens_2d(r, medium.exponent, q);
  };
  std::vector<cplx> memo;
  std::vector<char> have;
  auto g = [&](int k) -> cplx {
    if (std::size_t(k) >= memo.size()) {
      memo.resize(std::size_t(k) + 1);
      have.resize(std::size_t(k) + 1, 0);
    }
    if (!have[k]) {
      memo[k] = kernel(k);
      have[k] = 1;
    }
    return memo[k];
  };
  SumCache c;
  cplx total(0.0, 0.0);
  for (const auto& s : atoms.shells) {
    const cplx v = g(s.k);
    c.S_abs += double(s.multiplicity) * std::norm(v);
    total += double(s.multiplicity) * v;
  }
  c.S_coh = std::norm(total);
  for (const auto& off : probe_offsets) {
    if (!atoms.contains(off)) throw ValidationError("lattice_sums: probe offset is not a site of the lattice");
    cplx cross(0.0, 0.0);
    for (const auto& x : atoms.positions) {
      const int k1 = norm2(x);
      const int k2 = norm2(off - x);
      if (k1 == 0 || k2 == 0) continue;
      cross += g(k1) * std::conj(g(k2));
    }
    c.cross.push_back(cross);
  }
  return c;
}

}  // namespace superrad
