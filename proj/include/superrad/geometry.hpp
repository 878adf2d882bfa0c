#pragma once

// Finite square-lattice atom sets (3D ball, 2D disk) and the integer-norm
// shell tables used to evaluate lattice sums in O(#shells).
//
// Every length is in units of the transition wavelength. Positions are kept
// as integer lattice vectors; the physical position is spacing * n.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "superrad/error.hpp"

namespace superrad {

using LatticeVector = std::array<int, 3>;

enum class Shape { ball, disk };

inline int norm2(const LatticeVector& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

inline LatticeVector operator-(const LatticeVector& x, const LatticeVector& y) {
  return {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
}

struct LatticeSpec {
  int dimensionality = 3;
  double spacing = 0.1;
  int n_rad = 1;  // sites across a diameter, odd

  Shape shape() const { return dimensionality == 3 ? Shape::ball : Shape::disk; }
  int radius_index() const { return (n_rad - 1) / 2; }

  void validate() const {
    if (dimensionality != 2 && dimensionality != 3)
      throw ValidationError("dimensionality must be 2 or 3, got " + std::to_string(dimensionality));
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw ValidationError("lattice spacing must be a positive finite length");
    if (n_rad < 1) throw ValidationError("n_rad must be >= 1, got " + std::to_string(n_rad));
    if (n_rad % 2 == 0)
      throw ValidationError("n_rad must be odd so that a center site exists, got " +
                            std::to_string(n_rad));
  }
};

/// One distance class around an origin: all sites with |n|^2 == k.
struct Shell {
  int k = 0;               // squared integer norm
  double distance = 0.0;   // spacing * sqrt(k)
  std::int64_t multiplicity = 0;
};

using ShellTable = std::vector<Shell>;

/// Joint multiplicity of (|x - r1|^2, |x - r2|^2) over a set of sites x.
struct PairCount {
  int k1 = 0;
  int k2 = 0;
  std::int64_t count = 0;
};

struct AtomSet {
  LatticeSpec spec;
  std::vector<LatticeVector> positions;  // center-origin
  ShellTable shells;                     // around the center site

  std::size_t size() const { return positions.size(); }
  int radius_index() const { return spec.radius_index(); }
  double spacing() const { return spec.spacing; }
  int dimensionality() const { return spec.dimensionality; }

  bool contains(const LatticeVector& v) const {
    if (spec.dimensionality == 2 && v[2] != 0) return false;
    const int r = radius_index();
    return norm2(v) <= r * r;
  }
};

struct GasSpec {
  double density = 1.0;  // atoms per wavelength^3
  double radius = 1.0;
  int dimensionality = 3;

  /// Equivalent atom count of the sphere.
  double atom_count() const { return density * 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }
};

namespace detail {

inline ShellTable shells_from_counts(const std::map<int, std::int64_t>& counts, double spacing) {
  ShellTable out;
  out.reserve(counts.size());
  for (const auto& [k, m] : counts) out.push_back({k, spacing * std::sqrt(double(k)), m});
  return out;
}

}  // namespace detail

/// Shell table of every other atom as seen from `origin`.
inline ShellTable shells_from(const AtomSet& atoms, const LatticeVector& origin) {
  if (!atoms.contains(origin))
    throw ValidationError("shells_from: origin is not a site of the atom set");
  std::map<int, std::int64_t> counts;
  for (const auto& p : atoms.positions) {
    const int k = norm2(p - origin);
    if (k != 0) ++counts[k];
  }
  return detail::shells_from_counts(counts, atoms.spacing());
}

inline AtomSet build_lattice(const LatticeSpec& spec) {
  spec.validate();
  AtomSet set;
  set.spec = spec;
  const int r = spec.radius_index();
  const int r2 = r * r;
  const int zmax = spec.dimensionality == 3 ? r : 0;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -zmax; z <= zmax; ++z)
        if (x * x + y * y + z * z <= r2) set.positions.push_back({x, y, z});

  std::map<int, std::int64_t> counts;
  for (const auto& p : set.positions) {
    const int k = norm2(p);
    if (k != 0) ++counts[k];
  }
  set.shells = detail::shells_from_counts(counts, spec.spacing);
  return set;
}

/// Homogeneous sphere with the same density and radius as the 3D array.
inline GasSpec match_gas(const LatticeSpec& spec) {
  spec.validate();
  if (spec.dimensionality != 3)
    throw ValidationError("match_gas: the homogeneous-gas comparison is only defined in 3D");
  const double d = spec.spacing;
  return GasSpec{1.0 / (d * d * d), spec.radius_index() * d, 3};
}

/// Histogram of (|x|^2, |offset - x|^2) over x in the set, x != 0, x != offset.
/// Underlies the cross sum Σ_x g(x) g*(offset - x).
inline std::vector<PairCount> offset_histogram(const AtomSet& atoms, const LatticeVector& offset) {
  if (!atoms.contains(offset))
    throw ValidationError("probe offset is not a site of the lattice");
  std::map<std::pair<int, int>, std::int64_t> counts;
  for (const auto& x : atoms.positions) {
    const int k1 = norm2(x);
    const int k2 = norm2(offset - x);
    if (k1 == 0 || k2 == 0) continue;
    ++counts[{k1, k2}];
  }
  std::vector<PairCount> out;
  out.reserve(counts.size());
  for (const auto& [key, c] : counts) out.push_back({key.first, key.second, c});
  return out;
}

/// Histogram of (|x|^2, |y - x|^2) over all ordered pairs x != 0, y != 0, y != x.
/// Groups the O(N^2) double sum behind the arithmetic-mean cross rate.
inline std::vector<PairCount> mean_histogram(const AtomSet& atoms) {
  const int r = atoms.radius_index();
  const int k1_max = r * r;
  const int k2_max = 4 * r * r;
  std::vector<std::int64_t> dense(std::size_t(k1_max + 1) * std::size_t(k2_max + 1), 0);
  const auto& pos = atoms.positions;
  for (const auto& x : pos) {
    const int k1 = norm2(x);
    if (k1 == 0) continue;
    std::int64_t* row = dense.data() + std::size_t(k1) * std::size_t(k2_max + 1);
    for (const auto& y : pos) {
      const int k2 = norm2(y - x);
      if (k2 == 0 || (y[0] == 0 && y[1] == 0 && y[2] == 0)) continue;
      ++row[k2];
    }
  }
  std::vector<PairCount> out;
  for (int k1 = 1; k1 <= k1_max; ++k1)
    for (int k2 = 1; k2 <= k2_max; ++k2) {
      const auto c = dense[std::size_t(k1) * std::size_t(k2_max + 1) + std::size_t(k2)];
      if (c != 0) out.push_back({k1, k2, c});
    }
  return out;
}

/// Debug dump, columns x,y,z in wavelengths.
inline void write_positions_csv(std::ostream& os, const AtomSet& atoms) {
  os << "x,y,z\n";
  const double d = atoms.spacing();
  char buf[96];
  for (const auto& p : atoms.positions) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", d * p[0], d * p[1], d * p[2]);
    os << buf;
  }
}

}  // namespace superrad
