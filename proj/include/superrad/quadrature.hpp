#pragma once

// Small quadrature toolkit: composite Gauss-Legendre panels for kernels that
// are tabulated once and reused, a vector-valued adaptive Gauss-Kronrod rule,
// and iterated partial-sum averaging for alternating series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace superrad::quad {

struct Node {
  double x = 0.0;
  double w = 0.0;
};

/// Appends the 12-point Gauss-Legendre nodes of [a, b].
inline void append_gauss_legendre(double a, double b, std::vector<Node>& out) {
  using rule = boost::math::quadrature::gauss<double, 12>;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.push_back({mid - half * x[i], half * w[i]});
    out.push_back({mid + half * x[i], half * w[i]});
  }
}

/// Breakpoints of [a, b] that shrink geometrically (ratio 2) toward the
/// marked ends, down to `finest`, with panels of at most `coarse` elsewhere.
inline std::vector<double> graded_breakpoints(double a, double b, double coarse, double finest,
                                              bool grade_left, bool grade_right) {
  std::vector<double> pts{a, b};
  const double len = b - a;
  auto add_graded = [&](bool from_left) {
    double h = std::min(coarse, 0.25 * len);
    while (h > finest) {
      pts.push_back(from_left ? a + h : b - h);
      h *= 0.5;
    }
  };
  if (grade_left) add_graded(true);
  if (grade_right) add_graded(false);
  const int n_mid = std::max(1, int(std::ceil(len / coarse)));
  for (int i = 1; i < n_mid; ++i) pts.push_back(a + len * i / n_mid);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [&](double p, double q) { return std::abs(p - q) <= 1e-15 * (1.0 + std::abs(p)); }),
            pts.end());
  return pts;
}

inline std::vector<Node> composite_rule(const std::vector<double>& breakpoints) {
  std::vector<Node> nodes;
  nodes.reserve(24 * breakpoints.size());
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    append_gauss_legendre(breakpoints[i], breakpoints[i + 1], nodes);
  return nodes;
}

/// Adaptive Gauss-Kronrod (7/15) for a vector-valued integrand. The first
/// component drives refinement. `f(x, out)` writes all components at x.
template <class F>
void gauss_kronrod_vector(F&& f, double a, double b, double abs_tol, int max_depth,
                          std::span<double> result, std::vector<double>& scratch) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gauss = boost::math::quadrature::gauss<double, 7>;
  const std::size_t m = result.size();
  const auto& xk = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  std::vector<double> acc_k(m, 0.0);
  double acc_g0 = 0.0;
  scratch.resize(m);
  for (std::size_t i = 0; i < xk.size(); ++i) {
    const int reps = (i == 0) ? 1 : 2;
    for (int s = 0; s < reps; ++s) {
      const double x = mid + (s == 0 ? -1.0 : 1.0) * half * xk[i];
      f(x, std::span<double>(scratch));
      for (std::size_t c = 0; c < m; ++c) acc_k[c] += wk[i] * scratch[c];
      if (i % 2 == 0) acc_g0 += wg[i / 2] * scratch[0];
    }
  }
  const double err = std::abs(half * (acc_k[0] - acc_g0));
  if (err > abs_tol && max_depth > 0) {
    gauss_kronrod_vector(f, a, mid, 0.5 * abs_tol, max_depth - 1, result, scratch);
    gauss_kronrod_vector(f, mid, b, 0.5 * abs_tol, max_depth - 1, result, scratch);
    return;
  }
  for (std::size_t c = 0; c < m; ++c) result[c] += half * acc_k[c];
}

/// Iterated averaging of consecutive partial sums (Euler-type transform),
/// applied `depth` times. Returns the last fully averaged entry.
inline double averaged_limit(std::span<const double> partial_sums, int depth) {
  std::vector<double> t(partial_sums.begin(), partial_sums.end());
  const int levels = std::min<int>(depth, int(t.size()) - 1);
  for (int l = 0; l < levels; ++l) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) t[i] = 0.5 * (t[i] + t[i + 1]);
    t.pop_back();
  }
  return t.back();
}

}  // namespace superrad::quad
