#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "superrad/rates.hpp"

using namespace superrad;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Relative residual of Gamma (Gamma + 1/2) = 2 (a S_abs + rho S_coh), sums taken at exponent(Gamma).
template <class Model>
double fixed_point_residual(const Model& m, const TwoAtomState& s, double Gamma) {
  const SumCache c = m.center_sums(m.exponent_at(s, Gamma));
  const double rhs = 2.0 * (s.a * c.S_abs_physical() + s.rho * c.S_coh_physical());
  return rel(Gamma * (Gamma + 0.5), rhs);
}

LatticeRateModel lattice(int dim, double d, int n_rad, Variant v = Variant::averaged()) {
  return LatticeRateModel(build_lattice({dim, d, n_rad}), v);
}

}  // namespace

TEST(Rates, SingleAtomHasNoCooperativeDecay) {
  const auto m = lattice(3, 0.1, 1);
  const RateSet r = rates_at(m, TwoAtomState::inverted());
  EXPECT_EQ(r.Gamma, 0.0);
  EXPECT_EQ(r.Gamma_bar, 0.0);
}

TEST(Rates, GroundStateHasNoCooperativeDecay) {
  for (int dim : {2, 3}) {
    const auto m = lattice(dim, 0.1, 9);
    const RateSet r = rates_at(m, TwoAtomState::ground());
    EXPECT_EQ(r.Gamma, 0.0);
    EXPECT_EQ(r.Gamma_bar, 0.0);
  }
}

TEST(Rates, FixedPointResidual3D) {
  const auto m = lattice(3, 0.1, 25);
  for (const TwoAtomState s : {TwoAtomState{1.0, 1.0, 0.0}, TwoAtomState{0.7, 0.3, 0.12}, TwoAtomState{0.2, 0.5, 0.01}}) {
    const double G = solve_gamma(m, s);
    EXPECT_GT(G, 0.0);
    EXPECT_LT(fixed_point_residual(m, s, G), 1e-9);
  }
}

TEST(Rates, FixedPointResidual2D) {
  const auto m = lattice(2, 0.1, 21);
  for (const TwoAtomState s : {TwoAtomState{1.0, 1.0, 0.0}, TwoAtomState{0.6, 0.2, 0.1}, TwoAtomState{0.1, 0.9, 0.0}})
    EXPECT_LT(fixed_point_residual(m, s, solve_gamma(m, s)), 1e-9);
}

TEST(Rates, FixedPointResidualGas) {
  const GasRateModel g(match_gas({3, 0.1, 25}));
  for (const TwoAtomState s : {TwoAtomState{1.0, 1.0, 0.0}, TwoAtomState{0.4, 0.1, 0.05}})
    EXPECT_LT(fixed_point_residual(g, s, solve_gamma(g, s)), 1e-9);
}

TEST(Rates, GuessDoesNotChangeRoot) {
  const auto m = lattice(3, 0.15, 15);
  const TwoAtomState s{0.8, 0.5, 0.05};
  const double a = solve_gamma(m, s);
  EXPECT_NEAR(solve_gamma(m, s, a * 3.0), a, 1e-10 * a);
  EXPECT_NEAR(solve_gamma(m, s, a * 0.01), a, 1e-10 * a);
}

TEST(Rates, PairAtZeroSeparationEqualsGamma1) {
  for (int dim : {2, 3}) {
    const auto m = lattice(dim, 0.1, 11, Variant::pair({0, 0, 0}));
    const TwoAtomState s{0.8, 0.4, 0.05};
    const RateSet r = rates_at(m, s);
    EXPECT_LT(rel(r.Gamma_bar1, r.Gamma1), 1e-12) << "dim " << dim;
  }
}

TEST(Rates, CoherentPartIdentity) {
  const auto m = lattice(3, 0.1, 15);
  const TwoAtomState s{0.6, 0.2, 0.08};
  const RateSet r = rates_at(m, s);
  EXPECT_EQ(r.Gamma_bar2, r.Gamma2);
  EXPECT_LT(rel(r.Gamma_bar1 * m.atom_count() * s.rho / s.a, r.Gamma2), 1e-12);
}

TEST(Rates, GroupedCrossSumsMatchDirectLoops) {
  for (int dim : {2, 3}) {
    const AtomSet atoms = build_lattice({dim, 0.1, 13});
    for (const LatticeVector off : {LatticeVector{1, 0, 0}, LatticeVector{2, 3, 0}, LatticeVector{-4, 1, 0}}) {
      const LatticeRateModel m(atoms, Variant::pair(off));
      for (double x : {-3.0, 0.0, 2.5}) {
        const SumCache grouped = m.sums(x);
        const SumCache direct = lattice_sums(atoms, MediumParams{dim, x, 0.5, 0.0, 0.1}, {off}, {}, m.table());
        EXPECT_LT(std::abs(grouped.cross_physical(0) - direct.cross[0]) / std::abs(direct.cross[0]), 1e-10);
        EXPECT_LT(rel(grouped.S_abs_physical(), direct.S_abs), 1e-10);
        EXPECT_LT(rel(grouped.S_coh_physical(), direct.S_coh), 1e-10);
      }
    }
  }
}

TEST(Rates, MeanVariantMatchesPairAverage) {
  // The mean cross sum is the average of the pair sums over every second probe.
  const AtomSet atoms = build_lattice({3, 0.2, 5});
  const LatticeRateModel mean(atoms, Variant::mean());
  const double x = 1.5;
  cplx total(0.0, 0.0);
  for (const auto& p : atoms.positions) {
    if (norm2(p) == 0) continue;
    total += lattice_sums(atoms, MediumParams{3, x, 0.5, 0.0, 0.2}, {p}).cross[0];
  }
  EXPECT_LT(std::abs(mean.sums(x).cross_physical(0) - total) / std::abs(total), 1e-10);
}

TEST(Rates, PairEnvelopeDecaysWithSeparation2D) {
  const double d = 0.1;
  const AtomSet atoms = build_lattice({2, d, 21});
  std::set<int> ks;
  for (int sep = 1; sep <= 10; ++sep) {
    const auto need = kernel_ks(atoms, variant_histogram(atoms, Variant::pair({sep, 0, 0})));
    ks.insert(need.begin(), need.end());
  }
  const double limit = 2.0 * exponent_scale(d, 2);
  const auto table = tabulate_2d(d, std::vector<int>(ks.begin(), ks.end()), -limit, limit);
  const TwoAtomState s{0.9, 0.6, 0.05};
  double near = 0.0, far = 0.0;
  for (int sep = 1; sep <= 10; ++sep) {
    const LatticeRateModel m(atoms, Variant::pair({sep, 0, 0}), {}, table);
    const double v = std::abs(rates_at(m, s).Gamma_bar1);
    if (sep <= 3) near = std::max(near, v);
    if (sep >= 8) far = std::max(far, v);
  }
  EXPECT_GT(near, far);
}

TEST(Rates, NegativeSumsAreANumericalFailure) {
  const auto m = lattice(3, 0.1, 9);
  EXPECT_THROW(solve_gamma(m, TwoAtomState{0.0, 1.0, -0.2}), NumericalError);
}

TEST(Rates, InvalidStateRejected) {
  const auto m = lattice(3, 0.1, 9);
  EXPECT_THROW(solve_gamma(m, TwoAtomState{1.2, 1.0, 0.0}), ValidationError);
  EXPECT_THROW(solve_gamma(m, TwoAtomState{0.5, 1.0, 0.7}), ValidationError);
}

TEST(Rates, VariantNamesRoundTrip) {
  for (auto k : {VariantKind::pair, VariantKind::nearest_neighbor, VariantKind::mean, VariantKind::averaged})
    EXPECT_EQ(parse_variant_kind(to_string(k)), k);
  EXPECT_THROW(parse_variant_kind("bogus"), ValidationError);
}

TEST(Rates, PairOffsetMustBeALatticeSite) {
  EXPECT_THROW(lattice(3, 0.1, 5, Variant::pair({5, 0, 0})), ValidationError);
  EXPECT_THROW(lattice(2, 0.1, 5, Variant::pair({0, 0, 1})), ValidationError);
}

TEST(Rates, GasMatchesArrayAtInversion) {
  // Continuum and lattice sums of the same density and radius agree closely.
  const auto m = lattice(3, 0.1, 25);
  const GasRateModel g(match_gas({3, 0.1, 25}));
  const double Ga = solve_gamma(m, TwoAtomState::inverted());
  const double Gg = solve_gamma(g, TwoAtomState::inverted());
  EXPECT_LT(rel(Gg, Ga), 0.1);
}
