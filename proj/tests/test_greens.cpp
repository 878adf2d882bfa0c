#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "superrad/greens.hpp"

using namespace superrad;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// -(i/2) I(rho, chi), evaluated independently with 20-digit arithmetic.
struct Reference {
  double rho, chi, re, im;
};
constexpr Reference kReference[] = {
    {0.1, -5, -0.072794311037988379, 0.090185720473410533},
    {0.1, -1, -0.46003418619640222, -0.16574714643542793},
    {0.1, 1.2, 0.8597990230000056, -0.11125023740004007},
    {0.1, 5, 0.085928940818148425, 0.090185720473410533},
    {0.5, -1, 0.036833956023212743, 0.01858458049811056},
    {0.5, 3, 0.0063461759912691535, -0.0011422146173319741},
    {1.3, -2, 0.00063859324847654487, 0.0018015173846465178},
};

}  // namespace

TEST(Greens3D, FreeSpaceClosedForm) {
  for (double r : {0.05, 0.3, 1.0, 4.7}) {
    const cplx expect = cplx(0.0, -1.0) / (2.0 * k0 * r) * std::polar(1.0, -k0 * r);
    EXPECT_LT(rel(greens_3d(r, 0.0), expect), 1e-14);
  }
}

TEST(Greens3D, ExponentScalesMagnitude) {
  const double r = 0.7, xi = 1.3;
  EXPECT_NEAR(std::abs(greens_3d(r, xi)) / std::abs(greens_3d(r, 0.0)), std::exp(xi * r), 1e-12);
  EXPECT_NEAR(std::arg(greens_3d(r, xi)), std::arg(greens_3d(r, 0.0)), 1e-12);
}

TEST(Greens3D, RejectsSelfTerm) { EXPECT_THROW(greens_3d(0.0, 0.0), ValidationError); }

TEST(MediumExponent, SignFollowsInversion) {
  EXPECT_GT(medium_exponent(1.0, 0.0, 0.1, 3).exponent, 0.0);
  EXPECT_LT(medium_exponent(0.0, 0.0, 0.1, 3).exponent, 0.0);
  EXPECT_EQ(medium_exponent(0.5, 3.0, 0.1, 2).exponent, 0.0);
  // Full inversion, no cooperative decay: 2 pi / (k0^2 d^D).
  EXPECT_NEAR(medium_exponent(1.0, 0.0, 0.1, 2).exponent, 2.0 * std::numbers::pi / (k0 * k0 * 0.01), 1e-12);
  EXPECT_THROW(medium_exponent(1.0, -1.0, 0.1, 3), NumericalError);
  EXPECT_THROW(medium_exponent(1.5, 0.0, 0.1, 3), ValidationError);
}

TEST(Greens2D, FreeSpaceSliceAtZeroExponent) {
  const double lo = 0.06, hi = 5.0;
  for (int i = 0; i < 20; ++i) {
    const double r = lo * std::pow(hi / lo, i / 19.0);
    EXPECT_LT(rel(greens_2d(r, 0.0), greens_free(r)), 1e-6) << "rho=" << r;
  }
}

TEST(Greens2D, MatchesHighPrecisionReference) {
  for (const auto& ref : kReference)
    EXPECT_LT(rel(greens_2d(ref.rho, ref.chi), cplx(ref.re, ref.im)), 1e-7) << ref.rho << " " << ref.chi;
}

TEST(Greens2D, IndependentOfRegulator) {
  QuadratureConfig fine, coarse;
  fine.epsilon = 1e-6;
  coarse.epsilon = 1e-3;
  for (double chi : {-8.0, -1.0, 0.0, 0.4, 0.97, 1.5, 6.0}) {
    const cplx a = greens_2d(0.3, chi, fine);
    const cplx b = greens_2d(0.3, chi, coarse);
    EXPECT_LT(rel(a, b), 1e-6) << "chi=" << chi;
  }
}

TEST(Greens2D, AbsorbingMediumDecays) {
  // Negative chi damps the propagator relative to free space at long range.
  EXPECT_LT(std::abs(greens_2d(2.0, -3.0)), std::abs(greens_free(2.0)));
}

TEST(Greens2D, RejectsBadInput) {
  EXPECT_THROW(greens_2d(0.0, 0.0), ValidationError);
  QuadratureConfig bad;
  bad.epsilon = -1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Greens2DTable, InterpolationMatchesDirectEvaluation) {
  const double d = 0.1;
  const double limit = 2.0 * exponent_scale(d, 2);
  const auto table = tabulate_2d(d, {1, 2, 5, 25}, -limit, limit);
  for (int k : {1, 2, 5, 25}) {
    const double r = d * std::sqrt(double(k));
    for (double chi : {-limit, -7.3, -1.0, 0.0, 0.55, 0.999, 1.001, 1.3, 9.1, limit}) {
      const cplx direct = greens_2d(r, chi);
      const cplx tab = table->evaluate_k(k, chi);
      EXPECT_LT(std::abs(tab - direct), 1e-7 * std::max(std::abs(direct), 1e-2)) << "k=" << k << " chi=" << chi;
    }
  }
}

TEST(Greens2DTable, OutOfRangeQueryFails) {
  const auto table = tabulate_2d(0.2, {1}, -1.0, 1.0);
  EXPECT_THROW(table->evaluate_k(1, 3.0), RangeError);
  EXPECT_LT(table->column(2), 0);
}
