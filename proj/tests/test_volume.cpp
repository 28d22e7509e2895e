#include "angvol/volume.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace angvol;
using angvol::testing::fixture;
using angvol::testing::fixture_names;
using angvol::testing::smooth_fixture_names;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> random_tas(const std::vector<RationalVector>& tas, std::size_t n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> c(-1, 1);
  std::vector<double> v(n, 0.0);
  for (const auto& u : tas) {
    const double a = c(rng);
    for (std::size_t q = 0; q < n; ++q) v[q] += a * to_double(u[q]);
  }
  return v;
}

/// A point of SAS(T, 1) with every |sin theta| >= 0.05.
SASPoint smooth_point(const Triangulation& T, std::mt19937_64& rng)
{
  const auto x = find_sas_point(T, CurvatureAssignment::trivial(T));
  const auto tas = tas_basis(T);
  for (int tries = 0; tries < 1000; ++tries) {
    const auto y = exp_move(x, random_tas(tas, T.num_quads(), rng), 1.0);
    bool ok = true;
    for (double t : y.theta) ok = ok && std::abs(std::sin(t)) >= 0.05;
    if (ok) return y;
  }
  throw std::runtime_error("no smooth point found");
}

SASPoint point(std::vector<double> theta) { return SASPoint{std::move(theta), {}}; }

/// Central difference of the volume of one tetrahedron along theta + t b,
/// with the -log_coeff ln t term removed.
double numeric_tet_slope(const std::array<double, 3>& th, const std::array<double, 3>& b, double log_coeff, double t, double h)
{
  auto v = [&](double s) {
    double r = 0;
    for (std::size_t i = 0; i < 3; ++i) r += lobachevsky(th[i] + s * b[i]);
    return r;
  };
  return (v(t + h) - v(t - h)) / (2 * h) + log_coeff * std::log(t);
}

}  // namespace

TEST(Volume, FigureEightRegularPoint)
{
  const auto v = volume(point(std::vector<double>(6, pi / 3)));
  EXPECT_NEAR(v, 6 * lobachevsky(pi / 3), 1e-15);
  EXPECT_NEAR(v, 2.029883212819307, 1e-12);
}

TEST(Volume, FlatPointsHaveZeroVolume)
{
  EXPECT_NEAR(volume(point({0, pi, pi, 0, 0, pi})), 0.0, 1e-15);
}

TEST(Volume, InvariantUnderAddingPiToOneQuad)
{
  std::mt19937_64 rng(4);
  const auto T = fixture("random4");
  const auto x = smooth_point(T, rng);
  for (std::size_t q = 0; q < x.theta.size(); ++q) {
    auto y = x;
    y.theta[q] = wrap_two_pi(y.theta[q] + pi);
    EXPECT_NEAR(volume(y), volume(x), 1e-13);
  }
}

TEST(Volume, BoundedByRegularMaximum)
{
  std::mt19937_64 rng(6);
  for (const auto& name : smooth_fixture_names()) {
    const auto T = fixture(name);
    for (int i = 0; i < 20; ++i) EXPECT_LE(std::abs(volume(smooth_point(T, rng))), volume_bound(T) + 1e-12) << name;
  }
}

TEST(Volume, IncrementMatchesPlainDifference)
{
  std::mt19937_64 rng(12);
  const auto T = fixture("random5");
  const auto x = smooth_point(T, rng);
  const auto d = random_tas(tas_basis(T), T.num_quads(), rng);
  for (double t : {1e-1, 1e-3, 1e-6}) {
    const double plain = volume(exp_move(x, d, t)) - volume(x);
    EXPECT_NEAR(volume_increment(x.theta, d, t), plain, 1e-13);
  }
}

TEST(Gradient, ConstantAtRegularFigureEightPointAndCritical)
{
  const auto F = fixture("figure8");
  const auto x = point(std::vector<double>(6, pi / 3));
  const auto g = smooth_gradient(x);
  for (double v : g) EXPECT_NEAR(v, -std::log(std::sqrt(3.0) / 2), 1e-15);
  for (const auto& u : tas_basis(F)) {
    double s = 0;
    for (std::size_t q = 0; q < g.size(); ++q) s += g[q] * to_double(u[q]);
    EXPECT_NEAR(s, 0.0, 1e-15);
  }
}

TEST(Gradient, ZeroExactlyWhenAllSinesAreOne)
{
  for (double v : smooth_gradient(point(std::vector<double>(6, pi / 2)))) EXPECT_NEAR(v, 0.0, 1e-15);
  const auto g = smooth_gradient(point({pi / 2, pi / 2, pi / 3}));
  EXPECT_GT(std::abs(g[2]), 0.1);
}

TEST(Gradient, RejectsFlatPoints)
{
  EXPECT_THROW(smooth_gradient(point({0.0, 1.0, pi - 1.0})), NonSmoothPointError);
}

TEST(Gradient, MatchesCentralDifferences)
{
  std::mt19937_64 rng(101);
  for (const auto& name : smooth_fixture_names()) {
    const auto T = fixture(name);
    const auto tas = tas_basis(T);
    const auto x = smooth_point(T, rng);
    const auto g = smooth_gradient(x);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      const auto v = random_tas(tas, T.num_quads(), rng);
      double analytic = 0;
      for (std::size_t q = 0; q < v.size(); ++q) analytic += g[q] * v[q];
      const double h = 1e-5;
      const double fd = (volume(exp_move(x, v, h)) - volume(exp_move(x, v, -h))) / (2 * h);
      worst = std::max(worst, std::abs(analytic - fd));
    }
    EXPECT_LT(worst, 1e-6) << name;
  }
}

TEST(Classify, RegularPointIsSmooth)
{
  const auto c = classify_point(point(std::vector<double>(6, pi / 3)), 1e-7);
  EXPECT_TRUE(c.smooth());
  EXPECT_TRUE(c.partially_flat_set.empty());
  EXPECT_TRUE(c.flat_tets.empty());
  EXPECT_TRUE(c.partially_flat_tets.empty());
}

TEST(Classify, PartiallyFlatPattern)
{
  const auto c = classify_point(point({0.0, 1.0, pi - 1.0, pi / 3, pi / 3, pi / 3}), 1e-7);
  EXPECT_EQ(c.flat_quads, (std::vector<std::size_t>{0}));
  EXPECT_EQ(c.partially_flat_set, (std::vector<std::size_t>{0}));
  EXPECT_EQ(c.partially_flat_tets, (std::vector<std::size_t>{0}));
  EXPECT_TRUE(c.flat_tets.empty());
}

TEST(Classify, FlatPattern)
{
  const auto c = classify_point(point({pi / 3, pi / 3, pi / 3, 0.0, 0.0, pi}), 1e-7);
  EXPECT_EQ(c.flat_quads, (std::vector<std::size_t>{3, 4, 5}));
  EXPECT_TRUE(c.partially_flat_set.empty());
  EXPECT_EQ(c.flat_tets, (std::vector<std::size_t>{1}));
}

TEST(Subderivative, FlatTetrahedronContribution)
{
  const auto d = tet_subderivative({0.0, 0.0, pi}, {1, 1, -2});
  EXPECT_EQ(d.log_coeff, 0.0);
  EXPECT_NEAR(d.finite_part, 2 * std::log(2.0), 1e-15);
}

TEST(Subderivative, SmoothPointIsGradientPairing)
{
  std::mt19937_64 rng(31);
  for (const auto& name : smooth_fixture_names()) {
    const auto T = fixture(name);
    const auto x = smooth_point(T, rng);
    const auto b = random_tas(tas_basis(T), T.num_quads(), rng);
    const auto d = directional_subderivative(T, x, b);
    const auto g = smooth_gradient(x);
    double s = 0;
    for (std::size_t q = 0; q < b.size(); ++q) s += g[q] * b[q];
    EXPECT_EQ(d.log_coeff, 0.0);
    EXPECT_NEAR(d.finite_part, s, 1e-12) << name;
  }
}

TEST(Subderivative, ZeroDirection)
{
  const auto T = fixture("double_tet");
  const auto d = directional_subderivative(T, find_sas_point(T, CurvatureAssignment::trivial(T)), std::vector<double>(6, 0.0));
  EXPECT_EQ(d.log_coeff, 0.0);
  EXPECT_EQ(d.finite_part, 0.0);
}

TEST(Subderivative, RejectsNonTangentDirection)
{
  const auto T = fixture("figure8");
  std::vector<double> b(6, 0.0);
  b[0] = 1;
  EXPECT_THROW(directional_subderivative(T, point(std::vector<double>(6, pi / 3)), b), NotTangentError);
}

TEST(Subderivative, MatchesNumericDerivativeInAllThreeCases)
{
  struct Case {
    std::array<double, 3> theta, b;
  };
  const std::vector<Case> cases{
      {{0.7, 1.1, pi - 1.8}, {0.3, -0.5, 0.2}},    // no flat quad
      {{0.0, 0.0, pi}, {1.0, 1.0, -2.0}},          // flat
      {{pi, pi, pi}, {0.5, -0.2, -0.3}},           // flat
      {{0.0, 1.2, pi - 1.2}, {0.4, -0.1, -0.3}},   // one flat quad, log term +
      {{pi, 0.5, -0.5}, {-0.6, 0.25, 0.35}},       // one flat quad, log term -
  };
  for (const auto& c : cases) {
    const auto d = tet_subderivative(c.theta, c.b);
    const double t = 1e-7;
    const double numeric = numeric_tet_slope(c.theta, c.b, d.log_coeff, t, 1e-10);
    EXPECT_NEAR(numeric, d.finite_part, 1e-5);
  }
}

TEST(Subderivative, LogCoefficientIsSumOverPartiallyFlatSet)
{
  std::mt19937_64 rng(77);
  // folded3 has an angle-rigid quad, so its maximiser is partially flat
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const auto tas = tas_basis(T);
    OptimizeOptions o;
    o.multistart = 2;
    const auto rep = maximize(T, CurvatureAssignment::trivial(T), o);
    const auto cls = classify_point(rep.point, o.eps_flat);
    for (int i = 0; i < 10; ++i) {
      const auto b = random_tas(tas, T.num_quads(), rng);
      double s = 0;
      for (auto q : cls.partially_flat_set) s += b[q];
      EXPECT_EQ(directional_subderivative(T, rep.point, b).log_coeff, s) << name;
    }
  }
}

TEST(Maximize, FigureEightReachesRegularVolume)
{
  const auto F = fixture("figure8");
  const auto rep = maximize(F, CurvatureAssignment::trivial(F));
  EXPECT_EQ(rep.classification, Classification::smooth);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.volume, 6 * lobachevsky(pi / 3), 1e-9);
  EXPECT_LT(rep.gradient_residual, 1e-9);
  EXPECT_LT(sas_residual(F, CurvatureAssignment::trivial(F), rep.point), 1e-12);
}

TEST(Maximize, DoubleTetIsNonSmoothWithAllQuadsFlat)
{
  const auto D = fixture("double_tet");
  const auto rep = maximize(D, CurvatureAssignment::trivial(D));
  EXPECT_EQ(rep.classification, Classification::non_smooth);
  EXPECT_EQ(rep.flats.flat_quads, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_TRUE(rep.flats.partially_flat_set.empty());
  EXPECT_EQ(rep.flats.flat_tets, (std::vector<std::size_t>{0, 1}));
  ASSERT_TRUE(rep.q0.has_value());
  EXPECT_EQ(*rep.q0, 0u);
  EXPECT_TRUE(rep.log_coefficient_identity);
  EXPECT_LT(rep.subderivative_residual, 1e-9);
}

TEST(Maximize, ReportInvariants)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const auto k = CurvatureAssignment::trivial(T);
    std::vector<CriticalReport> runs;
    const auto rep = maximize(T, k, {}, &runs);
    EXPECT_EQ(rep.classification == Classification::smooth, rep.flats.flat_quads.empty()) << name;
    for (auto q : rep.flats.partially_flat_set)
      EXPECT_NE(std::find(rep.flats.flat_quads.begin(), rep.flats.flat_quads.end(), q), rep.flats.flat_quads.end());
    if (rep.q0) {
      EXPECT_NE(std::find(rep.flats.flat_quads.begin(), rep.flats.flat_quads.end(), *rep.q0), rep.flats.flat_quads.end());
    }
    EXPECT_LT(sas_residual(T, k, rep.point), 1e-10) << name;
    EXPECT_LE(rep.volume, volume_bound(T));
    if (rep.classification == Classification::smooth) {
      EXPECT_LT(rep.gradient_residual, 1e-9) << name;
    } else {
      EXPECT_TRUE(rep.log_coefficient_identity) << name;
      EXPECT_LT(rep.subderivative_residual, 1e-8) << name;
    }
    // best over runs, lowest run on ties
    for (const auto& r : runs)
      if (r.converged) {
        EXPECT_LE(r.volume, rep.volume + 1e-12) << name;
        if (r.run < rep.run) { EXPECT_LT(r.volume, rep.volume + 1e-12); }
      }
  }
}

TEST(Maximize, AscentNeverDecreasesVolume)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    std::vector<CriticalReport> runs;
    maximize(T, CurvatureAssignment::trivial(T), {}, &runs);
    for (const auto& r : runs)
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        EXPECT_GE(r.trace[i].delta, 0.0) << name;
        EXPECT_GE(r.trace[i].volume, r.trace[i - 1].volume - 1e-12) << name << " run " << r.run << " step " << i;
      }
  }
}

TEST(Maximize, DeterministicAcrossRunsAndThreading)
{
  const auto T = fixture("random6");
  const auto k = CurvatureAssignment::trivial(T);
  OptimizeOptions a;
  a.seed = 7;
  OptimizeOptions b = a;
  b.parallel = false;
  const auto r1 = maximize(T, k, a), r2 = maximize(T, k, a), r3 = maximize(T, k, b);
  EXPECT_EQ(r1.point.theta, r2.point.theta);
  EXPECT_EQ(r1.point.theta, r3.point.theta);
  EXPECT_EQ(r1.run, r3.run);
}

TEST(Maximize, IterationCapReportsNonConvergence)
{
  const auto T = fixture("folded3");
  OptimizeOptions o;
  o.max_iters = 1;
  o.multistart = 1;
  EXPECT_THROW(maximize(T, CurvatureAssignment::trivial(T), o), ConvergenceError);
}

TEST(Maximize, InadmissibleCurvature)
{
  const auto F = fixture("figure8");
  EXPECT_THROW(maximize(F, CurvatureAssignment{{Rational(1, 2), Rational(0)}}), CurvatureError);
}
