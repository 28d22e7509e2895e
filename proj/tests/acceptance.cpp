// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include "angvol/normal_surfaces.hpp"
#include "angvol/outcomes.hpp"
#include "angvol/volume.hpp"
#include "angvol/z2_taut.hpp"
#include "fixtures.hpp"

#include <boost/math/special_functions/polygamma.hpp>

#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace angvol;
using angvol::testing::fixture;
using angvol::testing::fixture_names;
using angvol::testing::smooth_fixture_names;

namespace {

constexpr double pi = std::numbers::pi;

struct Check {
  bool ok = true;
  std::ostringstream why;

  void expect(bool cond, const std::string& what)
  {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

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

RationalMatrix stack(const std::vector<RationalVector>& rows) { return RationalMatrix::from_rows(rows, rows.empty() ? 0 : rows[0].size()); }

// 1
void linear_theory(Check& c)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const std::size_t ne = T.num_edges(), nt = T.num_tets();
    const auto kr = kr_basis(T);
    c.expect(bareiss_rank(stack(kr.stacked())) == ne + nt, name + ": KR rank");
    c.expect(nullspace(matching_matrix(T)).size() == ne + nt, name + ": kernel dimension");
    const auto tas = tas_basis(T);
    c.expect(static_cast<long>(tas.size()) == static_cast<long>(T.num_vertices()) - static_cast<long>(ne) + 2 * static_cast<long>(nt),
             name + ": dim TAS");
    std::vector<RationalVector> proj;
    for (const auto& w : kr.w_edge) proj.push_back(project_quad(w));
    for (const auto& w : kr.w_tet) proj.push_back(project_quad(w));
    c.expect(rank(stack(proj)) == 3 * nt - tas.size(), name + ": dim of quad projection");
    for (const auto& p : proj)
      for (const auto& u : tas) c.expect(dot(p, u) == 0, name + ": orthogonality");
  }
}

// 2
void neumann_zagier(Check& c)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const NZForm w(T);
    for (std::size_t qp = 0; qp < T.num_quads(); ++qp) {
      int s = 0;
      for (std::size_t q = 0; q < T.num_quads(); ++q) s += w(q, qp);
      c.expect(s == 0, name + ": column sum");
    }
    for (std::size_t e = 0; e < T.num_edges(); ++e)
      for (std::size_t ep = 0; ep < T.num_edges(); ++ep) {
        long s = 0;
        for (std::size_t q = 0; q < T.num_quads(); ++q)
          for (std::size_t qp = 0; qp < T.num_quads(); ++qp) s += T.quad_edge_index(q, e) * T.quad_edge_index(qp, ep) * w(q, qp);
        c.expect(s == 0, name + ": edge pairing");
      }
  }
}

// 3
void transpose_identity(Check& c)
{
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> num(-9, 9), den(1, 6);
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const std::size_t n = T.num_edges() + T.num_tets();
    for (int i = 0; i < 100; ++i) {
      RationalVector x(T.num_quads()), h(n);
      for (auto& v : x) v = Rational(num(rng), den(rng));
      for (auto& v : h) v = Rational(num(rng), den(rng));
      c.expect(dot(b_map<Rational>(T, x), h) == dot(x, a_map<Rational>(T, h)), name + ": <Bx,h> != <x,Ah>");
    }
  }
}

// 4
void sas_existence(Check& c)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const auto k = CurvatureAssignment::trivial(T);
    const auto x = find_sas_point(T, k);
    c.expect(sas_member_exact(T, k, *x.theta_over_pi) && sas_residual(T, k, x) < 1e-12, name + ": k = 1");
  }
  const auto F = fixture("figure8");
  for (const auto& a : {std::pair{Rational(1, 2), Rational(1, 2)}, std::pair{Rational(1, 3), Rational(2, 3)},
                        std::pair{Rational(1, 4), Rational(3, 4)}}) {
    const CurvatureAssignment k{{a.first, a.second}};
    const auto x = find_sas_point(F, k);
    c.expect(sas_residual(F, k, x) < 1e-12, "figure8 curvature " + to_string(a.first));
  }
  c.expect(curvature_admissible(F, CurvatureAssignment{{Rational(1, 2), Rational(0)}}).violation ==
               AdmissibilityReport::Violation::global_product,
           "global-product violation not rejected");
  const auto D = fixture("double_tet");
  auto k = CurvatureAssignment::trivial(D);
  k.turning[D.edge_class(0, local::edge_index(0, 1))] = Rational(1, 2);
  k.turning[D.edge_class(0, local::edge_index(2, 3))] = Rational(1, 2);
  c.expect(curvature_admissible(D, k).violation == AdmissibilityReport::Violation::vertex_product, "vertex-product violation not rejected");
}

// 5
void figure_eight_volume(Check& c)
{
  const auto trigamma = [](double x) { return boost::math::polygamma(1, x); };
  const double oracle = 6 * std::sqrt(3.0) / 4 * (trigamma(1.0 / 3) - trigamma(2.0 / 3)) / 9;
  const auto F = fixture("figure8");
  const auto k = CurvatureAssignment::trivial(F);
  const auto rep = maximize(F, k);
  c.expect(rep.classification == Classification::smooth, "not smooth");
  c.expect(std::abs(rep.volume - oracle) < 1e-9, "volume " + std::to_string(rep.volume));
  const auto r = verify_thurston(F, thurston_from_smooth(F, rep.point), k);
  c.expect(r.shape_relation < 1e-8 && r.tet_product < 1e-8 && r.edge_squares < 1e-8, "gluing residuals");
  for (int s : r.edge_signs) c.expect(s == 1, "edge sign");
  c.expect(r.edge_sign_residual < 1e-8, "edge products");
}

// 6
void dichotomy(Check& c)
{
  const auto F = fixture("figure8");
  const auto k = CurvatureAssignment::trivial(F);
  const auto x = exp_move(SASPoint{std::vector<double>(6, pi / 3), {}}, to_doubles(tas_basis(F)[0]), 0.2);
  const auto r = verify_thurston(F, thurston_from_smooth(F, x), k);
  c.expect(r.shape_relation < 1e-10, "shape relation");
  c.expect(r.tet_product < 1e-10, "tet product");
  c.expect(r.edge_squares > 1e-3, "edge equations unexpectedly hold");
}

// 7
void subderivatives(Check& c)
{
  struct Case {
    std::array<double, 3> theta, b;
  };
  const std::vector<Case> cases{{{0.7, 1.1, pi - 1.8}, {0.3, -0.5, 0.2}},
                                {{0.0, 0.0, pi}, {1.0, 1.0, -2.0}},
                                {{0.0, 1.2, pi - 1.2}, {0.4, -0.1, -0.3}}};
  for (const auto& cs : cases) {
    const auto d = tet_subderivative(cs.theta, cs.b);
    auto v = [&](double s) {
      double r = 0;
      for (std::size_t i = 0; i < 3; ++i) r += lobachevsky(cs.theta[i] + s * cs.b[i]);
      return r;
    };
    const double t = 1e-7, h = 1e-10;
    const double numeric = (v(t + h) - v(t - h)) / (2 * h) + d.log_coeff * std::log(t);
    c.expect(std::abs(numeric - d.finite_part) < 1e-5, "numeric slope");
  }
  std::mt19937_64 rng(7);
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const auto rep = maximize(T, CurvatureAssignment::trivial(T));
    const auto cls = classify_point(rep.point, 1e-7);
    for (int i = 0; i < 10; ++i) {
      const auto b = random_tas(tas_basis(T), T.num_quads(), rng);
      double s = 0;
      for (auto q : cls.partially_flat_set) s += b[q];
      c.expect(directional_subderivative(T, rep.point, b).log_coeff == s, name + ": log coefficient");
    }
  }
}

// 8
void certificate_pipeline(Check& c)
{
  const auto D = fixture("double_tet");
  const auto rep = maximize(D, CurvatureAssignment::trivial(D));
  c.expect(rep.classification == Classification::non_smooth && rep.q0.has_value(), "double tet not non-smooth");
  if (rep.q0) {
    const auto cert = two_quad_certificate(D, *rep.q0);
    bool integral = true;
    for (const auto& v : cert.y.stacked()) integral = integral && boost::multiprecision::denominator(v) == 1;
    c.expect(integral, "non-integral certificate");
    c.expect(cert.support_size() <= 2 && cert.y.quad[*rep.q0] != 0, "certificate support");
    c.expect(sns_membership(D, cert.y), "certificate fails matching equations");
  }
  const auto clusters = cluster_detect(D);
  c.expect(clusters.size() == D.num_tets(), "clusters");
  for (const auto& cl : clusters)
    for (const auto& x : cl.certificates) c.expect(sns_membership(D, x.y) && x.support_size() <= 2, "cluster certificate");
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    const auto rr = rigidity_report(T);
    for (std::size_t q = 0; q < T.num_quads(); ++q) {
      bool listed = std::find(rr.angle_rigid.begin(), rr.angle_rigid.end(), q) != rr.angle_rigid.end();
      for (const auto& p : rr.two_angle_rigid) listed = listed || p.q1 == q || p.q2 == q;
      bool ok = true;
      try {
        two_quad_certificate(T, q);
      } catch (const NoCertificateError&) {
        ok = false;
      }
      c.expect(ok == listed, name + ": certificate vs rigidity");
    }
  }
}

// 9
void z2(Check& c)
{
  for (const auto& name : fixture_names()) {
    const auto T = fixture(name);
    std::vector<Z2Taut> brute;
    std::vector<int> ch(T.num_tets(), 0);
    while (true) {
      Z2Taut f{ch};
      if (verify_definition(T, f.values())) brute.push_back(f);
      std::size_t i = ch.size();
      while (i > 0 && ch[i - 1] == 2) ch[--i] = 0;
      if (i == 0) break;
      ++ch[i - 1];
    }
    c.expect(solve_z2_taut(T).solutions == brute, name + ": solver vs brute force");
  }
  for (int m = 0; m < 8; ++m) {
    const std::vector<int> f{m & 1, (m >> 1) & 1, (m >> 2) & 1};
    c.expect(verify_quadratic(f) == one_hot(f), "quadratic form pattern");
  }
  const auto D = fixture("double_tet");
  for (double z : {-1.0, 0.5, 2.0}) {
    const Complex a = z, b = 1 / (1 - z), d = (z - 1) / z;
    c.expect(from_real_solution(D, ThurstonSolution{{a, b, d, a, b, d}}).one_hot, "real sign pattern");
  }
}

// 10
void gradient_check(Check& c)
{
  std::mt19937_64 rng(10);
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
      worst = std::max(worst, std::abs(analytic - (volume(exp_move(x, v, h)) - volume(exp_move(x, v, -h))) / (2 * h)));
    }
    c.expect(worst < 1e-6, name + ": deviation " + std::to_string(worst));
  }
}

}  // namespace

int main()
{
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"exact linear theory (ranks, dimensions, orthogonality)", linear_theory},
      {"Neumann-Zagier identities", neumann_zagier},
      {"B is the transpose of A on random rational pairs", transpose_identity},
      {"circle-valued angle structures exist; inadmissible curvature rejected", sas_existence},
      {"figure-8 volume maximum and gluing equations", figure_eight_volume},
      {"edge equations detect criticality", dichotomy},
      {"one-sided derivatives along flat patterns", subderivatives},
      {"2-quad certificates and clusters on the double tetrahedron", certificate_pipeline},
      {"Z2-taut solver, quadratic form and real sign maps", z2},
      {"volume gradient vs central differences", gradient_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %2zu  %s%s%s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, c.ok ? "" : "  -- ", c.why.str().c_str());
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
