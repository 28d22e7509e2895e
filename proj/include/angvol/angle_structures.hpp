#ifndef ANGVOL_ANGLE_STRUCTURES_HPP
#define ANGVOL_ANGLE_STRUCTURES_HPP

// Tangential angle structures, curvature, and circle-valued angle structures.
//
// The linear map B : R^quads -> R^edges x R^tets sends x to its edge sums
// sum_q i(q,e) x(q) and tetrahedron sums; TAS = ker B. Its transpose A
// parametrises the quad projections of normal surface solutions.
// Vectors over E u T are laid out edges first, then tetrahedra.

#include "angvol/rational.hpp"
#include "angvol/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace angvol {

class CurvatureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class LatticeSearchExhausted : public std::runtime_error {
public:
  LatticeSearchExhausted(int radius, std::size_t candidates)
      : std::runtime_error("lattice search exhausted at L1 radius " + std::to_string(radius) + " after " +
                           std::to_string(candidates) + " candidates"),
        radius(radius), candidates(candidates)
  {
  }
  int radius;
  std::size_t candidates;
};

/// B(x): edge sums then tetrahedron sums.
template <typename Scalar>
std::vector<Scalar> b_map(const Triangulation& tri, std::span<const Scalar> x)
{
  if (x.size() != tri.num_quads()) throw std::invalid_argument("b_map: expected one value per quad");
  const std::size_t ne = tri.num_edges();
  std::vector<Scalar> out(ne + tri.num_tets(), Scalar(0));
  for (std::size_t q = 0; q < x.size(); ++q) {
    if (x[q] == Scalar(0)) continue;
    for (std::size_t e = 0; e < ne; ++e)
      if (const int i = tri.quad_edge_index(q, e)) out[e] += Scalar(i) * x[q];
    out[ne + Triangulation::tet_of_quad(q)] += x[q];
  }
  return out;
}

/// A(h)(q) = h(tet of q) + sum_e i(q,e) h(e).
template <typename Scalar>
std::vector<Scalar> a_map(const Triangulation& tri, std::span<const Scalar> h)
{
  const std::size_t ne = tri.num_edges();
  if (h.size() != ne + tri.num_tets()) throw std::invalid_argument("a_map: expected one value per edge and tet");
  std::vector<Scalar> out(tri.num_quads(), Scalar(0));
  for (std::size_t q = 0; q < out.size(); ++q) {
    out[q] = h[ne + Triangulation::tet_of_quad(q)];
    for (std::size_t e = 0; e < ne; ++e)
      if (const int i = tri.quad_edge_index(q, e)) out[q] += Scalar(i) * h[e];
  }
  return out;
}

/// Matrix of B (rows edges then tets, columns quads).
inline RationalMatrix b_matrix(const Triangulation& tri)
{
  const std::size_t ne = tri.num_edges();
  RationalMatrix m(ne + tri.num_tets(), tri.num_quads());
  for (std::size_t q = 0; q < tri.num_quads(); ++q) {
    for (std::size_t e = 0; e < ne; ++e) m(e, q) = tri.quad_edge_index(q, e);
    m(ne + Triangulation::tet_of_quad(q), q) = 1;
  }
  return m;
}

/// Matrix of A (rows quads, columns edges then tets), built from its own formula.
inline RationalMatrix a_matrix(const Triangulation& tri)
{
  const std::size_t ne = tri.num_edges();
  RationalMatrix m(tri.num_quads(), ne + tri.num_tets());
  for (std::size_t q = 0; q < tri.num_quads(); ++q) {
    m(q, ne + Triangulation::tet_of_quad(q)) = 1;
    for (std::size_t e = 0; e < ne; ++e) m(q, e) = tri.quad_edge_index(q, e);
  }
  return m;
}

/// Exact basis of TAS = ker B.
inline std::vector<RationalVector> tas_basis(const Triangulation& tri) { return nullspace(b_matrix(tri)); }

inline bool is_tangential(const Triangulation& tri, std::span<const Rational> x)
{
  return is_zero(b_map<Rational>(tri, x));
}

/// v_e(r) = sum_q i(q,e) omega(r,q). Lies in TAS for oriented triangulations.
inline RationalVector edge_generator(const Triangulation& tri, std::size_t e)
{
  const NZForm omega(tri);
  RationalVector v(tri.num_quads());
  for (std::size_t q = 0; q < tri.num_quads(); ++q) {
    const int i = tri.quad_edge_index(q, e);
    if (i == 0) continue;
    const std::size_t base = 3 * Triangulation::tet_of_quad(q);
    for (std::size_t r = base; r < base + 3; ++r) v[r] += i * omega(r, q);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Curvature

/// k(e) = exp(2 pi i a(e)), with a(e) kept in [0, 1).
struct CurvatureAssignment {
  RationalVector turning;

  static CurvatureAssignment trivial(const Triangulation& tri) { return {RationalVector(tri.num_edges(), 0)}; }

  static Rational reduce(Rational a)
  {
    const BigInt num = boost::multiprecision::numerator(a), den = boost::multiprecision::denominator(a);
    BigInt fl = num / den;
    if (num < 0 && fl * den != num) fl -= 1;
    return a - Rational(fl);
  }
};

/// Parses `edge <id> <p>/<q>` lines; absent edges get a(e) = 0.
inline CurvatureAssignment parse_curvature(const std::string& text, const Triangulation& tri)
{
  CurvatureAssignment k = CurvatureAssignment::trivial(tri);
  std::vector<bool> seen(tri.num_edges(), false);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string word, value;
    long id = -1;
    if (!(ls >> word >> id >> value) || word != "edge")
      throw InputError("curvature line " + std::to_string(line_no) + ": expected 'edge <id> <p>/<q>'");
    if (id < 0 || static_cast<std::size_t>(id) >= tri.num_edges())
      throw InputError("curvature line " + std::to_string(line_no) + ": no edge " + std::to_string(id));
    if (seen[static_cast<std::size_t>(id)])
      throw InputError("curvature line " + std::to_string(line_no) + ": edge given twice");
    seen[static_cast<std::size_t>(id)] = true;
    try {
      k.turning[static_cast<std::size_t>(id)] = CurvatureAssignment::reduce(parse_rational(value));
    } catch (const std::invalid_argument& e) {
      throw InputError("curvature line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return k;
}

struct AdmissibilityReport {
  enum class Violation { none, global_product, vertex_product };
  bool admissible = true;
  Violation violation = Violation::none;
  std::size_t vertex = 0;  // meaningful for vertex_product
  Rational excess = 0;     // the offending sum, reduced mod 1
};

inline bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

/// prod_e k(e) = 1 and, for each vertex v, prod over edge ends at v of k(e) = 1.
/// Exact over rationals mod 1.
inline AdmissibilityReport curvature_admissible(const Triangulation& tri, const CurvatureAssignment& k)
{
  if (k.turning.size() != tri.num_edges()) throw CurvatureError("curvature must assign every edge class");
  AdmissibilityReport rep;
  Rational total = 0;
  for (const auto& a : k.turning) total += a;
  if (!is_integer(total)) {
    rep.admissible = false;
    rep.violation = AdmissibilityReport::Violation::global_product;
    rep.excess = CurvatureAssignment::reduce(total);
    return rep;
  }
  for (std::size_t v = 0; v < tri.num_vertices(); ++v) {
    Rational s = 0;
    for (std::size_t e = 0; e < tri.num_edges(); ++e) s += tri.edge_ends_at(e, v) * k.turning[e];
    if (!is_integer(s)) {
      rep.admissible = false;
      rep.violation = AdmissibilityReport::Violation::vertex_product;
      rep.vertex = v;
      rep.excess = CurvatureAssignment::reduce(s);
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Circle-valued angle structures

/// Argument representative theta(q) in [0, 2 pi) of a circle-valued angle
/// structure. When produced by construction the exact values theta / pi are
/// kept alongside.
struct SASPoint {
  std::vector<double> theta;
  std::optional<RationalVector> theta_over_pi;

  static SASPoint from_exact(RationalVector over_pi)
  {
    SASPoint p;
    for (auto& r : over_pi) {
      // reduce into [0, 2)
      const Rational half = r / 2;
      r = 2 * CurvatureAssignment::reduce(half);
      p.theta.push_back(to_double(r) * std::numbers::pi);
    }
    p.theta_over_pi = std::move(over_pi);
    return p;
  }
};

inline double wrap_two_pi(double x)
{
  constexpr double two_pi = 2 * std::numbers::pi;
  double r = std::fmod(x, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi) r = 0;
  return r;
}

/// Distance from x to the nearest multiple of 2 pi.
inline double circle_distance(double x)
{
  constexpr double two_pi = 2 * std::numbers::pi;
  return std::abs(x - two_pi * std::round(x / two_pi));
}

/// Largest violation of the tetrahedron and edge congruences, measured mod 2 pi.
inline double sas_residual(const Triangulation& tri, const CurvatureAssignment& k, const SASPoint& x)
{
  const auto sums = b_map<double>(tri, x.theta);
  const std::size_t ne = tri.num_edges();
  double worst = 0;
  for (std::size_t e = 0; e < ne; ++e)
    worst = std::max(worst, circle_distance(sums[e] - 2 * std::numbers::pi * to_double(k.turning[e])));
  for (std::size_t t = 0; t < tri.num_tets(); ++t) worst = std::max(worst, circle_distance(sums[ne + t] - std::numbers::pi));
  return worst;
}

/// Exact congruence test on theta / pi.
inline bool sas_member_exact(const Triangulation& tri, const CurvatureAssignment& k, std::span<const Rational> over_pi)
{
  const auto sums = b_map<Rational>(tri, over_pi);
  const std::size_t ne = tri.num_edges();
  auto even = [](const Rational& r) { return is_integer(r) && boost::multiprecision::numerator(r) % 2 == 0; };
  for (std::size_t e = 0; e < ne; ++e)
    if (!even(sums[e] - 2 * k.turning[e])) return false;
  for (std::size_t t = 0; t < tri.num_tets(); ++t)
    if (!even(sums[ne + t] - 1)) return false;
  return true;
}

struct SasSearchOptions {
  int max_radius = 8;
  std::size_t max_candidates = 4'000'000;
};

namespace detail {

/// All integer vectors of length n with L1 norm r, ordered by L-infinity norm
/// and then lexicographically.
inline std::vector<std::vector<long>> l1_shell(std::size_t n, int r)
{
  std::vector<std::vector<long>> out;
  std::vector<long> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i + 1 == n) {
      cur[i] = left;
      out.push_back(cur);
      if (left != 0) {
        cur[i] = -left;
        out.push_back(cur);
      }
      cur[i] = 0;
      return;
    }
    for (int m = -left; m <= left; ++m) {
      cur[i] = m;
      self(self, i + 1, left - std::abs(m));
    }
    cur[i] = 0;
  };
  if (n == 0) {
    if (r == 0) out.emplace_back();
    return out;
  }
  rec(rec, 0, r);
  auto linf = [](const std::vector<long>& v) {
    long m = 0;
    for (long x : v) m = std::max(m, std::abs(x));
    return m;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    const long la = linf(a), lb = linf(b);
    return la != lb ? la < lb : a < b;
  });
  return out;
}

}  // namespace detail

/// Constructs a point of SAS(T, k).
///
/// Works in units of pi: the targets are tetrahedron sums 1 + 2 n(t) and edge
/// sums 2 a(e) + 2 m(e). Starting from m = 1, n = 0 (the Euclidean targets
/// pi and 2 pi (1 + a(e))), integer offsets are searched in shells of
/// increasing L1 radius until the affine system B(theta) = target is
/// consistent; consistency is tested exactly against a basis of ker(B^t).
/// The minimal-norm solution B^t (B B^t)^+ target is returned, reduced into
/// [0, 2 pi).
inline SASPoint find_sas_point(const Triangulation& tri, const CurvatureAssignment& k, const SasSearchOptions& opts = {})
{
  const auto adm = curvature_admissible(tri, k);
  if (!adm.admissible) throw CurvatureError("inadmissible curvature");
  if (tri.num_tets() == 0) return SASPoint::from_exact({});

  const std::size_t ne = tri.num_edges(), n = ne + tri.num_tets();
  const RationalMatrix bm = b_matrix(tri);
  const RationalMatrix bt = bm.transposed();

  RationalVector base(n);
  for (std::size_t e = 0; e < ne; ++e) base[e] = 2 * k.turning[e] + 2;
  for (std::size_t t = 0; t < tri.num_tets(); ++t) base[ne + t] = 1;

  // For every cokernel vector c: c . (base + 2 delta) = 0, i.e.
  // c_int . delta = -(c_int . base) / 2 with c_int the integer rescaling of c.
  std::vector<std::vector<std::int64_t>> rows;
  std::vector<std::int64_t> targets;
  for (const auto& c : nullspace(bt)) {
    const BigInt l = denominator_lcm(c);
    std::vector<std::int64_t> ci(n);
    RationalVector scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = c[i] * l;
      ci[i] = static_cast<std::int64_t>(boost::multiprecision::numerator(scaled[i]));
    }
    const Rational t = -dot(scaled, base) / 2;
    if (!is_integer(t)) throw LatticeSearchExhausted(0, 0);
    rows.push_back(std::move(ci));
    targets.push_back(static_cast<std::int64_t>(boost::multiprecision::numerator(t)));
  }

  std::size_t tried = 0;
  for (int r = 0; r <= opts.max_radius; ++r) {
    for (const auto& delta : detail::l1_shell(n, r)) {
      if (++tried > opts.max_candidates) throw LatticeSearchExhausted(r, tried - 1);
      bool ok = true;
      for (std::size_t i = 0; i < rows.size() && ok; ++i) {
        std::int64_t s = 0;
        for (std::size_t j = 0; j < n; ++j) s += rows[i][j] * delta[j];
        ok = s == targets[i];
      }
      if (!ok) continue;

      RationalVector rhs = base;
      for (std::size_t j = 0; j < n; ++j) rhs[j] += 2 * delta[j];
      RationalMatrix gram(n, n);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) gram(a, b) = gram(b, a) = dot(bm.row(a), bm.row(b));
      const auto y = solve(gram, rhs);
      if (!y) continue;  // unreachable when the cokernel test passed
      return SASPoint::from_exact(bt * *y);
    }
  }
  throw LatticeSearchExhausted(opts.max_radius, tried);
}

/// theta + t v, reduced mod 2 pi.
inline SASPoint exp_move(const SASPoint& x, std::span<const double> v, double t)
{
  if (v.size() != x.theta.size()) throw std::invalid_argument("exp_move: size mismatch");
  SASPoint out;
  out.theta.resize(v.size());
  for (std::size_t q = 0; q < v.size(); ++q) out.theta[q] = wrap_two_pi(x.theta[q] + t * v[q]);
  return out;
}

/// Exact variant for t = s * pi with rational s; requires exact theta.
inline SASPoint exp_move(const SASPoint& x, std::span<const Rational> v, const Rational& s)
{
  if (!x.theta_over_pi) throw std::invalid_argument("exp_move: exact move needs exact angles");
  if (v.size() != x.theta.size()) throw std::invalid_argument("exp_move: size mismatch");
  RationalVector r = *x.theta_over_pi;
  for (std::size_t q = 0; q < v.size(); ++q) r[q] += s * v[q];
  return SASPoint::from_exact(std::move(r));
}

inline std::vector<double> to_doubles(std::span<const Rational> v)
{
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
  return out;
}

}  // namespace angvol

#endif  // ANGVOL_ANGLE_STRUCTURES_HPP
