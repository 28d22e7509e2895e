#ifndef ANGVOL_NORMAL_SURFACES_HPP
#define ANGVOL_NORMAL_SURFACES_HPP

// Haken's matching equations, the Kang-Rubinstein basis of their solution
// space, and the passage between full normal coordinates and quad
// coordinates. Everything here is exact.

#include "angvol/angle_structures.hpp"
#include "angvol/rational.hpp"
#include "angvol/triangulation.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace angvol {

class NotInProjectionError : public std::runtime_error {
public:
  NotInProjectionError() : std::runtime_error("not in Proj_quad(S_ns): vector is not orthogonal to TAS") {}
};

class NoNonnegativeRepresentative : public std::runtime_error {
public:
  NoNonnegativeRepresentative() : std::runtime_error("no nonnegative representative: negative quad coordinate") {}
};

/// A vector in R^triangles x R^quads.
struct NormalSolution {
  RationalVector tri;
  RationalVector quad;

  static NormalSolution zero(const Triangulation& t) { return {RationalVector(t.num_triangles()), RationalVector(t.num_quads())}; }

  RationalVector stacked() const
  {
    RationalVector v = tri;
    v.insert(v.end(), quad.begin(), quad.end());
    return v;
  }

  NormalSolution& add_scaled(const NormalSolution& o, const Rational& c)
  {
    if (c == 0) return *this;
    for (std::size_t i = 0; i < tri.size(); ++i) tri[i] += c * o.tri[i];
    for (std::size_t i = 0; i < quad.size(); ++i) quad[i] += c * o.quad[i];
    return *this;
  }

  friend bool operator==(const NormalSolution&, const NormalSolution&) = default;
};

/// One row per normal-arc class: x(t) + x(q) - x(q') - x(t') across the face
/// pair carrying the arc. Columns are triangles then quads.
inline RationalMatrix matching_matrix(const Triangulation& T)
{
  const std::size_t nt = T.num_triangles();
  RationalMatrix m(T.num_arcs(), nt + T.num_quads());
  std::vector<bool> done(T.num_arcs(), false);
  for (std::size_t s = 0; s < T.num_tets(); ++s)
    for (int f = 0; f < 4; ++f)
      for (int v = 0; v < 4; ++v) {
        if (v == f) continue;
        const std::size_t a = T.arc_class(s, f, v);
        if (done[a]) continue;
        done[a] = true;
        const auto& g = T.gluing(s, f);
        const int v2 = g.perm[v];
        m(a, Triangulation::tri_id(s, v)) += 1;
        m(a, nt + Triangulation::quad_id(s, local::quad_separating(v, f))) += 1;
        m(a, Triangulation::tri_id(g.tet, v2)) -= 1;
        m(a, nt + Triangulation::quad_id(g.tet, local::quad_separating(v2, g.face))) -= 1;
      }
  return m;
}

inline bool sns_membership(const Triangulation& T, const NormalSolution& x)
{
  return is_zero(matching_matrix(T) * x.stacked());
}

struct KRBasis {
  std::vector<NormalSolution> w_edge;
  std::vector<NormalSolution> w_tet;

  std::vector<RationalVector> stacked() const
  {
    std::vector<RationalVector> rows;
    for (const auto& w : w_edge) rows.push_back(w.stacked());
    for (const auto& w : w_tet) rows.push_back(w.stacked());
    return rows;
  }
};

/// W_e = sum_q i(q,e) q* - sum_t i(t,e) t*,  W_tet = sum_{q in tet} q* - sum_{t in tet} t*.
inline KRBasis kr_basis(const Triangulation& T)
{
  KRBasis b;
  for (std::size_t e = 0; e < T.num_edges(); ++e) {
    auto w = NormalSolution::zero(T);
    for (std::size_t q = 0; q < T.num_quads(); ++q) w.quad[q] = T.quad_edge_index(q, e);
    for (std::size_t t = 0; t < T.num_triangles(); ++t) w.tri[t] = -T.tri_edge_index(t, e);
    b.w_edge.push_back(std::move(w));
  }
  for (std::size_t s = 0; s < T.num_tets(); ++s) {
    auto w = NormalSolution::zero(T);
    for (int k = 0; k < 3; ++k) w.quad[Triangulation::quad_id(s, k)] = 1;
    for (int v = 0; v < 4; ++v) w.tri[Triangulation::tri_id(s, v)] = -1;
    b.w_tet.push_back(std::move(w));
  }
  return b;
}

inline RationalVector project_quad(const NormalSolution& x) { return x.quad; }

/// Exact test z in TAS^perp against a given TAS basis.
inline bool orthogonal_to_tas(const std::vector<RationalVector>& tas, std::span<const Rational> z)
{
  return std::all_of(tas.begin(), tas.end(), [&](const RationalVector& u) { return dot(u, z) == 0; });
}

/// Solves A(h) = z for h over E u T (free variables zero under the
/// left-to-right pivot order) and returns sum h(e) W_e + sum h(tet) W_tet.
inline NormalSolution lift_from_quad(const Triangulation& T, std::span<const Rational> z)
{
  if (z.size() != T.num_quads()) throw std::invalid_argument("lift_from_quad: expected one value per quad");
  if (!orthogonal_to_tas(tas_basis(T), z)) throw NotInProjectionError();
  const auto h = solve(a_matrix(T), z);
  if (!h) throw NotInProjectionError();
  const KRBasis kr = kr_basis(T);
  auto s = NormalSolution::zero(T);
  const std::size_t ne = T.num_edges();
  for (std::size_t e = 0; e < ne; ++e) s.add_scaled(kr.w_edge[e], (*h)[e]);
  for (std::size_t t = 0; t < T.num_tets(); ++t) s.add_scaled(kr.w_tet[t], (*h)[ne + t]);
  return s;
}

/// Normal coordinates of the vertex link: one triangle per corner at v.
inline NormalSolution vertex_link_vector(const Triangulation& T, std::size_t v)
{
  auto x = NormalSolution::zero(T);
  for (std::size_t s = 0; s < T.num_tets(); ++s)
    for (int c = 0; c < 4; ++c)
      if (T.vertex_class(s, c) == v) x.tri[Triangulation::tri_id(s, c)] += 1;
  return x;
}

struct NonnegativeForm {
  NormalSolution solution;
  BigInt scale;                  // k
  std::vector<BigInt> link_multiples;  // m_v
};

/// k s + sum_v m_v lk(v) with the least k > 0 making s integral and the least
/// m_v >= 0 making every triangle coordinate nonnegative. Quad coordinates are
/// untouched by links, so any negative one is an obstruction.
inline NonnegativeForm normalize_to_nonnegative(const Triangulation& T, const NormalSolution& s)
{
  if (std::any_of(s.quad.begin(), s.quad.end(), [](const Rational& x) { return x < 0; })) throw NoNonnegativeRepresentative();
  const BigInt k = denominator_lcm(s.stacked());
  NonnegativeForm out{s, k, std::vector<BigInt>(T.num_vertices(), 0)};
  for (auto& x : out.solution.tri) x *= k;
  for (auto& x : out.solution.quad) x *= k;
  for (std::size_t t = 0; t < T.num_triangles(); ++t) {
    const std::size_t v = T.vertex_class(Triangulation::tet_of_tri(t), static_cast<int>(t % 4));
    if (out.solution.tri[t] < 0) {
      const BigInt need = -boost::multiprecision::numerator(out.solution.tri[t]);
      out.link_multiples[v] = std::max(out.link_multiples[v], need);
    }
  }
  for (std::size_t v = 0; v < T.num_vertices(); ++v)
    if (out.link_multiples[v] != 0) out.solution.add_scaled(vertex_link_vector(T, v), Rational(out.link_multiples[v]));
  return out;
}

struct RigidPair {
  std::size_t q1 = 0;
  std::size_t q2 = 0;
  Rational ratio;  // f_{q1} = ratio * f_{q2} on TAS
};

struct RigidityReport {
  std::vector<std::size_t> angle_rigid;
  std::vector<RigidPair> two_angle_rigid;
};

namespace detail {

/// lambda with a = lambda b, for b nonzero; nullopt when not proportional.
inline std::optional<Rational> proportionality(std::span<const Rational> a, std::span<const Rational> b)
{
  std::size_t i = 0;
  while (i < b.size() && b[i] == 0) ++i;
  if (i == b.size()) return std::nullopt;
  const Rational lambda = a[i] / b[i];
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] != lambda * b[j]) return std::nullopt;
  return lambda;
}

/// Columns of the TAS basis matrix: the coordinate functional of each quad.
inline std::vector<RationalVector> quad_functionals(const Triangulation& T, const std::vector<RationalVector>& tas)
{
  std::vector<RationalVector> cols(T.num_quads(), RationalVector(tas.size()));
  for (std::size_t i = 0; i < tas.size(); ++i)
    for (std::size_t q = 0; q < T.num_quads(); ++q) cols[q][i] = tas[i][q];
  return cols;
}

}  // namespace detail

/// Angle-rigid quads (functional identically zero on TAS), then pairs of
/// nonzero functionals that are proportional.
inline RigidityReport rigidity_report(const Triangulation& T)
{
  const auto cols = detail::quad_functionals(T, tas_basis(T));
  RigidityReport rep;
  std::vector<bool> zero(cols.size());
  for (std::size_t q = 0; q < cols.size(); ++q)
    if ((zero[q] = is_zero(cols[q]))) rep.angle_rigid.push_back(q);
  for (std::size_t a = 0; a < cols.size(); ++a) {
    if (zero[a]) continue;
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      if (zero[b]) continue;
      if (auto l = detail::proportionality(cols[a], cols[b])) rep.two_angle_rigid.push_back({a, b, *l});
    }
  }
  return rep;
}

}  // namespace angvol

#endif  // ANGVOL_NORMAL_SURFACES_HPP
