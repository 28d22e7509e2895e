#ifndef ANGVOL_Z2_TAUT_HPP
#define ANGVOL_Z2_TAUT_HPP

// Z2-taut structures: one quad per tetrahedron marked 1, with every edge
// meeting an even (index-weighted) number of marked quads.

#include "angvol/outcomes.hpp"
#include "angvol/rational.hpp"
#include "angvol/triangulation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace angvol {

class NotRealError : public std::runtime_error {
public:
  NotRealError() : std::runtime_error("not real-valued") {}
};

class NotTautError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// f as the chosen quad (0, 1, 2) in each tetrahedron.
struct Z2Taut {
  std::vector<int> choice;

  std::vector<int> values() const
  {
    std::vector<int> f(3 * choice.size(), 0);
    for (std::size_t t = 0; t < choice.size(); ++t) f[3 * t + static_cast<std::size_t>(choice[t])] = 1;
    return f;
  }

  friend bool operator==(const Z2Taut&, const Z2Taut&) = default;
  friend auto operator<=>(const Z2Taut&, const Z2Taut&) = default;
};

enum class Z2Mode { first, all };
enum class Z2Status { complete, budget_exhausted };

struct Z2Result {
  std::vector<Z2Taut> solutions;
  Z2Status status = Z2Status::complete;
  std::uint64_t nodes = 0;
};

/// Per tetrahedron: exactly one quad carries 1.
inline bool one_hot(std::span<const int> f)
{
  for (std::size_t t = 0; 3 * t < f.size(); ++t)
    if (f[3 * t] + f[3 * t + 1] + f[3 * t + 2] != 1) return false;
  return true;
}

/// Per edge: sum_q i(q,e) f(q) is even.
inline bool edge_parity(const Triangulation& tri, std::span<const int> f, std::vector<std::size_t>* bad_edges = nullptr)
{
  bool ok = true;
  for (std::size_t e = 0; e < tri.num_edges(); ++e) {
    int s = 0;
    for (std::size_t q = 0; q < f.size(); ++q) s += tri.quad_edge_index(q, e) * f[q];
    if (s % 2 != 0) {
      ok = false;
      if (bad_edges) bad_edges->push_back(e);
    }
  }
  return ok;
}

/// Both defining conditions, exactly.
inline bool verify_definition(const Triangulation& tri, std::span<const int> f)
{
  for (int v : f)
    if (v != 0 && v != 1) return false;
  return f.size() == tri.num_quads() && one_hot(f) && edge_parity(tri, f);
}

/// Per tetrahedron over Z2: f1 + f2 + f3 = 1 and f1 f2 + f1 f3 + f2 f3 = 0
/// (unordered pairs).
inline bool verify_quadratic(std::span<const int> f)
{
  for (std::size_t t = 0; 3 * t < f.size(); ++t) {
    const int a = f[3 * t] & 1, b = f[3 * t + 1] & 1, c = f[3 * t + 2] & 1;
    if (((a + b + c) & 1) != 1) return false;
    if (((a * b + a * c + b * c) & 1) != 0) return false;
  }
  return true;
}

namespace detail {

class Z2Search {
public:
  Z2Search(const Triangulation& tri, Z2Mode mode, std::uint64_t budget) : n_(tri.num_tets()), mode_(mode), budget_(budget)
  {
    // parity[e][t] bit k: i(quad k of t, e) is odd
    for (std::size_t e = 0; e < tri.num_edges(); ++e) {
      std::vector<std::pair<std::size_t, std::uint8_t>> row;
      for (std::size_t t = 0; t < n_; ++t) {
        std::uint8_t bits = 0;
        for (int k = 0; k < 3; ++k)
          if (tri.quad_edge_index(Triangulation::quad_id(t, k), e) % 2) bits |= static_cast<std::uint8_t>(1u << k);
        if (bits) row.emplace_back(t, bits);
      }
      edges_.push_back(std::move(row));
    }
  }

  Z2Result run()
  {
    std::vector<std::uint8_t> dom(n_, 7);
    if (propagate(dom)) dfs(dom);
    return std::move(result_);
  }

private:
  static int popcount(std::uint8_t d) { return (d & 1) + ((d >> 1) & 1) + ((d >> 2) & 1); }

  /// Edge-parity unit propagation on domains. False on conflict.
  bool propagate(std::vector<std::uint8_t>& dom) const
  {
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& row : edges_) {
        int parity = 0, free = 0;
        std::size_t last = 0;
        for (const auto& [t, bits] : row) {
          const std::uint8_t odd = dom[t] & bits, even = dom[t] & static_cast<std::uint8_t>(~bits);
          if (!odd) continue;
          if (!even) {
            parity ^= 1;
            continue;
          }
          ++free;
          last = t;
        }
        if (free == 0) {
          if (parity) return false;
        } else if (free == 1) {
          std::uint8_t bits = 0;
          for (const auto& [t, b] : row)
            if (t == last) bits = b;
          dom[last] &= parity ? bits : static_cast<std::uint8_t>(~bits & 7);
          if (!dom[last]) return false;
          changed = true;
        }
      }
    }
    return true;
  }

  void dfs(std::vector<std::uint8_t>& dom)
  {
    if (result_.status == Z2Status::budget_exhausted) return;
    if (mode_ == Z2Mode::first && !result_.solutions.empty()) return;
    if (++result_.nodes > budget_) {
      result_.status = Z2Status::budget_exhausted;
      return;
    }
    std::size_t t = 0;
    while (t < n_ && popcount(dom[t]) == 1) ++t;
    if (t == n_) {
      Z2Taut s;
      for (auto d : dom) s.choice.push_back(d == 1 ? 0 : d == 2 ? 1 : 2);
      result_.solutions.push_back(std::move(s));
      return;
    }
    for (int k = 0; k < 3; ++k) {
      if (!(dom[t] & (1u << k))) continue;
      auto next = dom;
      next[t] = static_cast<std::uint8_t>(1u << k);
      if (propagate(next)) dfs(next);
      if (result_.status == Z2Status::budget_exhausted) return;
    }
  }

  std::size_t n_;
  Z2Mode mode_;
  std::uint64_t budget_;
  std::vector<std::vector<std::pair<std::size_t, std::uint8_t>>> edges_;
  Z2Result result_;
};

}  // namespace detail

/// Branching over the quad choice per tetrahedron (lowest undecided
/// tetrahedron first, quads in increasing order) with edge-parity
/// propagation. Solutions come out in lexicographic order.
inline Z2Result solve_z2_taut(const Triangulation& tri, Z2Mode mode = Z2Mode::all, std::uint64_t budget = 1'000'000)
{
  return detail::Z2Search(tri, mode, budget).run();
}

struct RealSignMap {
  std::vector<int> f;  // 1 where z(q) < 0
  bool one_hot = false;
  bool edge_parity = false;
  std::vector<std::size_t> bad_edges;
};

/// f(q) = 1 exactly when z(q) < 0; both defining conditions are checked and
/// reported rather than assumed.
inline RealSignMap from_real_solution(const Triangulation& tri, const ThurstonSolution& z, double real_tol = 1e-10)
{
  RealSignMap m;
  for (const auto& v : z.z) {
    if (std::abs(v.imag()) > real_tol) throw NotRealError();
    m.f.push_back(v.real() < 0 ? 1 : 0);
  }
  m.one_hot = one_hot(m.f);
  m.edge_parity = angvol::edge_parity(tri, m.f, &m.bad_edges);
  return m;
}

/// f = g / pi for a taut assignment g with values in {0, pi} (given as g / pi).
inline Z2Taut from_taut_angles(const Triangulation& tri, std::span<const Rational> g_over_pi)
{
  if (g_over_pi.size() != tri.num_quads()) throw NotTautError("not a taut angle assignment: wrong length");
  std::vector<int> f;
  for (const auto& v : g_over_pi) {
    if (v != 0 && v != 1) throw NotTautError("not a taut angle assignment: value outside {0, pi}");
    f.push_back(v == 1 ? 1 : 0);
  }
  const auto sums = b_map<Rational>(tri, g_over_pi);
  const std::size_t ne = tri.num_edges();
  for (std::size_t e = 0; e < ne; ++e)
    if (sums[e] != 2) throw NotTautError("not a taut angle assignment: edge " + std::to_string(e) + " sum is not 2 pi");
  for (std::size_t t = 0; t < tri.num_tets(); ++t)
    if (sums[ne + t] != 1) throw NotTautError("not a taut angle assignment: tet " + std::to_string(t) + " sum is not pi");
  Z2Taut out;
  for (std::size_t t = 0; t < tri.num_tets(); ++t)
    for (int k = 0; k < 3; ++k)
      if (f[3 * t + static_cast<std::size_t>(k)]) out.choice.push_back(k);
  return out;
}

}  // namespace angvol

#endif  // ANGVOL_Z2_TAUT_HPP
