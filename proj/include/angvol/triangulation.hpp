#ifndef ANGVOL_TRIANGULATION_HPP
#define ANGVOL_TRIANGULATION_HPP

// Triangulated closed oriented pseudo 3-manifolds.
//
// A triangulation is a set of tetrahedra with every face glued to exactly one
// other face by a permutation of {0,1,2,3}. Everything else (edge, vertex,
// face and normal-arc classes, orientation, incidence indices, vertex links)
// is derived once in the constructor; the object is immutable afterwards.
//
// Local conventions inside a tetrahedron:
//   face f       is the face opposite vertex f
//   edge 0..5    is {01, 02, 03, 12, 13, 23}
//   quad 0..2    misses the opposite edge pairs (01|23), (02|13), (03|12)
//   triangle v   is the normal triangle cutting off vertex v
// Global indices: triangle (tet, v) -> 4*tet + v, quad (tet, k) -> 3*tet + k.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace angvol {

class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Permutation of {0,1,2,3}; image[i] is where vertex i goes.
class Perm4 {
public:
  constexpr Perm4() : image_{0, 1, 2, 3} {}
  constexpr Perm4(int a, int b, int c, int d) : image_{a, b, c, d} {}

  static Perm4 parse(const std::string& digits)
  {
    if (digits.size() != 4) throw InputError("permutation must have 4 digits: '" + digits + "'");
    std::array<int, 4> im{};
    std::array<bool, 4> seen{};
    for (int i = 0; i < 4; ++i) {
      const int d = digits[static_cast<std::size_t>(i)] - '0';
      if (d < 0 || d > 3 || seen[static_cast<std::size_t>(d)])
        throw InputError("not a permutation of 0123: '" + digits + "'");
      seen[static_cast<std::size_t>(d)] = true;
      im[static_cast<std::size_t>(i)] = d;
    }
    return Perm4(im[0], im[1], im[2], im[3]);
  }

  constexpr int operator[](int i) const { return image_[static_cast<std::size_t>(i)]; }

  constexpr Perm4 inverse() const
  {
    Perm4 p;
    for (int i = 0; i < 4; ++i) p.image_[static_cast<std::size_t>(image_[static_cast<std::size_t>(i)])] = i;
    return p;
  }

  /// +1 for even permutations, -1 for odd.
  constexpr int sign() const
  {
    int inversions = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (image_[static_cast<std::size_t>(i)] > image_[static_cast<std::size_t>(j)]) ++inversions;
    return inversions % 2 == 0 ? 1 : -1;
  }

  std::string str() const
  {
    std::string s;
    for (int v : image_) s.push_back(static_cast<char>('0' + v));
    return s;
  }

  friend constexpr bool operator==(const Perm4&, const Perm4&) = default;

private:
  std::array<int, 4> image_;
};

namespace local {

inline constexpr std::array<std::array<int, 2>, 6> kEdgeVertices{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

constexpr int edge_index(int a, int b)
{
  if (a > b) std::swap(a, b);
  for (int i = 0; i < 6; ++i)
    if (kEdgeVertices[static_cast<std::size_t>(i)][0] == a && kEdgeVertices[static_cast<std::size_t>(i)][1] == b) return i;
  return -1;
}

/// Local quad type disjoint from local edge i.
constexpr int quad_of_edge(int i) { return i < 5 - i ? i : 5 - i; }

/// The two local edges a quad type misses.
constexpr std::array<int, 2> edges_of_quad(int k) { return {k, 5 - k}; }

constexpr bool edge_has_vertex(int i, int v)
{
  return kEdgeVertices[static_cast<std::size_t>(i)][0] == v || kEdgeVertices[static_cast<std::size_t>(i)][1] == v;
}

/// Quad type separating {a, b} from the other two vertices.
constexpr int quad_separating(int a, int b) { return quad_of_edge(edge_index(a, b)); }

}  // namespace local

struct FaceGluing {
  std::size_t tet = 0;
  int face = 0;
  Perm4 perm;
};

struct TetEdge {
  std::size_t tet = 0;
  int edge = 0;
  friend bool operator==(const TetEdge&, const TetEdge&) = default;
};

struct EdgeClass {
  std::vector<TetEdge> members;  // sorted by (tet, edge); members.front() is the representative
  std::size_t degree() const { return members.size(); }
};

struct LinkSurface {
  std::size_t vertex_class = 0;
  std::vector<std::size_t> triangles;  // global triangle indices at this vertex
  std::size_t num_vertices = 0;
  std::size_t num_edges = 0;
  /// For each triangle in `triangles`, the positions of its three neighbours
  /// in the same list (across the link edges opposite local corners).
  std::vector<std::array<std::size_t, 3>> adjacency;
  long euler_char() const
  {
    return static_cast<long>(num_vertices) - static_cast<long>(num_edges) + static_cast<long>(triangles.size());
  }
};

namespace detail {

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x)
  {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // smallest element is the root
  }
  /// Dense class ids numbered by first appearance, i.e. by smallest member.
  std::vector<std::size_t> labels(std::size_t& count)
  {
    std::vector<std::size_t> id(parent_.size(), SIZE_MAX), out(parent_.size());
    count = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
      const std::size_t r = find(i);
      if (id[r] == SIZE_MAX) id[r] = count++;
      out[i] = id[r];
    }
    return out;
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

class Triangulation {
public:
  Triangulation() = default;

  /// Validates the gluings and derives every class. Throws InputError.
  explicit Triangulation(std::vector<std::array<FaceGluing, 4>> gluings) : gluings_(std::move(gluings))
  {
    validate();
    derive_orientation();
    derive_classes();
    derive_indices();
    derive_links();
  }

  std::size_t num_tets() const { return gluings_.size(); }
  std::size_t num_vertices() const { return num_vertex_classes_; }
  std::size_t num_edges() const { return edge_classes_.size(); }
  std::size_t num_faces() const { return 2 * gluings_.size(); }
  std::size_t num_quads() const { return 3 * gluings_.size(); }
  std::size_t num_triangles() const { return 4 * gluings_.size(); }
  std::size_t num_arcs() const { return num_arc_classes_; }

  const FaceGluing& gluing(std::size_t tet, int face) const { return gluings_[tet][static_cast<std::size_t>(face)]; }
  const std::vector<std::array<FaceGluing, 4>>& gluings() const { return gluings_; }

  const std::vector<EdgeClass>& edge_classes() const { return edge_classes_; }
  std::size_t edge_class(std::size_t tet, int local_edge) const { return edge_class_of_[6 * tet + static_cast<std::size_t>(local_edge)]; }
  std::size_t vertex_class(std::size_t tet, int v) const { return vertex_class_of_[4 * tet + static_cast<std::size_t>(v)]; }
  /// Arc class of the normal arc in face `face` cutting off vertex `v` (v != face).
  std::size_t arc_class(std::size_t tet, int face, int v) const { return arc_class_of_[16 * tet + 4 * static_cast<std::size_t>(face) + static_cast<std::size_t>(v)]; }
  /// +1 or -1 per tetrahedron; every face gluing reverses orientation.
  int orientation(std::size_t tet) const { return orientation_[tet]; }

  static std::size_t quad_id(std::size_t tet, int k) { return 3 * tet + static_cast<std::size_t>(k); }
  static std::size_t tri_id(std::size_t tet, int v) { return 4 * tet + static_cast<std::size_t>(v); }
  static std::size_t tet_of_quad(std::size_t q) { return q / 3; }
  static std::size_t tet_of_tri(std::size_t t) { return t / 4; }

  /// i(q, e): tetrahedron-edges of class e inside q's tetrahedron that q misses.
  int quad_edge_index(std::size_t q, std::size_t e) const { return quad_edge_[q * num_edges() + e]; }
  /// i(t, e): tetrahedron-edges of class e with a vertex of t's corner.
  int tri_edge_index(std::size_t t, std::size_t e) const { return tri_edge_[t * num_edges() + e]; }

  /// Number of edge-class ends at vertex class v (edges with both ends at v count twice).
  int edge_ends_at(std::size_t e, std::size_t v) const { return edge_ends_[e * num_vertices() + v]; }

  const std::vector<LinkSurface>& vertex_links() const { return links_; }

  /// |V| - |E| + |F| - |T|.
  long euler_characteristic() const
  {
    return static_cast<long>(num_vertices()) - static_cast<long>(num_edges()) + static_cast<long>(num_faces()) -
           static_cast<long>(num_tets());
  }

  /// Text form accepted by parse_triangulation.
  std::string serialize() const
  {
    std::ostringstream os;
    os << "tets " << num_tets() << "\n";
    for (std::size_t t = 0; t < num_tets(); ++t)
      for (int f = 0; f < 4; ++f) {
        const auto& g = gluing(t, f);
        os << "glue " << t << " " << f << " -> " << g.tet << " " << g.face << " perm:" << g.perm.str() << "\n";
      }
    return os.str();
  }

private:
  void validate() const
  {
    const std::size_t n = gluings_.size();
    for (std::size_t t = 0; t < n; ++t)
      for (int f = 0; f < 4; ++f) {
        const auto& g = gluing(t, f);
        const std::string here = "tet " + std::to_string(t) + " face " + std::to_string(f);
        if (g.tet >= n) throw InputError(here + " glued to missing tet " + std::to_string(g.tet));
        if (g.face < 0 || g.face > 3) throw InputError(here + " glued to invalid face");
        if (g.tet == t && g.face == f) throw InputError(here + " glued to itself");
        if (g.perm[f] != g.face) throw InputError(here + ": permutation " + g.perm.str() + " does not carry face " + std::to_string(f) + " to face " + std::to_string(g.face));
        const auto& back = gluing(g.tet, g.face);
        if (back.tet != t || back.face != f || back.perm != g.perm.inverse())
          throw InputError("non-involutive gluing at " + here);
      }
  }

  void derive_orientation()
  {
    const std::size_t n = gluings_.size();
    orientation_.assign(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
      if (orientation_[start] != 0) continue;
      orientation_[start] = 1;
      std::vector<std::size_t> stack{start};
      while (!stack.empty()) {
        const std::size_t t = stack.back();
        stack.pop_back();
        for (int f = 0; f < 4; ++f) {
          const auto& g = gluing(t, f);
          // Odd gluing permutations join equally oriented tetrahedra.
          const int want = -g.perm.sign() * orientation_[t];
          if (orientation_[g.tet] == 0) {
            orientation_[g.tet] = want;
            stack.push_back(g.tet);
          } else if (orientation_[g.tet] != want) {
            throw InputError("not orientable as glued");
          }
        }
      }
    }
  }

  void derive_classes()
  {
    const std::size_t n = gluings_.size();
    detail::UnionFind verts(4 * n), edges(6 * n), arcs(16 * n);
    for (std::size_t t = 0; t < n; ++t)
      for (int f = 0; f < 4; ++f) {
        const auto& g = gluing(t, f);
        for (int v = 0; v < 4; ++v) {
          if (v == f) continue;
          verts.unite(4 * t + static_cast<std::size_t>(v), 4 * g.tet + static_cast<std::size_t>(g.perm[v]));
          arcs.unite(16 * t + 4 * static_cast<std::size_t>(f) + static_cast<std::size_t>(v),
                     16 * g.tet + 4 * static_cast<std::size_t>(g.face) + static_cast<std::size_t>(g.perm[v]));
          for (int w = v + 1; w < 4; ++w) {
            if (w == f) continue;
            edges.unite(6 * t + static_cast<std::size_t>(local::edge_index(v, w)),
                        6 * g.tet + static_cast<std::size_t>(local::edge_index(g.perm[v], g.perm[w])));
          }
        }
      }

    vertex_class_of_ = verts.labels(num_vertex_classes_);
    std::size_t ne = 0;
    edge_class_of_ = edges.labels(ne);
    edge_classes_.assign(ne, {});
    for (std::size_t i = 0; i < 6 * n; ++i) edge_classes_[edge_class_of_[i]].members.push_back({i / 6, static_cast<int>(i % 6)});

    // Slots with v == face are not arcs; give them a sentinel after labelling.
    std::size_t raw = 0;
    auto arc_labels = arcs.labels(raw);
    std::vector<std::size_t> dense(raw, SIZE_MAX);
    num_arc_classes_ = 0;
    arc_class_of_.assign(16 * n, SIZE_MAX);
    for (std::size_t i = 0; i < 16 * n; ++i) {
      const std::size_t f = (i / 4) % 4, v = i % 4;
      if (f == v) continue;
      if (dense[arc_labels[i]] == SIZE_MAX) dense[arc_labels[i]] = num_arc_classes_++;
      arc_class_of_[i] = dense[arc_labels[i]];
    }
  }

  void derive_indices()
  {
    const std::size_t n = gluings_.size(), ne = num_edges(), nv = num_vertices();
    quad_edge_.assign(3 * n * ne, 0);
    tri_edge_.assign(4 * n * ne, 0);
    edge_ends_.assign(ne * nv, 0);
    for (std::size_t t = 0; t < n; ++t)
      for (int i = 0; i < 6; ++i) {
        const std::size_t e = edge_class(t, i);
        ++quad_edge_[quad_id(t, local::quad_of_edge(i)) * ne + e];
        for (int v = 0; v < 4; ++v)
          if (local::edge_has_vertex(i, v)) ++tri_edge_[tri_id(t, v) * ne + e];
      }
    // Each edge class has two ends; read them off the representative.
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& rep = edge_classes_[e].members.front();
      for (int v : local::kEdgeVertices[static_cast<std::size_t>(rep.edge)]) ++edge_ends_[e * nv + vertex_class(rep.tet, v)];
    }
  }

  void derive_links()
  {
    const std::size_t n = gluings_.size();
    links_.assign(num_vertex_classes_, {});
    for (std::size_t v = 0; v < num_vertex_classes_; ++v) links_[v].vertex_class = v;
    std::vector<std::size_t> position(4 * n);
    for (std::size_t t = 0; t < n; ++t)
      for (int v = 0; v < 4; ++v) {
        auto& link = links_[vertex_class(t, v)];
        position[tri_id(t, v)] = link.triangles.size();
        link.triangles.push_back(tri_id(t, v));
      }

    // Link vertices are corners (tet, v, w) of normal triangles, w != v,
    // identified across faces containing both v and w.
    detail::UnionFind corners(16 * n);
    for (std::size_t t = 0; t < n; ++t)
      for (int f = 0; f < 4; ++f) {
        const auto& g = gluing(t, f);
        for (int v = 0; v < 4; ++v)
          for (int w = 0; w < 4; ++w) {
            if (v == w || v == f || w == f) continue;
            corners.unite(16 * t + 4 * static_cast<std::size_t>(v) + static_cast<std::size_t>(w),
                          16 * g.tet + 4 * static_cast<std::size_t>(g.perm[v]) + static_cast<std::size_t>(g.perm[w]));
          }
      }
    std::vector<std::vector<std::size_t>> roots(num_vertex_classes_);
    for (std::size_t t = 0; t < n; ++t)
      for (int v = 0; v < 4; ++v)
        for (int w = 0; w < 4; ++w)
          if (v != w) roots[vertex_class(t, v)].push_back(corners.find(16 * t + 4 * static_cast<std::size_t>(v) + static_cast<std::size_t>(w)));

    for (std::size_t vc = 0; vc < num_vertex_classes_; ++vc) {
      auto& r = roots[vc];
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
      auto& link = links_[vc];
      link.num_vertices = r.size();
      link.num_edges = 3 * link.triangles.size() / 2;
      link.adjacency.resize(link.triangles.size());
      for (std::size_t i = 0; i < link.triangles.size(); ++i) {
        const std::size_t t = tet_of_tri(link.triangles[i]);
        const int v = static_cast<int>(link.triangles[i] % 4);
        for (int f = 0, slot = 0; f < 4; ++f) {
          if (f == v) continue;
          const auto& g = gluing(t, f);
          link.adjacency[i][static_cast<std::size_t>(slot++)] = position[tri_id(g.tet, g.perm[v])];
        }
      }
    }
  }

  std::vector<std::array<FaceGluing, 4>> gluings_;
  std::vector<int> orientation_;
  std::size_t num_vertex_classes_ = 0;
  std::vector<std::size_t> vertex_class_of_;
  std::vector<std::size_t> edge_class_of_;
  std::vector<EdgeClass> edge_classes_;
  std::size_t num_arc_classes_ = 0;
  std::vector<std::size_t> arc_class_of_;
  std::vector<int> quad_edge_;
  std::vector<int> tri_edge_;
  std::vector<int> edge_ends_;
  std::vector<LinkSurface> links_;
};

/// Parses the `tets N` / `glue t f -> t' f' perm:abcd` format. Blank lines
/// and lines starting with '#' are ignored. Throws InputError.
inline Triangulation parse_triangulation(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  long count = -1;
  std::vector<std::array<FaceGluing, 4>> gluings;
  std::vector<std::array<bool, 4>> seen;
  auto fail = [&](const std::string& what) { throw InputError("line " + std::to_string(line_no) + ": " + what); };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (count < 0) {
      if (word != "tets" || !(ls >> count) || count < 0) fail("expected header 'tets N'");
      gluings.assign(static_cast<std::size_t>(count), {});
      seen.assign(static_cast<std::size_t>(count), {});
      continue;
    }
    if (word != "glue") fail("expected 'glue', got '" + word + "'");
    long t = -1, f = -1, t2 = -1, f2 = -1;
    std::string arrow, perm;
    if (!(ls >> t >> f >> arrow >> t2 >> f2 >> perm) || arrow != "->" || perm.rfind("perm:", 0) != 0)
      fail("malformed glue line");
    if (t < 0 || t >= count || t2 < 0 || t2 >= count) fail("tetrahedron index out of range");
    if (f < 0 || f > 3 || f2 < 0 || f2 > 3) fail("face index out of range");
    auto& slot = seen[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
    if (slot) fail("face glued twice");
    slot = true;
    Perm4 p;
    try {
      p = Perm4::parse(perm.substr(5));
    } catch (const InputError& e) {
      fail(e.what());
    }
    gluings[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)] = {static_cast<std::size_t>(t2), static_cast<int>(f2), p};
  }
  if (count < 0) throw InputError("empty input: missing 'tets N' header");
  for (std::size_t t = 0; t < seen.size(); ++t)
    for (int f = 0; f < 4; ++f)
      if (!seen[t][static_cast<std::size_t>(f)])
        throw InputError("unglued face: tet " + std::to_string(t) + " face " + std::to_string(f));
  return Triangulation(std::move(gluings));
}

/// Neumann-Zagier form omega: quads x quads -> {-1, 0, 1}. Zero across
/// tetrahedra; within tetrahedron t the cycle 0 -> 1 -> 2 -> 0 has value
/// orientation(t).
class NZForm {
public:
  explicit NZForm(const Triangulation& tri) : signs_(tri.num_tets())
  {
    for (std::size_t t = 0; t < tri.num_tets(); ++t) signs_[t] = tri.orientation(t);
  }

  int operator()(std::size_t q, std::size_t qp) const
  {
    const std::size_t t = Triangulation::tet_of_quad(q);
    if (t != Triangulation::tet_of_quad(qp) || q == qp) return 0;
    const auto k = q % 3, kp = qp % 3;
    return kp == (k + 1) % 3 ? signs_[t] : -signs_[t];
  }

  std::size_t num_quads() const { return 3 * signs_.size(); }

private:
  std::vector<int> signs_;
};

inline NZForm nz_form(const Triangulation& tri) { return NZForm(tri); }

}  // namespace angvol

#endif  // ANGVOL_TRIANGULATION_HPP
