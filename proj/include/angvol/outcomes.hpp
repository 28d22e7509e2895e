#ifndef ANGVOL_OUTCOMES_HPP
#define ANGVOL_OUTCOMES_HPP

// What a classified critical point yields: shape parameters solving the
// generalised gluing equations (smooth case), the log-sine normal vector, and
// exact 2-quad-type normal solutions with their per-tetrahedron clusters.

#include "angvol/angle_structures.hpp"
#include "angvol/normal_surfaces.hpp"
#include "angvol/rational.hpp"
#include "angvol/triangulation.hpp"
#include "angvol/volume.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace angvol {

using Complex = std::complex<double>;

class NonSmoothInputError : public std::runtime_error {
public:
  NonSmoothInputError() : std::runtime_error("non-smooth input") {}
};

class NotCriticalError : public std::runtime_error {
public:
  explicit NotCriticalError(double residual)
      : std::runtime_error("not critical: gradient residual " + std::to_string(residual)), residual(residual)
  {
  }
  double residual;
};

class NoCertificateError : public std::runtime_error {
public:
  explicit NoCertificateError(std::size_t q0)
      : std::runtime_error("no proportionality at q0 = " + std::to_string(q0)), q0(q0)
  {
  }
  std::size_t q0;
};

struct ThurstonSolution {
  std::vector<Complex> z;
};

/// max |<-ln|sin theta|, u>| over an orthonormal TAS basis.
inline double criticality_residual(const Triangulation& tri, const SASPoint& x, double eps_flat = 1e-7)
{
  const auto g = smooth_gradient(x, eps_flat);
  const auto U = detail::orthonormal_tas(tas_basis(tri), tri.num_quads());
  if (U.cols() == 0) return 0;
  return (U.transpose() * detail::to_vec(g)).cwiseAbs().maxCoeff();
}

/// z(q) = e^{i theta(q)} prod_r sin(theta(r))^{omega(q,r)}. The gluing
/// relation z(q')(1 - z(q)) = 1 for omega(q,q') = 1 holds at every smooth
/// point; the edge equations hold exactly when the point is critical, which
/// is enforced when `critical_tol` is given.
inline ThurstonSolution thurston_from_smooth(const Triangulation& tri, const SASPoint& x, double eps_flat = 1e-7,
                                             std::optional<double> critical_tol = std::nullopt)
{
  if (!classify_point(x, eps_flat).smooth()) throw NonSmoothInputError();
  if (critical_tol) {
    const double r = criticality_residual(tri, x, eps_flat);
    if (r > *critical_tol) throw NotCriticalError(r);
  }
  const NZForm omega(tri);
  ThurstonSolution s;
  s.z.resize(x.theta.size());
  for (std::size_t q = 0; q < x.theta.size(); ++q) {
    double m = 1;
    const std::size_t base = 3 * Triangulation::tet_of_quad(q);
    for (std::size_t r = base; r < base + 3; ++r) {
      const int w = omega(q, r);
      if (w == 1) m *= std::sin(x.theta[r]);
      else if (w == -1) m /= std::sin(x.theta[r]);
    }
    s.z[q] = std::polar(1.0, x.theta[q]) * m;
  }
  return s;
}

struct ThurstonResiduals {
  double shape_relation = 0;   // |z(q')(1 - z(q)) - 1|, omega(q,q') = 1
  double tet_product = 0;      // |prod_{q in tet} z(q) + 1|
  double edge_squares = 0;     // |prod z(q)^{2 i(q,e)} - k(e)^2|
  std::vector<int> edge_signs; // s with prod z(q)^{i(q,e)} closest to s k(e)
  double edge_sign_residual = 0;
  bool real_solution = false;

  bool ok(double tol) const { return shape_relation < tol && tet_product < tol && edge_squares < tol; }
};

/// Report-only check of the gluing equations against curvature k.
inline ThurstonResiduals verify_thurston(const Triangulation& tri, const ThurstonSolution& s, const CurvatureAssignment& k,
                                         double real_tol = 1e-10)
{
  ThurstonResiduals r;
  const NZForm omega(tri);
  for (std::size_t q = 0; q < s.z.size(); ++q) {
    const std::size_t base = 3 * Triangulation::tet_of_quad(q);
    for (std::size_t qp = base; qp < base + 3; ++qp)
      if (omega(q, qp) == 1) r.shape_relation = std::max(r.shape_relation, std::abs(s.z[qp] * (1.0 - s.z[q]) - 1.0));
  }
  for (std::size_t t = 0; t < tri.num_tets(); ++t)
    r.tet_product = std::max(r.tet_product, std::abs(s.z[3 * t] * s.z[3 * t + 1] * s.z[3 * t + 2] + 1.0));
  for (std::size_t e = 0; e < tri.num_edges(); ++e) {
    Complex p = 1;
    for (std::size_t q = 0; q < s.z.size(); ++q)
      if (const int i = tri.quad_edge_index(q, e)) p *= std::pow(s.z[q], i);
    const Complex ke = std::polar(1.0, 2 * std::numbers::pi * to_double(k.turning[e]));
    r.edge_squares = std::max(r.edge_squares, std::abs(p * p - ke * ke));
    const double plus = std::abs(p - ke), minus = std::abs(p + ke);
    r.edge_signs.push_back(plus <= minus ? 1 : -1);
    r.edge_sign_residual = std::max(r.edge_sign_residual, std::min(plus, minus));
  }
  r.real_solution = std::all_of(s.z.begin(), s.z.end(), [&](const Complex& z) { return std::abs(z.imag()) <= real_tol; });
  return r;
}

struct LogSineVector {
  std::vector<double> y;        // -ln|sin theta(q)|
  std::vector<double> lift;     // h over E u T with A(h) ~ y
  double lift_residual = 0;     // ||A(h) - y||
  double orthogonality = 0;     // max |<y, u>| over an orthonormal TAS basis
};

/// y(q) = -ln|sin theta(q)| and a least-squares preimage under A.
inline LogSineVector log_sine_vector(const Triangulation& tri, const SASPoint& x, double tol = 1e-8, double eps_flat = 1e-7)
{
  LogSineVector out;
  out.y = smooth_gradient(x, eps_flat);
  out.orthogonality = criticality_residual(tri, x, eps_flat);
  if (out.orthogonality > tol) throw NotCriticalError(out.orthogonality);
  const RationalMatrix a = a_matrix(tri);
  Eigen::MatrixXd am(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) am(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(a(i, j));
  const Eigen::VectorXd y = detail::to_vec(out.y);
  const Eigen::VectorXd h = am.completeOrthogonalDecomposition().solve(y);
  out.lift = detail::to_std(h);
  out.lift_residual = (am * h - y).norm();
  return out;
}

/// Integral normal solution whose quad support is {q0} or {q0, q1}.
struct TwoQuadCertificate {
  std::size_t q0 = 0;
  std::optional<std::size_t> q1;
  std::optional<Rational> lambda;  // f_{q0} = lambda f_{q1} on TAS
  std::vector<std::size_t> alternates;  // further q1 candidates
  NormalSolution y;

  std::size_t support_size() const
  {
    return static_cast<std::size_t>(std::count_if(y.quad.begin(), y.quad.end(), [](const Rational& r) { return r != 0; }));
  }
};

/// Exact: compares the coordinate functional of q0 on TAS with every other
/// quad's, builds q0* - lambda q1* (or q0* alone when the functional is
/// zero), lifts it to a normal solution and clears denominators.
inline TwoQuadCertificate two_quad_certificate(const Triangulation& tri, std::size_t q0)
{
  if (q0 >= tri.num_quads()) throw std::out_of_range("two_quad_certificate: quad index");
  const auto tas = tas_basis(tri);
  const auto cols = detail::quad_functionals(tri, tas);
  TwoQuadCertificate c;
  c.q0 = q0;
  RationalVector z(tri.num_quads());
  z[q0] = 1;
  if (!is_zero(cols[q0])) {
    for (std::size_t q = 0; q < cols.size(); ++q) {
      if (q == q0 || is_zero(cols[q])) continue;
      if (auto l = detail::proportionality(cols[q0], cols[q])) {
        if (!c.q1) {
          c.q1 = q;
          c.lambda = *l;
        } else {
          c.alternates.push_back(q);
        }
      }
    }
    if (!c.q1) throw NoCertificateError(q0);
    z[*c.q1] = -*c.lambda;
  }
  NormalSolution s = lift_from_quad(tri, z);
  const BigInt l = denominator_lcm(s.stacked());
  const Rational scale = s.quad[q0] > 0 ? Rational(l) : Rational(-l);
  for (auto& v : s.tri) v *= scale;
  for (auto& v : s.quad) v *= scale;
  c.y = std::move(s);
  return c;
}

struct Cluster {
  std::size_t tet = 0;
  std::vector<TwoQuadCertificate> certificates;  // one per quad of the tetrahedron
};

/// Tetrahedra all three of whose quads admit a 2-quad-type certificate.
inline std::vector<Cluster> cluster_detect(const Triangulation& tri)
{
  std::vector<Cluster> out;
  for (std::size_t t = 0; t < tri.num_tets(); ++t) {
    Cluster c{t, {}};
    try {
      for (int k = 0; k < 3; ++k) c.certificates.push_back(two_quad_certificate(tri, Triangulation::quad_id(t, k)));
    } catch (const NoCertificateError&) {
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace angvol

#endif  // ANGVOL_OUTCOMES_HPP
