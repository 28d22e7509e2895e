#ifndef ANGVOL_VOLUME_HPP
#define ANGVOL_VOLUME_HPP

// Volume V(x) = sum_q L(theta(q)) on circle-valued angle structures, its
// gradient and one-sided derivatives, flat-locus classification, and an
// ascent-based maximiser.
//
// Moves stay on SAS(T, k) by construction: every step is theta + t v with
// v in TAS, which leaves all tetrahedron and edge sums unchanged.

#include "angvol/angle_structures.hpp"
#include "angvol/lobachevsky.hpp"
#include "angvol/rational.hpp"
#include "angvol/triangulation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace angvol {

class NonSmoothPointError : public std::runtime_error {
public:
  NonSmoothPointError() : std::runtime_error("non-smooth point: some |sin theta(q)| is within eps_flat of 0") {}
};

class NotTangentError : public std::runtime_error {
public:
  NotTangentError() : std::runtime_error("b not tangent: B(b) != 0") {}
};

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double volume(std::span<const double> theta)
{
  double v = 0;
  for (double t : theta) v += lobachevsky(t);
  return v;
}

inline double volume(const SASPoint& x) { return volume(x.theta); }

/// 3 |T| L(pi/6).
inline double volume_bound(const Triangulation& tri) { return 3.0 * static_cast<double>(tri.num_tets()) * lobachevsky(std::numbers::pi / 6); }

namespace detail {

/// L(b) - L(a), accurate relative to the difference itself when the segment
/// is short and stays away from pi Z (Gauss-Legendre on L').
inline double lobachevsky_increment(double a, double b)
{
  const double h = b - a;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const bool clear = std::floor(lo / std::numbers::pi) == std::floor(hi / std::numbers::pi) &&
                     std::abs(std::sin(lo)) > 1e-3 && std::abs(std::sin(hi)) > 1e-3;
  if (std::abs(h) > 1e-2 || !clear) return lobachevsky(b) - lobachevsky(a);
  static constexpr std::array<double, 4> nodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static constexpr std::array<double, 4> weights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double mid = 0.5 * (a + b), half = 0.5 * h;
  double s = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    s += weights[i] * (lobachevsky_derivative(mid + half * nodes[i]) + lobachevsky_derivative(mid - half * nodes[i]));
  return half * s;
}

}  // namespace detail

/// V(theta + t d) - V(theta), computed term by term without cancellation.
inline double volume_increment(std::span<const double> theta, std::span<const double> d, double t)
{
  double s = 0;
  for (std::size_t q = 0; q < theta.size(); ++q)
    if (d[q] != 0) s += detail::lobachevsky_increment(theta[q], theta[q] + t * d[q]);
  return s;
}

/// g(q) = -ln|sin theta(q)|; <g, v> is dV/dt along theta + t v for v in TAS.
inline std::vector<double> smooth_gradient(const SASPoint& x, double eps_flat = 1e-7)
{
  std::vector<double> g(x.theta.size());
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double s = std::abs(std::sin(x.theta[q]));
    if (s <= eps_flat) throw NonSmoothPointError();
    g[q] = -std::log(s);
  }
  return g;
}

/// Flat-locus data at a point: Y, Y', flat and partially flat tetrahedra.
struct PointClassification {
  std::vector<std::size_t> flat_quads;           // Y
  std::vector<std::size_t> partially_flat_set;   // Y'
  std::vector<std::size_t> flat_tets;
  std::vector<std::size_t> partially_flat_tets;
  bool smooth() const { return flat_quads.empty(); }
};

/// A tetrahedron with two or more quads within eps_flat is reported flat and
/// all three of its quads go into Y (the third is then flat up to 2 eps).
inline PointClassification classify_point(const SASPoint& x, double eps_flat)
{
  PointClassification c;
  const std::size_t nt = x.theta.size() / 3;
  for (std::size_t t = 0; t < nt; ++t) {
    int count = 0;
    std::size_t last = 0;
    for (std::size_t q = 3 * t; q < 3 * t + 3; ++q)
      if (std::abs(std::sin(x.theta[q])) <= eps_flat) {
        ++count;
        last = q;
      }
    if (count == 0) continue;
    if (count == 1) {
      c.flat_quads.push_back(last);
      c.partially_flat_set.push_back(last);
      c.partially_flat_tets.push_back(t);
    } else {
      for (std::size_t q = 3 * t; q < 3 * t + 3; ++q) c.flat_quads.push_back(q);
      c.flat_tets.push_back(t);
    }
  }
  return c;
}

/// dV(x e^{tb})/dt = -log_coeff * ln|t| + finite_part + o(1) as t -> 0+,
/// with log_coeff = sum of b over Y'.
struct Subderivative {
  double log_coeff = 0;
  double finite_part = 0;

  /// lim_{t -> 0+} dV/dt in [-inf, inf]; `tol` decides when log_coeff is zero.
  double limit(double tol = 1e-12) const
  {
    if (log_coeff > tol) return std::numeric_limits<double>::infinity();
    if (log_coeff < -tol) return -std::numeric_limits<double>::infinity();
    return finite_part;
  }
};

namespace detail {
inline double xlogx(double b) { return b == 0 ? 0.0 : b * std::log(std::abs(b)); }
}  // namespace detail

/// One tetrahedron's share of the one-sided derivative, by flat pattern:
/// none flat  -> -sum b ln|sin a|
/// two or more flat -> -sum b ln|b|
/// one flat   -> log term b1, finite -b1 ln|b1| - sum_{others} b ln|sin a|
inline Subderivative tet_subderivative(const std::array<double, 3>& theta, const std::array<double, 3>& b, double eps_flat = 1e-7)
{
  Subderivative d;
  std::array<bool, 3> flat{};
  int count = 0;
  for (std::size_t i = 0; i < 3; ++i) count += (flat[i] = std::abs(std::sin(theta[i])) <= eps_flat);
  for (std::size_t i = 0; i < 3; ++i) {
    if (count == 0 || (count == 1 && !flat[i])) {
      d.finite_part -= b[i] * std::log(std::abs(std::sin(theta[i])));
    } else {
      d.finite_part -= detail::xlogx(b[i]);
      if (count == 1) d.log_coeff += b[i];
    }
  }
  return d;
}

/// Sum of tet_subderivative over tetrahedra; b must lie in TAS.
inline Subderivative directional_subderivative(const Triangulation& tri, const SASPoint& x, std::span<const double> b,
                                               double eps_flat = 1e-7, double tangent_tol = 1e-9)
{
  if (b.size() != x.theta.size()) throw std::invalid_argument("directional_subderivative: size mismatch");
  double scale = 1;
  for (double v : b) scale = std::max(scale, std::abs(v));
  for (double s : b_map<double>(tri, b))
    if (std::abs(s) > tangent_tol * scale) throw NotTangentError();

  Subderivative d;
  for (std::size_t t = 0; t < tri.num_tets(); ++t) {
    const auto part = tet_subderivative({x.theta[3 * t], x.theta[3 * t + 1], x.theta[3 * t + 2]}, {b[3 * t], b[3 * t + 1], b[3 * t + 2]},
                                        eps_flat);
    d.log_coeff += part.log_coeff;
    d.finite_part += part.finite_part;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Maximisation

struct OptimizeOptions {
  double grad_tol = 1e-9;
  double eps_flat = 1e-7;
  int max_iters = 10000;
  int multistart = 8;
  std::uint64_t seed = 0;
  /// Quads with |sin theta| below this are candidates for snapping onto the flat locus.
  double snap_tol = 1e-4;
  double armijo = 1e-4;
  SasSearchOptions search;
  bool parallel = true;
};

struct TraceEntry {
  int run = 0;
  int iter = 0;
  std::string move;  // start | newton | gradient | stratum | snap | escape
  double volume = 0;
  double delta = 0;  // accurate V increment of this move
  double step = 0;
  double grad_norm = 0;
};

enum class Classification { smooth, non_smooth };

inline const char* to_string(Classification c) { return c == Classification::smooth ? "smooth" : "non-smooth"; }

struct CriticalReport {
  SASPoint point;
  Classification classification = Classification::smooth;
  PointClassification flats;
  /// Lowest-indexed flat quad when non-smooth.
  std::optional<std::size_t> q0;
  double volume = 0;
  int run = 0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<TraceEntry> trace;

  /// Smooth points: max |<g, u>| over an orthonormal TAS basis.
  double gradient_residual = 0;
  /// Non-smooth points: sum_{q in Y'} u(q) = 0 for every exact TAS basis vector u.
  bool log_coefficient_identity = true;
  /// Non-smooth points: max |finite part| over +-(orthonormal TAS basis).
  double subderivative_residual = 0;
};

namespace detail {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Orthonormal basis (columns) of span of the exact TAS vectors.
inline Mat orthonormal_tas(const std::vector<RationalVector>& tas, std::size_t nq)
{
  if (tas.empty()) return Mat(static_cast<Eigen::Index>(nq), 0);
  Mat m(static_cast<Eigen::Index>(nq), static_cast<Eigen::Index>(tas.size()));
  for (std::size_t j = 0; j < tas.size(); ++j)
    for (std::size_t q = 0; q < nq; ++q) m(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = to_double(tas[j][q]);
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

inline Vec to_vec(std::span<const double> v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// Orthonormal basis of { b in span(U) : b(q) = 0 for q in Y }.
inline Mat stratum_basis(const Mat& U, const std::vector<std::size_t>& Y)
{
  if (U.cols() == 0 || Y.empty()) return U;
  Mat rows(static_cast<Eigen::Index>(Y.size()), U.cols());
  for (std::size_t i = 0; i < Y.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = U.row(static_cast<Eigen::Index>(Y[i]));
  // Absolute rank cut: angle-rigid quads give rows that vanish up to rounding.
  Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10;
  const Mat ker = svd.matrixV().rightCols(U.cols() - rank);
  return U * ker;
}

class Ascent {
public:
  Ascent(const Triangulation& tri, const Mat& U, const std::vector<RationalVector>& tas, const OptimizeOptions& opts, int run)
      : tri_(tri), U_(U), tas_(tas), opts_(opts), run_(run)
  {
  }

  CriticalReport operator()(SASPoint start)
  {
    CriticalReport rep;
    rep.run = run_;
    theta_ = start.theta;
    vol_ = volume(theta_);
    log(rep, "start", 0, 0, 0);
    int it = 0;
    for (; it < opts_.max_iters; ++it) {
      if (U_.cols() == 0) {
        rep.converged = true;
        rep.stop_reason = "no tangent directions";
        break;
      }
      const auto cls = classify_point(SASPoint{theta_, {}}, opts_.eps_flat);
      std::vector<char> flat(theta_.size(), 0);
      for (auto q : cls.flat_quads) flat[q] = 1;
      const Mat S = cls.smooth() ? U_ : stratum_basis(U_, cls.flat_quads);
      const Vec g = stratum_gradient(flat);
      const Vec gc = S.transpose() * g;
      const bool stationary = S.cols() == 0 || gc.norm() < opts_.grad_tol;
      if (cls.smooth()) {
        if (stationary) {
          rep.converged = true;
          rep.stop_reason = "gradient below tolerance";
          break;
        }
        if (try_snap(rep)) continue;
        if (!ascent_step(rep, S, flat, gc, cls.smooth() ? "gradient" : "stratum")) {
          rep.stop_reason = "line search failed at gradient norm " + std::to_string(gc.norm());
          break;
        }
      } else {
        if (!stationary && ascent_step(rep, S, flat, gc, "stratum")) continue;
        const int escaped = try_escape(rep, flat);
        if (escaped == 0) {
          rep.converged = true;
          rep.stop_reason = "no ascending direction off the flat locus";
          break;
        }
        if (escaped < 0) {
          rep.stop_reason = "escape line search failed";
          break;
        }
      }
    }
    if (it == opts_.max_iters) rep.stop_reason = "iteration cap reached";
    rep.iterations = it;
    finish(rep);
    return rep;
  }

private:
  void log(CriticalReport& rep, const char* move, double delta, double step, double gnorm)
  {
    rep.trace.push_back({run_, static_cast<int>(rep.trace.size()), move, vol_, delta, step, gnorm});
  }

  void accept(const Vec& d, double t, double delta)
  {
    for (std::size_t q = 0; q < theta_.size(); ++q) theta_[q] = wrap_two_pi(theta_[q] + t * d(static_cast<Eigen::Index>(q)));
    vol_ = volume(theta_);
    (void)delta;
  }

  /// Backtracking Armijo on the accurate increment. Returns accepted step or 0.
  double line_search(const Vec& d, double slope, double& delta)
  {
    const double dmax = d.cwiseAbs().maxCoeff();
    double t = dmax > std::numbers::pi / 4 ? (std::numbers::pi / 4) / dmax : 1.0;
    const auto dv = to_std(d);
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      delta = volume_increment(theta_, dv, t);
      if (delta > 0 && delta >= opts_.armijo * t * slope) return t;
    }
    return 0;
  }

  /// -ln|sin theta| off the flat set, 0 on it.
  Vec stratum_gradient(const std::vector<char>& flat) const
  {
    Vec g(static_cast<Eigen::Index>(theta_.size()));
    for (std::size_t q = 0; q < theta_.size(); ++q)
      g(static_cast<Eigen::Index>(q)) = flat[q] ? 0.0 : -std::log(std::abs(std::sin(theta_[q])));
    return g;
  }

  /// One ascent step along span(S), flat coordinates held fixed. Uses the
  /// Newton direction when the restricted Hessian is negative definite.
  bool ascent_step(CriticalReport& rep, const Mat& S, const std::vector<char>& flat, const Vec& gc, const char* fallback)
  {
    auto clamp = [&](Vec d) {
      for (std::size_t q = 0; q < flat.size(); ++q)
        if (flat[q]) d(static_cast<Eigen::Index>(q)) = 0;
      return d;
    };
    Vec d = clamp(S * gc);
    double slope = gc.squaredNorm();
    const char* kind = fallback;
    bool regular = true;
    for (std::size_t q = 0; q < theta_.size(); ++q) regular = regular && (flat[q] || std::abs(std::sin(theta_[q])) > 1e-3);
    if (regular) {
      Vec negh(static_cast<Eigen::Index>(theta_.size()));
      for (std::size_t q = 0; q < theta_.size(); ++q) negh(static_cast<Eigen::Index>(q)) = flat[q] ? 0.0 : 1.0 / std::tan(theta_[q]);
      const Mat H = S.transpose() * negh.asDiagonal() * S;
      Eigen::LLT<Mat> llt(H);
      if (llt.info() == Eigen::Success) {
        const Vec p = llt.solve(gc);
        if (p.allFinite() && gc.dot(p) > 0) {
          d = clamp(S * p);
          slope = gc.dot(p);
          kind = "newton";
        }
      }
    }
    double delta = 0;
    double t = line_search(d, slope, delta);
    if (t == 0 && kind[0] == 'n') {
      d = clamp(S * gc);
      slope = gc.squaredNorm();
      kind = fallback;
      t = line_search(d, slope, delta);
    }
    if (t == 0) return false;
    accept(d, t, delta);
    log(rep, kind, delta, t, gc.norm());
    return true;
  }

  /// Project onto { theta(q) in pi Z for near-flat q } when that does not lower V.
  bool try_snap(CriticalReport& rep)
  {
    std::vector<std::size_t> near;
    for (std::size_t q = 0; q < theta_.size(); ++q)
      if (std::abs(std::sin(theta_[q])) < opts_.snap_tol) near.push_back(q);
    if (near.empty()) return false;
    Mat rows(static_cast<Eigen::Index>(near.size()), U_.cols());
    Vec rhs(static_cast<Eigen::Index>(near.size()));
    for (std::size_t i = 0; i < near.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      rows.row(r) = U_.row(static_cast<Eigen::Index>(near[i]));
      const double th = theta_[near[i]];
      rhs(r) = std::numbers::pi * std::round(th / std::numbers::pi) - th;
    }
    const Vec c = rows.completeOrthogonalDecomposition().solve(rhs);
    if ((rows * c - rhs).norm() > 1e-12) return false;
    const Vec d = U_ * c;
    const auto dv = to_std(d);
    double delta = 0;
    for (std::size_t q = 0; q < theta_.size(); ++q) delta += lobachevsky(theta_[q] + dv[q]) - lobachevsky(theta_[q]);
    if (delta < 0) return false;
    accept(d, 1.0, delta);
    log(rep, "snap", delta, 1.0, 0);
    return true;
  }

  /// Tests +-(basis vectors of TAS) for a positive one-sided derivative.
  /// Returns 1 if a step was taken, 0 if none ascends, -1 on line-search failure.
  int try_escape(CriticalReport& rep, const std::vector<char>& flat)
  {
    const SASPoint here{theta_, {}};
    // Directions inside the stratum are covered by ascent_step.
    auto leaves = [&](const Vec& b) {
      for (std::size_t q = 0; q < flat.size(); ++q)
        if (flat[q] && std::abs(b(static_cast<Eigen::Index>(q))) > 1e-8) return true;
      return false;
    };
    double best_score = 0;
    int best_kind = -1;  // 1: infinite derivative, 0: finite positive
    Vec best;
    for (Eigen::Index j = 0; j < U_.cols(); ++j)
      for (double sgn : {1.0, -1.0}) {
        const Vec b = sgn * U_.col(j);
        const auto sd = directional_subderivative(tri_, here, to_std(b), opts_.eps_flat, 1e-8);
        int kind = -1;
        double score = 0;
        if (sd.log_coeff > 1e-10) {
          kind = 1;
          score = sd.log_coeff;
        } else if (std::abs(sd.log_coeff) <= 1e-10 && leaves(b) && sd.finite_part > std::max(opts_.grad_tol, 1e-9)) {
          kind = 0;
          score = sd.finite_part;
        }
        if (kind > best_kind || (kind == best_kind && kind >= 0 && score > best_score)) {
          best_kind = kind;
          best_score = score;
          best = b;
        }
      }
    if (best_kind < 0) return 0;
    const auto dv = to_std(best);
    for (double t = 0.25; t > 1e-14; t *= 0.5) {
      double delta = 0;
      for (std::size_t q = 0; q < theta_.size(); ++q) delta += lobachevsky(theta_[q] + t * dv[q]) - lobachevsky(theta_[q]);
      if (delta > 0) {
        accept(best, t, delta);
        log(rep, "escape", delta, t, best_score);
        return 1;
      }
    }
    return -1;
  }

  void finish(CriticalReport& rep)
  {
    rep.point.theta = theta_;
    rep.volume = volume(theta_);
    rep.flats = classify_point(rep.point, opts_.eps_flat);
    if (rep.flats.smooth()) {
      rep.classification = Classification::smooth;
      if (U_.cols() > 0) {
        const Vec g = to_vec(smooth_gradient(rep.point, opts_.eps_flat));
        rep.gradient_residual = (U_.transpose() * g).cwiseAbs().maxCoeff();
      }
    } else {
      rep.classification = Classification::non_smooth;
      rep.q0 = *std::min_element(rep.flats.flat_quads.begin(), rep.flats.flat_quads.end());
      for (const auto& u : tas_) {
        Rational s = 0;
        for (auto q : rep.flats.partially_flat_set) s += u[q];
        if (s != 0) rep.log_coefficient_identity = false;
      }
      for (Eigen::Index j = 0; j < U_.cols(); ++j)
        for (double sgn : {1.0, -1.0}) {
          const Vec b = sgn * U_.col(j);
          const auto sd = directional_subderivative(tri_, rep.point, to_std(b), opts_.eps_flat, 1e-8);
          rep.subderivative_residual = std::max(rep.subderivative_residual, std::abs(sd.finite_part));
        }
    }
  }

  const Triangulation& tri_;
  const Mat& U_;
  const std::vector<RationalVector>& tas_;
  const OptimizeOptions& opts_;
  int run_;
  std::vector<double> theta_;
  double vol_ = 0;
};

/// Random rational TAS perturbation with max |entry| <= pi/8.
inline std::vector<double> random_tas_perturbation(const std::vector<RationalVector>& tas, std::size_t nq, std::uint64_t seed)
{
  std::vector<double> v(nq, 0.0);
  if (tas.empty()) return v;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coef(-8, 8), mag(1, 8);
  RationalVector r(nq);
  for (const auto& u : tas) {
    const Rational c(coef(rng), 8);
    for (std::size_t q = 0; q < nq; ++q) r[q] += c * u[q];
  }
  double m = 0;
  for (std::size_t q = 0; q < nq; ++q) m = std::max(m, std::abs(to_double(r[q])));
  if (m == 0) return v;
  const double scale = (std::numbers::pi / 8) * (mag(rng) / 8.0) / m;
  for (std::size_t q = 0; q < nq; ++q) v[q] = scale * to_double(r[q]);
  return v;
}

}  // namespace detail

/// Volume maximisation over SAS(T, k). Run 0 starts at find_sas_point; runs
/// 1..multistart-1 start from random TAS perturbations of it. The report is
/// the best converged run by volume (ties within 1e-12 go to the lower run).
/// Throws CurvatureError (inadmissible k) or ConvergenceError (no run converged).
inline CriticalReport maximize(const Triangulation& tri, const CurvatureAssignment& k, const OptimizeOptions& opts = {},
                               std::vector<CriticalReport>* all_runs = nullptr)
{
  const SASPoint start = find_sas_point(tri, k, opts.search);
  const auto tas = tas_basis(tri);
  const detail::Mat U = detail::orthonormal_tas(tas, tri.num_quads());
  const int runs = std::max(1, opts.multistart);

  auto one = [&](int r) {
    SASPoint s = start;
    if (r > 0) {
      const auto v = detail::random_tas_perturbation(tas, tri.num_quads(), opts.seed * 1000003ULL + static_cast<std::uint64_t>(r));
      s = exp_move(start, v, 1.0);
    }
    return detail::Ascent(tri, U, tas, opts, r)(std::move(s));
  };

  std::vector<CriticalReport> reports(static_cast<std::size_t>(runs));
  if (opts.parallel && runs > 1) {
    std::vector<std::future<CriticalReport>> fut;
    for (int r = 0; r < runs; ++r) fut.push_back(std::async(std::launch::async, one, r));
    for (int r = 0; r < runs; ++r) reports[static_cast<std::size_t>(r)] = fut[static_cast<std::size_t>(r)].get();
  } else {
    for (int r = 0; r < runs; ++r) reports[static_cast<std::size_t>(r)] = one(r);
  }

  const CriticalReport* best = nullptr;
  for (const auto& rep : reports) {
    if (!rep.converged) continue;
    if (!best || rep.volume > best->volume + 1e-12) best = &rep;
  }
  if (!best) {
    std::string why = "did not converge:";
    for (const auto& rep : reports) why += " [run " + std::to_string(rep.run) + ": " + rep.stop_reason + "]";
    if (all_runs) *all_runs = reports;
    throw ConvergenceError(why);
  }
  CriticalReport out = *best;
  if (all_runs) *all_runs = std::move(reports);
  return out;
}

}  // namespace angvol

#endif  // ANGVOL_VOLUME_HPP
