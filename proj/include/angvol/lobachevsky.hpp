#ifndef ANGVOL_LOBACHEVSKY_HPP
#define ANGVOL_LOBACHEVSKY_HPP

// Lobachevsky function L(x) = -int_0^x ln|2 sin u| du = (1/2) Cl2(2x).
//
// The Fourier series (1/2) sum sin(2nx)/n^2 converges far too slowly for
// 1e-13 accuracy, so Cl2 is summed from its power series on (-pi, pi]:
//   Cl2(y) = y - y ln|y| + sum_{n>=1} zeta(2n) / (n (2n+1)) * y (y / 2 pi)^{2n}
// whose terms decay like 4^-n at |y| = pi.

#include <array>
#include <cmath>
#include <numbers>

namespace angvol {

namespace detail {

inline constexpr int kClausenTerms = 40;

/// zeta(2n) / (n (2n+1)) for n = 1..kClausenTerms.
inline const std::array<double, kClausenTerms + 1>& clausen_coefficients()
{
  static const auto table = [] {
    std::array<double, kClausenTerms + 1> c{};
    for (int n = 1; n <= kClausenTerms; ++n) {
      // zeta(2n) by direct summation plus the integral tail; exact enough
      // for n >= 1 once K = 2000 (tail ~ K^{1-2n}).
      double z = 0;
      const int K = n == 1 ? 0 : 2000;
      for (int k = K; k >= 1; --k) z += std::pow(static_cast<double>(k), -2.0 * n);
      if (n == 1) z = std::numbers::pi * std::numbers::pi / 6;
      else z += std::pow(K + 0.5, 1.0 - 2.0 * n) / (2.0 * n - 1.0);
      c[static_cast<std::size_t>(n)] = z / (n * (2.0 * n + 1.0));
    }
    return c;
  }();
  return table;
}

/// Cl2(y) for y in [-pi, pi].
inline double clausen_reduced(double y)
{
  if (y == 0) return 0;
  const double r = y / (2 * std::numbers::pi);
  const double r2 = r * r;
  const auto& c = clausen_coefficients();
  double tail = 0;
  for (int n = kClausenTerms; n >= 1; --n) tail = (tail + c[static_cast<std::size_t>(n)]) * r2;
  return y - y * std::log(std::abs(y)) + y * tail;
}

}  // namespace detail

/// Clausen function Cl2(y) = sum sin(n y) / n^2.
inline double clausen(double y)
{
  constexpr double two_pi = 2 * std::numbers::pi;
  double r = std::remainder(y, two_pi);  // in [-pi, pi]
  return detail::clausen_reduced(r);
}

/// L(x); odd, pi-periodic, maximal at pi/6.
inline double lobachevsky(double x) { return 0.5 * clausen(2 * x); }

/// L'(x) = -ln|2 sin x|; +infinity on pi Z.
inline double lobachevsky_derivative(double x) { return -std::log(std::abs(2 * std::sin(x))); }

}  // namespace angvol

#endif  // ANGVOL_LOBACHEVSKY_HPP
