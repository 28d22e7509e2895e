#ifndef ANGVOL_RATIONAL_HPP
#define ANGVOL_RATIONAL_HPP

// Exact rational linear algebra over arbitrary-precision rationals.
//
// Two independent elimination paths are provided: a rational reduced row
// echelon form (used for kernels and solves) and a fraction-free Bareiss
// elimination over integers (used for rank). Cross-checking the two is how
// rank/kernel answers are certified in the test suite.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace angvol {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using RationalVector = std::vector<Rational>;

/// "p/q", or "p" when the denominator is 1.
inline std::string to_string(const Rational& r)
{
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

/// Parses "p/q", "p" or "-p/q". Throws std::invalid_argument on junk.
inline Rational parse_rational(const std::string& text)
{
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(text));
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return Rational(num, den);
  } catch (const std::runtime_error&) {
    throw std::invalid_argument("not a rational number: '" + text + "'");
  }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational dot(std::span<const Rational> a, std::span<const Rational> b)
{
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
  return s;
}

inline bool is_zero(std::span<const Rational> v)
{
  return std::all_of(v.begin(), v.end(), [](const Rational& x) { return x == 0; });
}

/// Least common multiple of all denominators (1 for the empty vector).
inline BigInt denominator_lcm(std::span<const Rational> v)
{
  BigInt l = 1;
  for (const auto& x : v) {
    const BigInt d = boost::multiprecision::denominator(x);
    l = l / boost::multiprecision::gcd(l, d) * d;
  }
  return l;
}

/// Dense row-major matrix of rationals.
class RationalMatrix {
public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static RationalMatrix from_rows(const std::vector<RationalVector>& rows, std::size_t cols)
  {
    RationalMatrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw std::invalid_argument("from_rows: ragged input");
      std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Rational> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<Rational> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  RationalVector column(std::size_t c) const
  {
    RationalVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  RationalMatrix transposed() const
  {
    RationalMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  RationalVector operator*(std::span<const Rational> x) const
  {
    if (x.size() != cols_) throw std::invalid_argument("matrix-vector: size mismatch");
    RationalVector y(rows_);
    for (std::size_t r = 0; r < rows_; ++r) y[r] = dot(row(r), x);
    return y;
  }

  friend bool operator==(const RationalMatrix&, const RationalMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

struct RowEchelon {
  RationalMatrix reduced;
  std::vector<std::size_t> pivot_cols;
};

/// Reduced row echelon form; pivots chosen left to right, first nonzero row.
inline RowEchelon rref(RationalMatrix m)
{
  std::vector<std::size_t> pivots;
  std::size_t prow = 0;
  for (std::size_t c = 0; c < m.cols() && prow < m.rows(); ++c) {
    std::size_t sel = prow;
    while (sel < m.rows() && m(sel, c) == 0) ++sel;
    if (sel == m.rows()) continue;
    if (sel != prow)
      for (std::size_t k = 0; k < m.cols(); ++k) std::swap(m(sel, k), m(prow, k));
    const Rational inv = 1 / m(prow, c);
    for (std::size_t k = c; k < m.cols(); ++k) m(prow, k) *= inv;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == prow || m(r, c) == 0) continue;
      const Rational f = m(r, c);
      for (std::size_t k = c; k < m.cols(); ++k)
        if (m(prow, k) != 0) m(r, k) -= f * m(prow, k);
    }
    pivots.push_back(c);
    ++prow;
  }
  return {std::move(m), std::move(pivots)};
}

/// Basis of ker(m): one vector per free column, with that column set to 1.
inline std::vector<RationalVector> nullspace(const RationalMatrix& m)
{
  const RowEchelon e = rref(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : e.pivot_cols) is_pivot[c] = true;
  std::vector<RationalVector> basis;
  for (std::size_t f = 0; f < m.cols(); ++f) {
    if (is_pivot[f]) continue;
    RationalVector v(m.cols());
    v[f] = 1;
    for (std::size_t i = 0; i < e.pivot_cols.size(); ++i) v[e.pivot_cols[i]] = -e.reduced(i, f);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Rank by fraction-free (Bareiss) elimination on the integer matrix obtained
/// by clearing each row's denominators. Independent of rref().
inline std::size_t bareiss_rank(const RationalMatrix& m)
{
  const std::size_t R = m.rows(), C = m.cols();
  std::vector<BigInt> a(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    const BigInt l = denominator_lcm(m.row(r));
    for (std::size_t c = 0; c < C; ++c) {
      const Rational v = m(r, c) * l;
      a[r * C + c] = boost::multiprecision::numerator(v);
    }
  }
  auto at = [&](std::size_t r, std::size_t c) -> BigInt& { return a[r * C + c]; };
  BigInt prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < C && rank < R; ++c) {
    std::size_t sel = rank;
    while (sel < R && at(sel, c) == 0) ++sel;
    if (sel == R) continue;
    if (sel != rank)
      for (std::size_t k = 0; k < C; ++k) std::swap(at(sel, k), at(rank, k));
    for (std::size_t r = rank + 1; r < R; ++r) {
      for (std::size_t k = c + 1; k < C; ++k) at(r, k) = (at(rank, c) * at(r, k) - at(r, c) * at(rank, k)) / prev;
      at(r, c) = 0;
    }
    prev = at(rank, c);
    ++rank;
  }
  return rank;
}

inline std::size_t rank(const RationalMatrix& m) { return rref(m).pivot_cols.size(); }

/// Solves m x = b. Free variables are set to zero, so the solution is
/// supported on the pivot columns of the deterministic left-to-right pivot
/// order. Returns nullopt when inconsistent.
inline std::optional<RationalVector> solve(const RationalMatrix& m, std::span<const Rational> b)
{
  if (b.size() != m.rows()) throw std::invalid_argument("solve: size mismatch");
  RationalMatrix aug(m.rows(), m.cols() + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) aug(r, c) = m(r, c);
    aug(r, m.cols()) = b[r];
  }
  const RowEchelon e = rref(std::move(aug));
  if (!e.pivot_cols.empty() && e.pivot_cols.back() == m.cols()) return std::nullopt;
  RationalVector x(m.cols());
  for (std::size_t i = 0; i < e.pivot_cols.size(); ++i) x[e.pivot_cols[i]] = e.reduced(i, m.cols());
  return x;
}

/// True iff v lies in the span of the given vectors.
inline bool in_span(const std::vector<RationalVector>& basis, std::span<const Rational> v)
{
  if (basis.empty()) return is_zero(v);
  RationalMatrix m(v.size(), basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i < v.size(); ++i) m(i, j) = basis[j][i];
  return solve(m, v).has_value();
}

}  // namespace angvol

#endif  // ANGVOL_RATIONAL_HPP
