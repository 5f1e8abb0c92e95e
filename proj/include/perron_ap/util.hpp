#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "perron_ap/errors.hpp"

namespace perron_ap {

using Complex = std::complex<double>;

/// Binomial coefficient as an exact double (n <= 60 stays integral).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

/// x^k with the 0^0 = 1 convention used throughout the reduction formulas.
inline Complex cpow0(Complex x, int k) {
  Complex r{1.0, 0.0};
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

inline double rpow0(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

/// Horner evaluation of c[0] + c[1] x + ... (low to high).
inline Complex poly_eval(const std::vector<Complex>& c, Complex x) {
  Complex r{0.0, 0.0};
  for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
  return r;
}

/// Monic polynomial coefficients (low to high, without the leading 1) from roots.
inline std::vector<Complex> poly_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> c{Complex{1.0, 0.0}};  // starts as the constant poly 1
  for (Complex r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c.swap(next);
  }
  c.pop_back();  // drop the leading 1: callers pass a_0..a_{n-1} with a_n = 1 implied
  return c;
}

/// Dense complex square matrix, row-major. Only tiny orders appear here.
class SquareMatrix {
 public:
  explicit SquareMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, Complex{0, 0}) {}

  int order() const { return n_; }
  Complex& at(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  Complex at(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }

  /// Max absolute column sum.
  double norm1() const {
    double best = 0.0;
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += std::abs(at(i, j));
      best = std::max(best, s);
    }
    return best;
  }

  /// Max absolute row sum.
  double norm_inf() const {
    double best = 0.0;
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += std::abs(at(i, j));
      best = std::max(best, s);
    }
    return best;
  }

  /// Gauss-Jordan inverse with partial pivoting.
  SquareMatrix inverse() const {
    SquareMatrix a(*this);
    SquareMatrix inv(n_);
    for (int i = 0; i < n_; ++i) inv.at(i, i) = Complex{1, 0};
    for (int col = 0; col < n_; ++col) {
      int piv = col;
      double best = std::abs(a.at(col, col));
      for (int i = col + 1; i < n_; ++i) {
        double v = std::abs(a.at(i, col));
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best == 0.0) throw DegenerateRoots("singular matrix in inverse()");
      if (piv != col) {
        for (int j = 0; j < n_; ++j) {
          std::swap(a.at(piv, j), a.at(col, j));
          std::swap(inv.at(piv, j), inv.at(col, j));
        }
      }
      const Complex d = a.at(col, col);
      for (int j = 0; j < n_; ++j) {
        a.at(col, j) /= d;
        inv.at(col, j) /= d;
      }
      for (int i = 0; i < n_; ++i) {
        if (i == col) continue;
        const Complex f = a.at(i, col);
        if (f == Complex{0, 0}) continue;
        for (int j = 0; j < n_; ++j) {
          a.at(i, j) -= f * a.at(col, j);
          inv.at(i, j) -= f * inv.at(col, j);
        }
      }
    }
    return inv;
  }

  /// Determinant via LU with partial pivoting.
  Complex det() const {
    SquareMatrix a(*this);
    Complex d{1, 0};
    for (int col = 0; col < n_; ++col) {
      int piv = col;
      double best = std::abs(a.at(col, col));
      for (int i = col + 1; i < n_; ++i) {
        double v = std::abs(a.at(i, col));
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best == 0.0) return Complex{0, 0};
      if (piv != col) {
        for (int j = col; j < n_; ++j) std::swap(a.at(piv, j), a.at(col, j));
        d = -d;
      }
      d *= a.at(col, col);
      for (int i = col + 1; i < n_; ++i) {
        const Complex f = a.at(i, col) / a.at(col, col);
        for (int j = col; j < n_; ++j) a.at(i, j) -= f * a.at(col, j);
      }
    }
    return d;
  }

 private:
  int n_;
  std::vector<Complex> data_;
};

/// Adaptive Simpson quadrature for smooth real integrands; used by the
/// diagnostic (sharp) bound modes and a few tests.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 24) {
  auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  struct Frame {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = simpson(a, b, fa, fm, fb);
  std::vector<Frame> stack{{a, b, fa, fm, fb, whole, depth}};
  double total = 0.0;
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    double mid = 0.5 * (fr.a + fr.b);
    double lm = 0.5 * (fr.a + mid), rm = 0.5 * (mid + fr.b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fr.a, mid, fr.fa, flm, fr.fm);
    double right = simpson(mid, fr.b, fr.fm, frm, fr.fb);
    if (fr.depth <= 0 || std::abs(left + right - fr.whole) <= 15.0 * tol) {
      total += left + right + (left + right - fr.whole) / 15.0;
    } else {
      stack.push_back({fr.a, mid, fr.fa, flm, fr.fm, left, fr.depth - 1});
      stack.push_back({mid, fr.b, fr.fm, frm, fr.fb, right, fr.depth - 1});
    }
  }
  return total;
}

}  // namespace perron_ap
