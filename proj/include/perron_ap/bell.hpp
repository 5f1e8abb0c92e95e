#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "perron_ap/errors.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

/// Monomial coeff * x_1^{e_1} x_2^{e_2} ... in the variables x_k standing for
/// the successive derivatives z^{(k-1)}.
struct Monomial {
  std::int64_t coeff = 0;
  std::vector<int> exps;  // exps[k] = exponent of x_{k+1}

  int degree() const {
    int d = 0;
    for (int e : exps) d += e;
    return d;
  }
};

struct SymPoly {
  std::vector<Monomial> terms;
};

namespace detail {

inline void add_monomial(SymPoly& p, Monomial m) {
  while (!m.exps.empty() && m.exps.back() == 0) m.exps.pop_back();
  for (auto& t : p.terms) {
    if (t.exps == m.exps) {
      t.coeff += m.coeff;
      return;
    }
  }
  p.terms.push_back(std::move(m));
}

inline void normalize(SymPoly& p) {
  p.terms.erase(std::remove_if(p.terms.begin(), p.terms.end(),
                               [](const Monomial& m) { return m.coeff == 0; }),
                p.terms.end());
  std::sort(p.terms.begin(), p.terms.end(), [](const Monomial& a, const Monomial& b) {
    if (a.exps.size() != b.exps.size()) return a.exps.size() < b.exps.size();
    return a.exps < b.exps;
  });
}

}  // namespace detail

/// Complete Bell polynomials B_0..B_n in symbolic form, built by the
/// binomial recursion B_{i+1} = sum_j C(i,j) B_{i-j} x_{j+1}.
class BellTable {
 public:
  explicit BellTable(int order) : order_(order) {
    polys_.resize(static_cast<std::size_t>(order) + 1);
    polys_[0].terms.push_back(Monomial{1, {}});  // B_0 = 1
    for (int i = 0; i < order; ++i) {
      SymPoly next;
      for (int j = 0; j <= i; ++j) {
        const std::int64_t c = static_cast<std::int64_t>(binomial(i, j));
        for (const Monomial& m : polys_[static_cast<std::size_t>(i - j)].terms) {
          Monomial nm = m;
          if (static_cast<int>(nm.exps.size()) < j + 1) nm.exps.resize(j + 1, 0);
          nm.exps[j] += 1;
          nm.coeff *= c;
          detail::add_monomial(next, std::move(nm));
        }
      }
      detail::normalize(next);
      polys_[static_cast<std::size_t>(i) + 1] = std::move(next);
    }
  }

  int order() const { return order_; }

  const SymPoly& bell(int i) const { return polys_.at(static_cast<std::size_t>(i)); }

  /// f_i = B_{i+1} - x_{i+1}: the part of B_{i+1} that is nonlinear in the
  /// top variable; consumes x_1..x_i only. f_0 = 0.
  SymPoly f_poly(int i) const {
    SymPoly r = bell(i + 1);
    Monomial top;
    top.coeff = -1;
    top.exps.assign(static_cast<std::size_t>(i) + 1, 0);
    top.exps[static_cast<std::size_t>(i)] = 1;
    detail::add_monomial(r, std::move(top));
    detail::normalize(r);
    return r;
  }

 private:
  int order_;
  std::vector<SymPoly> polys_;
};

/// Shared immutable tables, built on demand.
inline const BellTable& bell_table(int order) {
  static std::mutex mu;
  static std::map<int, BellTable> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, BellTable(order)).first;
  return it->second;
}

/// Ring-generic evaluation: Ops supplies zero(), add, mul, scale-by-double.
/// args[k] plays x_{k+1}; monomials touching absent variables require
/// args.size() >= max variable index.
template <typename Ring, typename Ops>
Ring eval_sym(const SymPoly& p, const std::vector<Ring>& args, const Ops& ops) {
  Ring acc = ops.zero();
  for (const Monomial& m : p.terms) {
    bool first = true;
    Ring term = ops.zero();
    for (std::size_t v = 0; v < m.exps.size(); ++v) {
      for (int e = 0; e < m.exps[v]; ++e) {
        if (first) {
          term = args.at(v);
          first = false;
        } else {
          term = ops.mul(term, args.at(v));
        }
      }
    }
    if (first) {
      // constant monomial
      acc = ops.add(acc, ops.constant(static_cast<double>(m.coeff)));
    } else {
      acc = ops.add(acc, ops.scale(term, static_cast<double>(m.coeff)));
    }
  }
  return acc;
}

struct ScalarOps {
  Complex zero() const { return Complex{0, 0}; }
  Complex constant(double c) const { return Complex{c, 0}; }
  Complex add(Complex a, Complex b) const { return a + b; }
  Complex mul(Complex a, Complex b) const { return a * b; }
  Complex scale(Complex a, double s) const { return a * s; }
  Complex cscale(Complex a, Complex s) const { return a * s; }
};

/// Increasing majorant of the Lipschitz modulus of the nonlinear maps
/// f_1..f_{n-1} on the closed tuple ball of radius delta (ell^1 tuple norm):
/// the largest absolute-coefficient partial derivative at the all-delta point.
/// For n = 3 this is exactly 3 delta^2 + 3 delta.
inline double lipschitz_modulus(int n, double delta) {
  if (n < 2) return 0.0;
  const BellTable& table = bell_table(n);
  double best = 0.0;
  for (int i = 1; i <= n - 1; ++i) {
    const SymPoly f = table.f_poly(i);
    for (int var = 0; var < i; ++var) {
      double g = 0.0;
      for (const Monomial& m : f.terms) {
        const int e = var < static_cast<int>(m.exps.size()) ? m.exps[var] : 0;
        if (e == 0) continue;
        // |coeff| * e * delta^{deg-1}
        g += std::abs(static_cast<double>(m.coeff)) * e * rpow0(delta, m.degree() - 1);
      }
      best = std::max(best, g);
    }
  }
  return best;
}

/// Right derivative of lipschitz_modulus in delta: slope of the branch that
/// attains the max (largest slope on ties).
inline double lipschitz_modulus_slope(int n, double delta) {
  if (n < 2) return 0.0;
  const BellTable& table = bell_table(n);
  double best = 0.0, best_slope = 0.0;
  for (int i = 1; i <= n - 1; ++i) {
    const SymPoly f = table.f_poly(i);
    for (int var = 0; var < i; ++var) {
      double g = 0.0, s = 0.0;
      for (const Monomial& m : f.terms) {
        const int e = var < static_cast<int>(m.exps.size()) ? m.exps[var] : 0;
        if (e == 0) continue;
        const double c = std::abs(static_cast<double>(m.coeff)) * e;
        g += c * rpow0(delta, m.degree() - 1);
        if (m.degree() >= 2)
          s += c * static_cast<double>(m.degree() - 1) * rpow0(delta, m.degree() - 2);
      }
      if (g > best || (g == best && s > best_slope)) {
        best = g;
        best_slope = s;
      }
    }
  }
  return best_slope;
}

}  // namespace perron_ap
