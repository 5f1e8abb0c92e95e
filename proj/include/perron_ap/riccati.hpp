#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perron_ap/bell.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

enum class FunctionClass { AP, AAP, AAP0, PAP, PAP0 };

inline std::string class_name(FunctionClass c) {
  switch (c) {
    case FunctionClass::AP: return "AP";
    case FunctionClass::AAP: return "AAP";
    case FunctionClass::AAP0: return "AAP0";
    case FunctionClass::PAP: return "pAP";
    case FunctionClass::PAP0: return "pAP0";
  }
  return "AP";
}

inline FunctionClass class_from_name(const std::string& s) {
  if (s == "AP") return FunctionClass::AP;
  if (s == "AAP") return FunctionClass::AAP;
  if (s == "AAP0") return FunctionClass::AAP0;
  if (s == "pAP") return FunctionClass::PAP;
  if (s == "pAP0") return FunctionClass::PAP0;
  throw ConfigParse("unknown function class: " + s);
}

/// Coefficient perturbation r_i = mu_i + nu_i: almost-periodic part plus an
/// optional decaying correction.
struct MixedFunction {
  TrigPoly mu;
  std::optional<GridFunction> nu;

  bool has_decay() const { return nu.has_value(); }
  Complex eval(double t) const { return mu.eval(t) + (nu ? nu->eval(t) : Complex{0, 0}); }
  double sup_bound() const { return sup_norm_upper(mu) + (nu ? nu->sup_norm() : 0.0); }
  bool zero() const { return mu.empty() && !nu; }
};

struct ProblemSpec {
  int n = 0;
  std::vector<Complex> a;        // a_0..a_{n-1}; a_n = 1 implied
  std::vector<MixedFunction> r;  // r_0..r_{n-1}; r_n = 0 implied
  FunctionClass cls = FunctionClass::AP;
  double p = 0.0;  // integrability exponent for the pAP classes

  void validate() const {
    if (n < 2) throw ConfigParse("order must be >= 2");
    if (static_cast<int>(a.size()) != n)
      throw ConfigParse("expected " + std::to_string(n) + " coefficients a_0..a_" +
                        std::to_string(n - 1));
    if (static_cast<int>(r.size()) != n)
      throw ConfigParse("expected " + std::to_string(n) + " perturbation entries");
    const bool any_decay =
        std::any_of(r.begin(), r.end(), [](const MixedFunction& m) { return m.has_decay(); });
    if (cls == FunctionClass::AP && any_decay)
      throw ConfigParse("class AP admits no decaying perturbation part");
    if ((cls == FunctionClass::PAP || cls == FunctionClass::PAP0)) {
      if (p < 1.0) throw ConfigParse("pAP class needs integrability exponent p >= 1");
      for (const MixedFunction& m : r)
        if (m.nu && m.nu->tail().kind == TailKind::PowerBound && m.nu->tail().q * p <= 1.0)
          throw ConfigParse("pAP decaying part envelope not p-integrable (need q*p > 1)");
    }
  }
};

/// Roots of x^n + a_{n-1} x^{n-1} + ... + a_0 by Aberth-Ehrlich simultaneous
/// iteration, one Newton polish per root, sorted by real part. The standing
/// hypothesis (pairwise distinct real parts) is enforced here.
inline std::vector<Complex> char_roots(const std::vector<Complex>& a) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw ConfigParse("char_roots needs degree >= 1");
  std::vector<Complex> c(a);
  c.push_back(Complex{1, 0});

  auto p_and_dp = [&](Complex x) {
    Complex p{0, 0}, dp{0, 0};
    for (int k = n; k >= 0; --k) {
      dp = dp * x + p;
      p = p * x + c[k];
    }
    return std::pair<Complex, Complex>{p, dp};
  };
  auto residual_ok = [&](Complex x, Complex p) {
    return std::abs(p) < 1e-12 * (1.0 + std::pow(std::abs(x), n));
  };

  double radius = 1.0;
  for (const Complex& ai : a) radius = std::max(radius, std::abs(ai));
  radius = 1.0 + radius;
  std::vector<Complex> x(n);
  for (int k = 0; k < n; ++k) {
    const double ang = 2.0 * 3.14159265358979323846 * k / n + 0.4;
    x[k] = radius * (0.75 + 0.2 * k / std::max(1, n - 1)) * Complex{std::cos(ang), std::sin(ang)};
  }

  bool converged = false;
  for (int iter = 0; iter < 500 && !converged; ++iter) {
    converged = true;
    for (int k = 0; k < n; ++k) {
      auto [p, dp] = p_and_dp(x[k]);
      if (residual_ok(x[k], p)) continue;
      Complex ratio = dp != Complex{0, 0} ? p / dp : Complex{1e-3, 0};
      Complex rep{0, 0};
      for (int j = 0; j < n; ++j)
        if (j != k) rep += 1.0 / (x[k] - x[j]);
      const Complex denom = 1.0 - ratio * rep;
      const Complex step = denom != Complex{0, 0} ? ratio / denom : ratio;
      x[k] -= step;
      if (std::abs(step) > 1e-13 * (1.0 + std::abs(x[k]))) converged = false;
    }
  }
  for (int k = 0; k < n; ++k) {
    auto [p, dp] = p_and_dp(x[k]);
    if (dp != Complex{0, 0}) x[k] -= p / dp;
    auto [p2, dp2] = p_and_dp(x[k]);
    (void)dp2;
    if (!residual_ok(x[k], p2)) throw NoConvergence("root refinement stalled");
  }

  bool real_coeffs = true;
  for (const Complex& ai : a)
    if (ai.imag() != 0.0) real_coeffs = false;
  if (real_coeffs)
    for (Complex& xi : x)
      if (std::abs(xi.imag()) < 1e-10 * (1.0 + std::abs(xi.real()))) xi = Complex{xi.real(), 0};

  std::sort(x.begin(), x.end(), [](Complex u, Complex v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(x[i].real() - x[j].real()) < 1e-9)
        throw RepeatedRealParts("characteristic roots share a real part within 1e-9");
  return x;
}

/// Everything derived from distinguishing one root lambda: the shifted roots
/// gamma_j = lambda_j - lambda, the Vandermonde-type products Gamma_j, the
/// dichotomy rates alpha_j and the tuple-norm weights alpha~_j.
struct RootData {
  Complex lambda;
  std::vector<Complex> others;
  std::vector<Complex> gammas;
  std::vector<Complex> Gammas;
  std::vector<double> alphas;        // Re gamma_j
  std::vector<double> alpha_tildes;  // sum_{i=0}^{n-2} |gamma_j|^i

  int order() const { return static_cast<int>(gammas.size()) + 1; }
};

inline RootData build_root_data(const std::vector<Complex>& roots, std::size_t pick) {
  const std::size_t n = roots.size();
  if (pick >= n) throw Error("root index out of range");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(roots[i].real() - roots[j].real()) < 1e-9)
        throw RepeatedRealParts("roots share a real part within 1e-9");
  RootData d;
  d.lambda = roots[pick];
  for (std::size_t j = 0; j < n; ++j)
    if (j != pick) {
      d.others.push_back(roots[j]);
      d.gammas.push_back(roots[j] - d.lambda);
    }
  const std::size_t m = d.gammas.size();
  d.Gammas.resize(m);
  d.alphas.resize(m);
  d.alpha_tildes.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    Complex prod{1, 0};
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) prod *= d.gammas[i] - d.gammas[k];
    d.Gammas[i] = prod;
    d.alphas[i] = d.gammas[i].real();
    double at = 0.0;
    for (std::size_t q = 0; q + 1 < n; ++q) at += rpow0(std::abs(d.gammas[i]), static_cast<int>(q));
    d.alpha_tildes[i] = at;
  }
  return d;
}

/// Constant-coefficient linear part: D z = sum_{j=1}^{n} dc_j z^{(j-1)} with
/// dc_j = sum_{m=j}^{n} C(m,j) a_m lambda^{m-j}, a_n = 1. Its characteristic
/// polynomial has exactly the shifted roots gamma_j.
inline std::vector<Complex> d_coefficients(const std::vector<Complex>& a, Complex lambda) {
  const int n = static_cast<int>(a.size());
  std::vector<Complex> dc(n);
  for (int j = 1; j <= n; ++j) {
    Complex s{0, 0};
    for (int m = j; m <= n; ++m) {
      const Complex am = m == n ? Complex{1, 0} : a[m];
      s += binomial(m, j) * am * cpow0(lambda, m - j);
    }
    dc[j - 1] = s;
  }
  return dc;
}

inline TrigPoly d_apply(const std::vector<Complex>& a, Complex lambda, const TrigPoly& z) {
  const std::vector<Complex> dc = d_coefficients(a, lambda);
  TrigPoly acc;
  TrigPoly zd = z;
  for (std::size_t j = 0; j < dc.size(); ++j) {
    acc = acc + dc[j] * zd;
    if (j + 1 < dc.size()) zd = derivative(zd);
  }
  return acc;
}

inline TrigPoly d_apply(const ProblemSpec& s, Complex lambda, const TrigPoly& z) {
  return d_apply(s.a, lambda, z);
}

/// Pure perturbation forcing P(r;lambda) = sum_k lambda^k r_k, returned as
/// the almost-periodic part and (separately) the decaying part resampled to
/// a common grid.
inline std::pair<TrigPoly, std::optional<GridFunction>> p_r_lambda(const ProblemSpec& s,
                                                                   Complex lambda) {
  TrigPoly ap;
  for (int k = 0; k < s.n; ++k) ap = ap + cpow0(lambda, k) * s.r[k].mu;

  std::optional<GridFunction> dec;
  double t_lo = 0, t_hi = 0, h = 0;
  bool any = false;
  for (int k = 0; k < s.n; ++k)
    if (s.r[k].nu) {
      const GridFunction& g = *s.r[k].nu;
      if (!any) {
        t_lo = g.t0();
        t_hi = g.t_end();
        h = g.h();
        any = true;
      } else {
        t_lo = std::min(t_lo, g.t0());
        t_hi = std::max(t_hi, g.t_end());
        h = std::min(h, g.h());
      }
    }
  if (any) {
    const std::size_t count = static_cast<std::size_t>(std::ceil((t_hi - t_lo) / h)) + 1;
    for (int k = 0; k < s.n; ++k)
      if (s.r[k].nu) {
        GridFunction part = cpow0(lambda, k) * resample(*s.r[k].nu, t_lo, h, count);
        dec = dec ? *dec + part : part;
      }
  }
  return {ap, dec};
}

/// Variable linear coefficients lc_k = sum_{m=k}^{n-1} C(m,k) lambda^{m-k} r_m
/// for k = 1..n-1 (almost-periodic parts).
inline std::vector<TrigPoly> l_coefficients_ap(const ProblemSpec& s, Complex lambda) {
  std::vector<TrigPoly> lc;
  for (int k = 1; k <= s.n - 1; ++k) {
    TrigPoly c;
    for (int m = k; m <= s.n - 1; ++m) c = c + (binomial(m, k) * cpow0(lambda, m - k)) * s.r[m].mu;
    lc.push_back(c);
  }
  return lc;
}

/// Sup bounds of the decaying contributions to each lc_k.
inline std::vector<double> l_coefficient_decay_sups(const ProblemSpec& s, Complex lambda) {
  std::vector<double> out;
  for (int k = 1; k <= s.n - 1; ++k) {
    double b = 0.0;
    for (int m = k; m <= s.n - 1; ++m)
      if (s.r[m].nu)
        b += binomial(m, k) * std::pow(std::abs(lambda), m - k) * s.r[m].nu->sup_norm();
    out.push_back(b);
  }
  return out;
}

inline TrigPoly l_apply(const ProblemSpec& s, Complex lambda, const std::vector<TrigPoly>& Z,
                        TruncationContext& ctx) {
  if (static_cast<int>(Z.size()) != s.n - 1) throw Error("l_apply expects n-1 tuple entries");
  const std::vector<TrigPoly> lc = l_coefficients_ap(s, lambda);
  TrigPoly acc;
  for (std::size_t k = 0; k < lc.size(); ++k) acc = acc + mul(lc[k], Z[k], ctx);
  return acc;
}

struct TrigOps {
  TruncationContext& ctx;
  TrigPoly zero() const { return TrigPoly{}; }
  TrigPoly constant(double c) const { return TrigPoly::constant(Complex{c, 0}); }
  TrigPoly add(const TrigPoly& x, const TrigPoly& y) const { return x + y; }
  TrigPoly mul(const TrigPoly& x, const TrigPoly& y) const { return perron_ap::mul(x, y, ctx); }
  TrigPoly scale(const TrigPoly& x, double c) const { return c * x; }
  TrigPoly cscale(const TrigPoly& x, Complex c) const { return c * x; }
};

struct GridOps {
  double t0 = 0, h = 1;
  std::size_t count = 2;
  GridFunction zero() const { return constant(0.0); }
  GridFunction constant(double c) const {
    return GridFunction(t0, h, std::vector<Complex>(count, Complex{c, 0}),
                        c == 0.0 ? TailModel::zero() : TailModel::power_bound(2.0 * std::abs(c), 1e-3),
                        false);
  }
  GridFunction add(const GridFunction& x, const GridFunction& y) const { return x + y; }
  GridFunction mul(const GridFunction& x, const GridFunction& y) const { return x * y; }
  GridFunction scale(const GridFunction& x, double c) const { return Complex{c, 0} * x; }
  GridFunction cscale(const GridFunction& x, Complex c) const { return c * x; }
};

/// Nonlinear-term weights w_i = sum_{j=0}^{n-i} C(i+j,j)(a_{i+j}+r_{i+j})
/// lambda^j for i = 2..n, split into scalar and almost-periodic parts.
struct FWeights {
  std::vector<Complex> scalar;  // index i-2
  std::vector<TrigPoly> ap;
  std::vector<double> decay_sup;  // sup bound of the decaying contribution
};

inline FWeights f_weights(const ProblemSpec& s, Complex lambda) {
  FWeights w;
  for (int i = 2; i <= s.n; ++i) {
    Complex sc{0, 0};
    TrigPoly ap;
    double dec = 0.0;
    for (int j = 0; j <= s.n - i; ++j) {
      const double cij = binomial(i + j, j);
      const Complex lj = cpow0(lambda, j);
      const Complex aij = (i + j == s.n) ? Complex{1, 0} : s.a[i + j];
      sc += cij * aij * lj;
      if (i + j < s.n) {
        ap = ap + (cij * lj) * s.r[i + j].mu;
        if (s.r[i + j].nu) dec += cij * std::abs(lj) * s.r[i + j].nu->sup_norm();
      }
    }
    w.scalar.push_back(sc);
    w.ap.push_back(ap);
    w.decay_sup.push_back(dec);
  }
  return w;
}

/// F(Z) = sum_{i=2}^{n} w_i f_{i-1}(z, ..., z^{(i-2)}), the degree >= 2 part.
inline TrigPoly f_apply(const ProblemSpec& s, Complex lambda, const std::vector<TrigPoly>& Z,
                        TruncationContext& ctx) {
  if (static_cast<int>(Z.size()) != s.n - 1) throw Error("f_apply expects n-1 tuple entries");
  const FWeights w = f_weights(s, lambda);
  TrigOps ops{ctx};
  const BellTable& bt = bell_table(s.n);
  TrigPoly acc;
  for (int i = 2; i <= s.n; ++i) {
    TrigPoly fv = eval_sym(bt.f_poly(i - 1), Z, ops);
    TrigPoly wi = w.ap[i - 2] + TrigPoly::constant(w.scalar[i - 2]);
    acc = acc + mul(wi, fv, ctx);
  }
  return acc;
}

/// Generic-ring variants used by the grid-based stages: coefficients already
/// materialized in the ring.
template <class Ring, class Ops>
Ring l_apply_ring(const std::vector<Ring>& lc, const std::vector<Ring>& Z, Ops& ops) {
  Ring acc = ops.constant(0.0);
  for (std::size_t k = 0; k < lc.size(); ++k) acc = ops.add(acc, ops.mul(lc[k], Z[k]));
  return acc;
}

template <class Ring, class Ops>
Ring f_apply_ring(int n, const std::vector<Ring>& weights, const std::vector<Ring>& Z, Ops& ops) {
  const BellTable& bt = bell_table(n);
  Ring acc = ops.constant(0.0);
  for (int i = 2; i <= n; ++i) {
    Ring fv = eval_sym(bt.f_poly(i - 1), Z, ops);
    acc = ops.add(acc, ops.mul(weights[i - 2], fv));
  }
  return acc;
}

/// y^{(i)}/y for y = exp(lambda t + int z): sum_{j<=i} C(i,j) lambda^{i-j}
/// B_j(z, ..., z^{(j-1)}).
template <class Ring, class Ops>
Ring log_ratio(int i, Complex lambda, const std::vector<Ring>& Z, Ops& ops) {
  const BellTable& bt = bell_table(std::max(i, 1));
  Ring acc = ops.cscale(ops.constant(1.0), cpow0(lambda, i));
  for (int j = 1; j <= i; ++j) {
    Ring bj = eval_sym(bt.bell(j), Z, ops);
    acc = ops.add(acc, ops.cscale(bj, binomial(i, j) * cpow0(lambda, i - j)));
  }
  return acc;
}

}  // namespace perron_ap
