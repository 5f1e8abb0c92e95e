#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "perron_ap/bell.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/green.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/riccati.hpp"
#include "perron_ap/solver.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

/// Headline numbers of an independent verification pass.
struct VerificationReport {
  double residual_sup = 0.0;
  double reference_rel_error = 0.0;
  double wronskian_min_abs = 0.0;
  double residual_t_lo = 0.0;
  double residual_t_hi = 0.0;
  std::size_t residual_count = 0;
  double reference_t_end = 0.0;
  double reference_rtol = 0.0;
};

/// Equation defect |sum_{i=0}^{n} (a_i + r_i(t)) y^(i)/y| at one point,
/// evaluated through the derivative-ratio identity without forming y.
inline Complex residual_at(const SolutionBundle& b, const DerivativeStack& st, double t) {
  const int n = b.spec.n;
  ScalarOps ops;
  std::vector<Complex> Z;
  for (int j = 0; j <= n - 1; ++j) Z.push_back(st.eval(j, t));
  Complex acc = log_ratio(n, b.root.lambda, Z, ops);
  for (int i = 0; i < n; ++i)
    acc += (b.spec.a[static_cast<std::size_t>(i)] +
            b.spec.r[static_cast<std::size_t>(i)].eval(t)) *
           log_ratio(i, b.root.lambda, Z, ops);
  return acc;
}

/// max of the pointwise defect over an even scan grid (a_n = 1, r_n = 0).
inline double residual_sup(const SolutionBundle& b, double t_lo, double t_hi,
                           std::size_t count = 2001) {
  if (count < 2 || t_hi <= t_lo) throw Error("residual scan needs an increasing window");
  const DerivativeStack st(b, b.spec.n - 1);
  const double step = (t_hi - t_lo) / static_cast<double>(count - 1);
  double worst = 0.0;
  for (std::size_t q = 0; q < count; ++q) {
    const double t = t_lo + step * static_cast<double>(q);
    worst = std::max(worst, std::abs(residual_at(b, st, t)));
  }
  return worst;
}

/// Companion-system state (y, y', ..., y^{(n-1)}) of the bundle's solution
/// at t = 0, normalized to y(0) = 1.
inline std::vector<Complex> initial_state(const SolutionBundle& b) {
  const int n = b.spec.n;
  const DerivativeStack st(b, n - 2);
  ScalarOps ops;
  std::vector<Complex> Z;
  for (int j = 0; j <= n - 2; ++j) Z.push_back(st.eval(j, 0.0));
  std::vector<Complex> u;
  for (int i = 0; i < n; ++i) u.push_back(log_ratio(i, b.root.lambda, Z, ops));
  return u;
}

/// Dense-output trajectory of the embedded 5(4) integrator.
class Trajectory {
 public:
  std::vector<double> ts;
  std::vector<std::vector<Complex>> states;
  // quartic interpolant coefficients per accepted step
  std::vector<std::array<std::vector<Complex>, 5>> rcont;

  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }

  std::vector<Complex> eval(double t) const {
    if (ts.size() < 2) return states.front();
    const double tc = std::clamp(t, ts.front(), ts.back());
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(ts.begin(), ts.end(), tc) - ts.begin());
    k = std::clamp<std::size_t>(k, 1, ts.size() - 1) - 1;
    const double th = (tc - ts[k]) / (ts[k + 1] - ts[k]);
    const double th1 = 1.0 - th;
    const auto& r = rcont[k];
    std::vector<Complex> u(dim());
    for (std::size_t c = 0; c < u.size(); ++c)
      u[c] = r[0][c] + th * (r[1][c] + th1 * (r[2][c] + th * (r[3][c] + th1 * r[4][c])));
    return u;
  }

  Complex eval(std::size_t comp, double t) const { return eval(t)[comp]; }
};

/// Adaptive Dormand-Prince 5(4) with the standard quartic dense output,
/// applied to the companion first-order system of the full equation.
/// Forward integration over a moderate window.
inline Trajectory reference_integrate(const ProblemSpec& spec, const std::vector<Complex>& u0,
                                      double t_start, double t_end, double rtol = 1e-10,
                                      double atol = 1e-12) {
  const int n = spec.n;
  if (static_cast<int>(u0.size()) != n) throw Error("state dimension must match the order");
  if (!(t_end > t_start)) throw Error("forward integration needs t_end > t_start");

  auto rhs = [&](double t, const std::vector<Complex>& u) {
    std::vector<Complex> d(static_cast<std::size_t>(n));
    for (int i = 0; i + 1 < n; ++i)
      d[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i + 1)];
    Complex top{0, 0};
    for (int i = 0; i < n; ++i)
      top -= (spec.a[static_cast<std::size_t>(i)] + spec.r[static_cast<std::size_t>(i)].eval(t)) *
             u[static_cast<std::size_t>(i)];
    d[static_cast<std::size_t>(n - 1)] = top;
    return d;
  };

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  const std::size_t m = u0.size();
  auto axpy = [&](const std::vector<Complex>& base, double hstep,
                  std::initializer_list<std::pair<double, const std::vector<Complex>*>> terms) {
    std::vector<Complex> out = base;
    for (const auto& [w, k] : terms)
      for (std::size_t c = 0; c < m; ++c) out[c] += hstep * w * (*k)[c];
    return out;
  };

  Trajectory tr;
  tr.ts.push_back(t_start);
  tr.states.push_back(u0);

  const double span = t_end - t_start;
  double t = t_start, h = span * 1e-3;
  std::vector<Complex> u = u0;
  std::vector<Complex> k1 = rhs(t, u);
  long guard = 0;
  while (t < t_end) {
    if (++guard > 20000000) throw Error("step-count guard exceeded");
    if (h < 1e-14 * span) throw StepUnderflow("step size underflow in the reference integrator");
    h = std::min(h, t_end - t);

    const std::vector<Complex> k2 = rhs(t + c2 * h, axpy(u, h, {{a21, &k1}}));
    const std::vector<Complex> k3 = rhs(t + c3 * h, axpy(u, h, {{a31, &k1}, {a32, &k2}}));
    const std::vector<Complex> k4 =
        rhs(t + c4 * h, axpy(u, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const std::vector<Complex> k5 =
        rhs(t + c5 * h, axpy(u, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const std::vector<Complex> k6 = rhs(
        t + h, axpy(u, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const std::vector<Complex> unew =
        axpy(u, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const std::vector<Complex> k7 = rhs(t + h, unew);

    double err = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const Complex e = h * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] + e6 * k6[c] +
                             e7 * k7[c]);
      const double sc = atol + rtol * std::max(std::abs(u[c]), std::abs(unew[c]));
      err += std::norm(e / sc);
    }
    err = std::sqrt(err / static_cast<double>(m));
    // degenerate scales (atol = 0 on a vanishing component) give 0/0 or
    // overflow; treat as a maximal rejection instead of poisoning h
    if (!std::isfinite(err)) err = 1e30;

    if (err <= 1.0) {
      std::array<std::vector<Complex>, 5> rc;
      for (auto& v : rc) v.resize(m);
      for (std::size_t c = 0; c < m; ++c) {
        const Complex ydiff = unew[c] - u[c];
        const Complex bspl = h * k1[c] - ydiff;
        rc[0][c] = u[c];
        rc[1][c] = ydiff;
        rc[2][c] = bspl;
        rc[3][c] = ydiff - h * k7[c] - bspl;
        rc[4][c] = h * (d1 * k1[c] + d3 * k3[c] + d4 * k4[c] + d5 * k5[c] + d6 * k6[c] +
                        d7 * k7[c]);
      }
      tr.rcont.push_back(std::move(rc));
      t += h;
      u = unew;
      k1 = k7;  // first-same-as-last
      tr.ts.push_back(t);
      tr.states.push_back(u);
    }
    h *= std::clamp(0.9 * std::pow(std::max(err, 1e-30), -0.2), 0.2, 5.0);
  }
  return tr;
}

struct OracleOptions {
  double window = 30.0;  // half-width of the usable window
  double h = 0.01;
  double rho = 0.5;  // damping of the fixed-point update
  double tol = 1e-10;
  int max_iter = 500;
};

/// Independent grid-only fixed point for the reduced equation: no spectral
/// arithmetic, damped updates, constant continuation at the edges. Returns
/// the full padded grid; only the inner window is quadrature-accurate.
inline GridFunction collocation_oracle(const ProblemSpec& spec, const RootData& rd,
                                       const OracleOptions& opt = {}) {
  const int n = spec.n;
  if (n > 4) throw Error("collocation oracle supports order <= 4");
  const Complex lambda = rd.lambda;
  double amin = 1e300;
  for (double a : rd.alphas) amin = std::min(amin, std::abs(a));
  const double pad = 40.0 / amin;
  const auto half = static_cast<std::size_t>(std::llround((opt.window + pad) / opt.h));
  const double t0 = -opt.h * static_cast<double>(half);
  const std::size_t count = 2 * half + 1;
  if (count > 100000) throw Error("collocation oracle grid exceeds the size cap");

  std::vector<Complex> pvals(count);
  std::vector<std::vector<Complex>> lc(static_cast<std::size_t>(n - 1),
                                       std::vector<Complex>(count));
  std::vector<std::vector<Complex>> wv(static_cast<std::size_t>(n - 1),
                                       std::vector<Complex>(count));
  for (std::size_t q = 0; q < count; ++q) {
    const double t = t0 + opt.h * static_cast<double>(q);
    Complex p{0, 0};
    for (int k = 0; k < n; ++k)
      p += cpow0(lambda, k) * spec.r[static_cast<std::size_t>(k)].eval(t);
    pvals[q] = p;
    for (int k = 1; k <= n - 1; ++k) {
      Complex s{0, 0};
      for (int mm = k; mm <= n - 1; ++mm)
        s += binomial(mm, k) * cpow0(lambda, mm - k) *
             spec.r[static_cast<std::size_t>(mm)].eval(t);
      lc[static_cast<std::size_t>(k - 1)][q] = s;
    }
    for (int i = 2; i <= n; ++i) {
      Complex s{0, 0};
      for (int j = 0; j <= n - i; ++j) {
        const Complex aij = (i + j == n)
                                ? Complex{1, 0}
                                : spec.a[static_cast<std::size_t>(i + j)] +
                                      spec.r[static_cast<std::size_t>(i + j)].eval(t);
        s += binomial(i + j, j) * cpow0(lambda, j) * aij;
      }
      wv[static_cast<std::size_t>(i - 2)][q] = s;
    }
  }

  const CompositeGreen G(rd.gammas);
  const BellTable& bt = bell_table(n);
  ScalarOps sops;
  auto as_grid = [&](std::vector<Complex> s) {
    double sup = 0.0;
    for (const Complex& v : s) sup = std::max(sup, std::abs(v));
    return GridFunction(t0, opt.h, std::move(s),
                        TailModel::power_bound(2.0 * sup + 1e-300, 1e-3), false);
  };

  std::vector<std::vector<Complex>> Z(static_cast<std::size_t>(n - 1),
                                      std::vector<Complex>(count, Complex{0, 0}));
  for (int it = 1; it <= opt.max_iter; ++it) {
    std::vector<Complex> w = pvals;
    std::vector<Complex> zq(static_cast<std::size_t>(n - 1));
    for (std::size_t q = 0; q < count; ++q) {
      for (int k = 0; k < n - 1; ++k) {
        zq[static_cast<std::size_t>(k)] = Z[static_cast<std::size_t>(k)][q];
        w[q] += lc[static_cast<std::size_t>(k)][q] * Z[static_cast<std::size_t>(k)][q];
      }
      for (int i = 2; i <= n; ++i)
        w[q] += wv[static_cast<std::size_t>(i - 2)][q] *
                eval_sym(bt.f_poly(i - 1), zq, sops);
    }
    const GridFunction wg = as_grid(std::move(w));
    double diff = 0.0;
    for (int i = 0; i <= n - 2; ++i) {
      const GridFunction gi = G.apply(wg, i, ExtensionPolicy::Hold);
      for (std::size_t q = 0; q < count; ++q) {
        const Complex next = (1.0 - opt.rho) * Z[static_cast<std::size_t>(i)][q] +
                             opt.rho * (-gi.samples()[q]);
        diff = std::max(diff, std::abs(next - Z[static_cast<std::size_t>(i)][q]));
        Z[static_cast<std::size_t>(i)][q] = next;
      }
    }
    if (diff <= opt.tol * opt.rho) return as_grid(std::move(Z[0]));
  }
  throw NoConvergence("collocation oracle did not settle");
}

/// max over [0, t_end] of |y_rk - y_rep| / |y_rep|, where y_rk integrates the
/// companion system from the reconstructed initial data and y_rep evaluates
/// the structured representation.
inline double reference_agreement(const SolutionBundle& b, double t_end, double rtol = 1e-10,
                                  std::size_t count = 401) {
  const SolutionRepresentation rep = reconstruct(b);
  const Trajectory tr = reference_integrate(b.spec, initial_state(b), 0.0, t_end, rtol);
  double worst = 0.0;
  for (std::size_t q = 0; q < count; ++q) {
    const double t = t_end * static_cast<double>(q) / static_cast<double>(count - 1);
    const Complex ye = representation_eval(rep, t);
    worst = std::max(worst, std::abs(tr.eval(0, t) - ye) / std::max(std::abs(ye), 1e-300));
  }
  return worst;
}

/// min over the sample times of |det W(t)| for the ratio matrix
/// W[i][k] = y_k^(i)/y_k; a uniform lower bound away from zero certifies
/// pointwise independence of the system.
inline double wronskian_sample(const std::vector<SolutionBundle>& bundles,
                               const std::vector<double>& ts) {
  const std::size_t n = bundles.size();
  if (n == 0 || ts.empty()) throw Error("wronskian sample needs bundles and times");
  for (const SolutionBundle& b : bundles)
    if (static_cast<std::size_t>(b.spec.n) != n)
      throw Error("bundle count must match the equation order");

  std::vector<DerivativeStack> stacks;
  stacks.reserve(n);
  for (const SolutionBundle& b : bundles) stacks.emplace_back(b, static_cast<int>(n) - 2);
  ScalarOps ops;

  double best = 1e300;
  for (double t : ts) {
    SquareMatrix W(static_cast<int>(n));
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<Complex> Z;
      for (int j = 0; j + 2 <= static_cast<int>(n); ++j) Z.push_back(stacks[k].eval(j, t));
      for (std::size_t i = 0; i < n; ++i)
        W.at(static_cast<int>(i), static_cast<int>(k)) =
            log_ratio(static_cast<int>(i), bundles[k].root.lambda, Z, ops);
    }
    best = std::min(best, std::abs(W.det()));
  }
  return best;
}

}  // namespace perron_ap
