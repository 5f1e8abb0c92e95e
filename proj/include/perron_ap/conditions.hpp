#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perron_ap/bell.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/green.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/riccati.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

struct ConditionReport {
  Complex lambda;
  double beta = 0;
  double L0 = 0, Lbeta = 0, Q0 = 0, Qbeta = 0, H = 0;
  double delta_lambda = 0, M = 0, gM = 0, eps0 = 0;
  bool existence_pass = false;
  bool order_pass = false;
  std::vector<std::string> notes;
  bool sharp = false;
  double L0_sharp = 0, Q0_sharp = 0, H_sharp = 0;
};

namespace detail {

inline double shifted_rate(double alpha, double beta) {
  return alpha - (alpha > 0 ? beta : -beta);
}

inline void require_beta(const RootData& rd, double beta) {
  if (beta < 0) throw BetaTooLarge("beta must be nonnegative");
  double amin = 1e300;
  for (double a : rd.alphas) amin = std::min(amin, std::abs(a));
  if (beta >= amin) throw BetaTooLarge("beta must stay below min |Re gamma_j|");
}

// certified (or sharp) bound for ||I_rate[|ap| + decaying part]||_inf
inline double mixed_ibound(double rate, const TrigPoly& ap, double decay_sup, BoundMode mode,
                           const SharpOptions& opt) {
  double b = decay_sup / std::abs(rate);
  if (!ap.empty()) b += ibound_sup(rate, ap, mode, opt);
  return b;
}

}  // namespace detail

/// L_beta = sum_j (alpha~_j/|Gamma_j|) sum_{k=1}^{n-1}
///          ||I_{alpha_j - sgn(alpha_j) beta}[lc_k]||_inf,
/// the contraction contribution of the perturbation's linear coefficients.
inline double compute_L(const RootData& rd, const ProblemSpec& spec, double beta,
                        BoundMode mode = BoundMode::Certified, const SharpOptions& opt = {}) {
  detail::require_beta(rd, beta);
  const std::vector<TrigPoly> lc = l_coefficients_ap(spec, rd.lambda);
  const std::vector<double> lc_dec = l_coefficient_decay_sups(spec, rd.lambda);
  double total = 0.0;
  for (std::size_t j = 0; j < rd.gammas.size(); ++j) {
    const double rate = detail::shifted_rate(rd.alphas[j], beta);
    double inner = 0.0;
    for (std::size_t k = 0; k < lc.size(); ++k)
      inner += detail::mixed_ibound(rate, lc[k], lc_dec[k], mode, opt);
    total += rd.alpha_tildes[j] / std::abs(rd.Gammas[j]) * inner;
  }
  return total;
}

/// Q_beta = sum_j (alpha~_j/|Gamma_j|) sum_{i=2}^{n} sum_{k=0}^{i-2}
///          C(i,k)|lambda|^k [ |a_i|/|rate_j| + ||I_{rate_j}[|r_i|]||_inf ],
/// with a_n = 1 and r_n = 0: the weight budget of the nonlinear term.
inline double compute_Q(const RootData& rd, const ProblemSpec& spec, double beta,
                        BoundMode mode = BoundMode::Certified, const SharpOptions& opt = {}) {
  detail::require_beta(rd, beta);
  const int n = spec.n;
  const double al = std::abs(rd.lambda);
  double total = 0.0;
  for (std::size_t j = 0; j < rd.gammas.size(); ++j) {
    const double rate = detail::shifted_rate(rd.alphas[j], beta);
    double inner = 0.0;
    for (int i = 2; i <= n; ++i) {
      const double ai = i == n ? 1.0 : std::abs(spec.a[i]);
      double ri_bound = 0.0;
      if (i < n) {
        const double dec = spec.r[i].nu ? spec.r[i].nu->sup_norm() : 0.0;
        ri_bound = detail::mixed_ibound(rate, spec.r[i].mu, dec, mode, opt);
      }
      for (int k = 0; k <= i - 2; ++k)
        inner += binomial(i, k) * rpow0(al, k) * (ai / std::abs(rate) + ri_bound);
    }
    total += rd.alpha_tildes[j] / std::abs(rd.Gammas[j]) * inner;
  }
  return total;
}

/// H = || sum_{i=0}^{n-2} |G[P(r;lambda)]^(i)| ||_inf, upper-bounded by the
/// sum of per-derivative certified sup bounds (exact spectral images for the
/// almost-periodic part).
inline double compute_H(const RootData& rd, const ProblemSpec& spec,
                        BoundMode mode = BoundMode::Certified, const SharpOptions& opt = {}) {
  const CompositeGreen G(rd.gammas);
  auto [pap, pdec] = p_r_lambda(spec, rd.lambda);
  const int n = spec.n;

  if (mode == BoundMode::Certified) {
    double h = 0.0;
    for (int i = 0; i <= n - 2; ++i) {
      if (!pap.empty()) h += sup_norm_upper(G.apply(pap, i));
      if (pdec) h += G.apply(*pdec, i).sup_norm();
    }
    return h;
  }

  // sharp: pointwise sum of magnitudes on a scan grid, capped by certified
  const double lo = -opt.window, hi = opt.window;
  const std::size_t count = static_cast<std::size_t>(std::ceil((hi - lo) / opt.h)) + 1;
  std::vector<TrigPoly> gi;
  std::vector<GridFunction> gd;
  for (int i = 0; i <= n - 2; ++i) {
    gi.push_back(pap.empty() ? TrigPoly() : G.apply(pap, i));
    if (pdec) gd.push_back(G.apply(*pdec, i));
  }
  double best = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = lo + opt.h * static_cast<double>(k);
    double s = 0.0;
    for (int i = 0; i <= n - 2; ++i) {
      s += std::abs(gi[i].eval(t));
      if (pdec) s += std::abs(gd[static_cast<std::size_t>(i)].eval(t));
    }
    best = std::max(best, s);
  }
  double cert = 0.0;
  for (int i = 0; i <= n - 2; ++i) {
    if (!pap.empty()) cert += sup_norm_upper(gi[i]);
    if (pdec) cert += gd[static_cast<std::size_t>(i)].sup_norm();
  }
  return std::min(best * 1.02, cert);
}

struct MChoice {
  double delta_lambda = 0;
  double M = 0;
  double gM = 0;
};

/// delta_lambda solves m(delta) = (1-L0)/Q0; M maximizes
/// g(delta) = [1 - L0 - m(delta) Q0] delta on (0, delta_lambda).
inline MChoice find_M(double L0, double Q0, int n) {
  if (L0 >= 1.0) throw L0GreaterThanOne("L0 >= 1: no contraction radius exists");
  if (!(Q0 > 0)) throw Error("Q0 must be positive");
  const double target = (1.0 - L0) / Q0;

  auto m = [&](double d) { return lipschitz_modulus(n, d); };
  double hi = 1.0;
  while (m(hi) < target) {
    hi *= 2.0;
    if (hi > 1e8) throw Error("Lipschitz modulus bracket failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m(mid) < target ? lo : hi) = mid;
  }
  MChoice out;
  out.delta_lambda = 0.5 * (lo + hi);

  auto g = [&](double d) { return (1.0 - L0 - m(d) * Q0) * d; };
  if (n == 3) {
    out.M = (std::sqrt(1.0 + (1.0 - L0) / Q0) - 1.0) / 3.0;
  } else {
    // g is concave: d/dd [d m(d)] = m + d m' is increasing, so bisect on the
    // sign of g'(d) = 1 - L0 - Q0 (m(d) + d m'(d))
    auto slope = [&](double d) {
      return 1.0 - L0 - Q0 * (m(d) + d * lipschitz_modulus_slope(n, d));
    };
    double a = 0.0, b = out.delta_lambda;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      (slope(mid) > 0.0 ? a : b) = mid;
    }
    out.M = 0.5 * (a + b);
  }
  out.gM = g(out.M);
  return out;
}

namespace detail {

// Note emitted when the inputs coincide with the classical cubic reference
// example at the root lambda = 1, whose published companion value for M
// disagrees with the value implied by its own Q0.
inline void reference_example_notes(const RootData& rd, const ProblemSpec& spec, double L0,
                                    double Q0, double M, std::vector<std::string>& notes) {
  if (spec.n != 3) return;
  if (std::abs(std::abs(rd.lambda) - 1.0) > 1e-9 || rd.others.size() != 2) return;
  std::vector<Complex> all{rd.lambda, rd.others[0], rd.others[1]};
  std::sort(all.begin(), all.end(),
            [](Complex a, Complex b) { return a.real() < b.real(); });
  if (std::abs(all[0] + 1.0) > 1e-9 || std::abs(all[1]) > 1e-9 || std::abs(all[2] - 1.0) > 1e-9)
    return;
  if (std::abs(L0) > 1e-12 || std::abs(Q0 - 14.0) > 1e-9) return;
  std::ostringstream os;
  os << "reference-value discrepancy: a published companion computation of this example prints "
        "M = (sqrt(105)-10)/30 ~= 0.0082327 (consistent with Q0 = 20); this implementation "
        "computes M = "
     << M << " ~= 0.0117 from its Q0 = 14; the published decimal is not used as an oracle";
  notes.push_back(os.str());
}

}  // namespace detail

/// Full per-root sufficient-condition evaluation. Never throws on a failed
/// condition: failures are reported through the pass flags.
inline ConditionReport check_existence(const ProblemSpec& spec, const RootData& rd, double beta,
                                       bool sharp = false, const SharpOptions& opt = {}) {
  ConditionReport rep;
  rep.lambda = rd.lambda;
  rep.beta = beta;
  rep.L0 = compute_L(rd, spec, 0.0);
  rep.Lbeta = beta > 0 ? compute_L(rd, spec, beta) : rep.L0;
  rep.Q0 = compute_Q(rd, spec, 0.0);
  rep.Qbeta = beta > 0 ? compute_Q(rd, spec, beta) : rep.Q0;
  rep.H = compute_H(rd, spec);

  if (rep.L0 < 1.0) {
    const MChoice mc = find_M(rep.L0, rep.Q0, spec.n);
    rep.delta_lambda = mc.delta_lambda;
    rep.M = mc.M;
    rep.gM = mc.gM;
    rep.eps0 = lipschitz_modulus(spec.n, mc.M) * rep.Q0 + rep.L0;
    rep.existence_pass = rep.H <= rep.gM;
  } else {
    rep.notes.push_back("L0 >= 1: contraction radius undefined");
    rep.eps0 = rep.L0;
    rep.existence_pass = false;
  }
  rep.order_pass = rep.Lbeta < 0.5;

  if (sharp) {
    rep.sharp = true;
    rep.L0_sharp = compute_L(rd, spec, 0.0, BoundMode::Sharp, opt);
    rep.Q0_sharp = compute_Q(rd, spec, 0.0, BoundMode::Sharp, opt);
    rep.H_sharp = compute_H(rd, spec, BoundMode::Sharp, opt);
  }
  detail::reference_example_notes(rd, spec, rep.L0, rep.Q0, rep.M, rep.notes);
  return rep;
}

struct FundamentalReport {
  std::vector<Complex> roots;
  std::vector<ConditionReport> per_root;
  std::vector<double> factors;      // M_k (m(M_k)+1)
  std::vector<double> sum_factors;  // sum_{i=2}^n [(|l_k|+1)^{i-1} - |l_k|^{i-1}]
  double vinv_exact = 0;            // ||V^{-1}||_1 by elimination (n <= 12)
  double vinv_gautschi = 0;         // n * Gautschi infinity bound
  double vinv_used = 0;
  double criterion_value = 0;
  bool independent = false;
};

/// Vandermonde independence criterion:
/// max_k ( M_k (m(M_k)+1) sum_{i=2}^n [(|l_k|+1)^{i-1} - |l_k|^{i-1}] )
///   * ||V^{-1}||_1 < 1.
inline FundamentalReport check_fundamental_system(const ProblemSpec& spec, double beta = 0.0,
                                                  bool sharp = false,
                                                  const SharpOptions& opt = {}) {
  FundamentalReport rep;
  rep.roots = char_roots(spec.a);
  const int n = spec.n;

  std::vector<int> failing;
  for (int k = 0; k < n; ++k) {
    const RootData rd = build_root_data(rep.roots, static_cast<std::size_t>(k));
    rep.per_root.push_back(check_existence(spec, rd, beta, sharp, opt));
    const ConditionReport& cr = rep.per_root.back();
    if (!cr.existence_pass || !(cr.M > 0 && cr.M < cr.delta_lambda)) failing.push_back(k);
  }
  if (!failing.empty())
    throw PerRootFailure("per-root existence conditions failed", failing);

  for (int k = 0; k < n; ++k) {
    const double M = rep.per_root[static_cast<std::size_t>(k)].M;
    rep.factors.push_back(M * (lipschitz_modulus(n, M) + 1.0));
    const double al = std::abs(rep.roots[static_cast<std::size_t>(k)]);
    double s = 0.0;
    for (int i = 2; i <= n; ++i) s += rpow0(al + 1.0, i - 1) - rpow0(al, i - 1);
    rep.sum_factors.push_back(s);
  }

  // ||V^{-1}||_1 for V[i][k] = lambda_k^i: exact inverse for moderate n,
  // and the Gautschi row-sum bound scaled by n; the smaller is used.
  rep.vinv_gautschi = 0.0;
  for (int k = 0; k < n; ++k) {
    double prod = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != k)
        prod *= (1.0 + std::abs(rep.roots[static_cast<std::size_t>(j)])) /
                std::abs(rep.roots[static_cast<std::size_t>(k)] - rep.roots[static_cast<std::size_t>(j)]);
    rep.vinv_gautschi = std::max(rep.vinv_gautschi, prod);
  }
  rep.vinv_gautschi *= n;
  if (n <= 12) {
    SquareMatrix V(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) V.at(i, k) = cpow0(rep.roots[static_cast<std::size_t>(k)], i);
    rep.vinv_exact = V.inverse().norm1();
    rep.vinv_used = std::min(rep.vinv_exact, rep.vinv_gautschi);
  } else {
    rep.vinv_used = rep.vinv_gautschi;
  }

  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    worst = std::max(worst, rep.factors[static_cast<std::size_t>(k)] *
                                rep.sum_factors[static_cast<std::size_t>(k)]);
  rep.criterion_value = worst * rep.vinv_used;
  rep.independent = rep.criterion_value < 1.0;
  return rep;
}

/// Coefficients of the decaying-stage fixed-point map, obtained by freezing
/// the almost-periodic solution theta inside the full equation:
/// linear part lin_k = lc_k + sum_{i>k} C(i,k) B_{i-k}(Theta) w_i,
/// nonlinear weights nl_k = w_k + sum_{i>k} C(i,k) B_{i-k}(Theta) w_i.
struct PsiCoefficients {
  std::vector<TrigPoly> lin_ap;       // k = 1..n-1
  std::vector<double> lin_decay_sup;  // decaying contributions, sup bounds
  std::vector<Complex> nl_scalar;     // k = 2..n (constant part of w_k)
  std::vector<TrigPoly> nl_ap;
  std::vector<double> nl_decay_sup;
  std::vector<double> S;  // triangle-split scalar magnitudes for Q, k = 2..n
  std::vector<TrigPoly> theta_derivs;  // theta, theta', ..., theta^{(n-2)}
};

inline PsiCoefficients build_psi_coefficients(const ProblemSpec& spec, const RootData& rd,
                                              const TrigPoly& theta, TruncationContext& ctx) {
  const int n = spec.n;
  const Complex lambda = rd.lambda;
  PsiCoefficients pc;
  pc.theta_derivs.push_back(theta);
  for (int i = 1; i <= n - 2; ++i) pc.theta_derivs.push_back(derivative(pc.theta_derivs.back()));

  TrigOps ops{ctx};
  const BellTable& bt = bell_table(n);
  const FWeights w = f_weights(spec, lambda);
  const std::vector<TrigPoly> lc = l_coefficients_ap(spec, lambda);
  const std::vector<double> lc_dec = l_coefficient_decay_sups(spec, lambda);

  // bell_theta[m] = B_m(Theta) for m = 0..n-1
  std::vector<TrigPoly> bell_theta;
  bell_theta.push_back(TrigPoly::constant(Complex{1, 0}));
  for (int m = 1; m <= n - 1; ++m) bell_theta.push_back(eval_sym(bt.bell(m), pc.theta_derivs, ops));

  auto coupling = [&](int k) {
    // sum_{i=k+1}^{n} C(i,k) B_{i-k}(Theta) w_i, split ap / decay-sup
    TrigPoly ap;
    double dec = 0.0;
    for (int i = k + 1; i <= n; ++i) {
      const TrigPoly& bm = bell_theta[static_cast<std::size_t>(i - k)];
      TrigPoly wi_ap = w.ap[static_cast<std::size_t>(i - 2)] +
                       TrigPoly::constant(w.scalar[static_cast<std::size_t>(i - 2)]);
      ap = ap + binomial(i, k) * mul(bm, wi_ap, ctx);
      dec += binomial(i, k) * sup_norm_upper(bm) * w.decay_sup[static_cast<std::size_t>(i - 2)];
    }
    return std::pair<TrigPoly, double>{ap, dec};
  };

  for (int k = 1; k <= n - 1; ++k) {
    auto [cap, cdec] = coupling(k);
    pc.lin_ap.push_back(lc[static_cast<std::size_t>(k - 1)] + cap);
    pc.lin_decay_sup.push_back(lc_dec[static_cast<std::size_t>(k - 1)] + cdec);
  }
  for (int k = 2; k <= n; ++k) {
    auto [cap, cdec] = coupling(k);
    pc.nl_scalar.push_back(w.scalar[static_cast<std::size_t>(k - 2)]);
    pc.nl_ap.push_back(w.ap[static_cast<std::size_t>(k - 2)] + cap);
    pc.nl_decay_sup.push_back(w.decay_sup[static_cast<std::size_t>(k - 2)] + cdec);
    double s = 0.0;
    for (int j = 0; j <= n - k; ++j) {
      const double akj = (k + j == n) ? 1.0 : std::abs(spec.a[static_cast<std::size_t>(k + j)]);
      s += binomial(k + j, j) * rpow0(std::abs(lambda), j) * akj;
    }
    pc.S.push_back(s);
  }
  return pc;
}

struct ThetaConditionReport {
  double beta = 0;
  double L0 = 0, Lbeta = 0, Q0 = 0, Qbeta = 0;
  double delta_lambda = 0, M = 0, gM = 0, eps0 = 0;
  double forcing_norm = 0;  // sum_i ||G[P_nu(theta;lambda)]^(i)||, i <= n-2
  bool pass = false;
  std::vector<std::string> notes;
};

namespace detail {

inline double psi_L(const RootData& rd, const PsiCoefficients& pc, double beta, BoundMode mode,
                    const SharpOptions& opt) {
  double total = 0.0;
  for (std::size_t j = 0; j < rd.gammas.size(); ++j) {
    const double rate = shifted_rate(rd.alphas[j], beta);
    double inner = 0.0;
    for (std::size_t k = 0; k < pc.lin_ap.size(); ++k)
      inner += mixed_ibound(rate, pc.lin_ap[k], pc.lin_decay_sup[k], mode, opt);
    total += rd.alpha_tildes[j] / std::abs(rd.Gammas[j]) * inner;
  }
  return total;
}

inline double psi_Q(const RootData& rd, const PsiCoefficients& pc, double beta, BoundMode mode,
                    const SharpOptions& opt) {
  double total = 0.0;
  for (std::size_t j = 0; j < rd.gammas.size(); ++j) {
    const double rate = shifted_rate(rd.alphas[j], beta);
    double inner = 0.0;
    for (std::size_t k = 0; k < pc.nl_ap.size(); ++k)
      inner += pc.S[k] / std::abs(rate) +
               mixed_ibound(rate, pc.nl_ap[k], pc.nl_decay_sup[k], mode, opt);
    total += rd.alpha_tildes[j] / std::abs(rd.Gammas[j]) * inner;
  }
  return total;
}

}  // namespace detail

/// Decaying forcing of the psi stage:
/// P_nu(theta;lambda) = P(nu;lambda) + L_nu(., theta) + F~_nu(., Theta),
/// materialized on the common grid of the decaying inputs. Empty when the
/// perturbation has no decaying part.
inline std::optional<GridFunction> psi_forcing(const ProblemSpec& spec, const RootData& rd,
                                               const PsiCoefficients& pc,
                                               TruncationContext& ctx) {
  auto [pap, pdec] = p_r_lambda(spec, rd.lambda);
  (void)pap;
  if (!pdec) return std::nullopt;
  const Complex lambda = rd.lambda;
  const int n = spec.n;
  const double t0 = pdec->t0(), h = pdec->h();
  const std::size_t count = pdec->size();

  auto resampled = [&](const GridFunction& g) { return resample(g, t0, h, count); };

  GridFunction acc = *pdec;
  // L_nu(., theta): sum_k lc_nu_k theta^{(k-1)}
  for (int k = 1; k <= n - 1; ++k) {
    GridFunction lcnu(t0, h, std::vector<Complex>(count, Complex{0, 0}), TailModel::zero(), false);
    bool any = false;
    for (int m = k; m <= n - 1; ++m)
      if (spec.r[static_cast<std::size_t>(m)].nu) {
        lcnu = lcnu + (binomial(m, k) * cpow0(lambda, m - k)) *
                          resampled(*spec.r[static_cast<std::size_t>(m)].nu);
        any = true;
      }
    if (!any) continue;
    const TrigPoly& th = pc.theta_derivs[static_cast<std::size_t>(k - 1)];
    std::vector<Complex> fac(count);
    for (std::size_t q = 0; q < count; ++q) fac[q] = th.eval(t0 + h * static_cast<double>(q));
    acc = acc + scale_by_bounded(lcnu, fac, sup_norm_upper(th));
  }
  // F~_nu(., Theta): sum_i vw_nu_i f_{i-1}(Theta)
  TrigOps ops{ctx};
  const BellTable& bt = bell_table(n);
  for (int i = 2; i <= n; ++i) {
    GridFunction vwnu(t0, h, std::vector<Complex>(count, Complex{0, 0}), TailModel::zero(), false);
    bool any = false;
    for (int j = 0; j <= n - i; ++j)
      if (i + j < n && spec.r[static_cast<std::size_t>(i + j)].nu) {
        vwnu = vwnu + (binomial(i + j, j) * cpow0(lambda, j)) *
                          resampled(*spec.r[static_cast<std::size_t>(i + j)].nu);
        any = true;
      }
    if (!any) continue;
    TrigPoly fv = eval_sym(bt.f_poly(i - 1), pc.theta_derivs, ops);
    std::vector<Complex> fac(count);
    for (std::size_t q = 0; q < count; ++q) fac[q] = fv.eval(t0 + h * static_cast<double>(q));
    acc = acc + scale_by_bounded(vwnu, fac, sup_norm_upper(fv));
  }
  return acc;
}

/// Sufficient conditions for the decaying stage with the almost-periodic
/// part theta frozen. Collapses to compute_L/compute_Q at theta = 0.
inline ThetaConditionReport compute_theta_conditions(const RootData& rd, const ProblemSpec& spec,
                                                     const TrigPoly& theta, double beta,
                                                     BoundMode mode = BoundMode::Certified,
                                                     const SharpOptions& opt = {}) {
  detail::require_beta(rd, beta);
  TruncationContext ctx;
  const PsiCoefficients pc = build_psi_coefficients(spec, rd, theta, ctx);

  ThetaConditionReport rep;
  rep.beta = beta;
  rep.L0 = detail::psi_L(rd, pc, 0.0, mode, opt);
  rep.Lbeta = beta > 0 ? detail::psi_L(rd, pc, beta, mode, opt) : rep.L0;
  rep.Q0 = detail::psi_Q(rd, pc, 0.0, mode, opt);
  rep.Qbeta = beta > 0 ? detail::psi_Q(rd, pc, beta, mode, opt) : rep.Q0;
  if (rep.L0 >= 1.0)
    throw L0ThetaGreaterThanOne("theta-stage L0 >= 1: no contraction radius");

  const MChoice mc = find_M(rep.L0, rep.Q0, spec.n);
  rep.delta_lambda = mc.delta_lambda;
  rep.M = mc.M;
  rep.gM = mc.gM;
  rep.eps0 = lipschitz_modulus(spec.n, mc.M) * rep.Q0 + rep.L0;

  const std::optional<GridFunction> forcing = psi_forcing(spec, rd, pc, ctx);
  rep.forcing_norm = 0.0;
  if (forcing) {
    const CompositeGreen G(rd.gammas);
    for (int i = 0; i <= spec.n - 2; ++i) rep.forcing_norm += G.apply(*forcing, i).sup_norm();
  }
  rep.pass = rep.forcing_norm <= rep.gM;
  return rep;
}

}  // namespace perron_ap
