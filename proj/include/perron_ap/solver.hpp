#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "perron_ap/bell.hpp"
#include "perron_ap/conditions.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/green.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/riccati.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

struct PicardOptions {
  double tol = 1e-12;
  int max_iter = 200;
  TruncationPolicy policy{};
  bool force = false;      // iterate despite a failed certificate
  double psi_window = 0;   // 0: max(50, 10 / min |Re gamma_j|)
  double psi_h = 0;        // 0: min(0.01, input grid step)
};

struct SolutionBundle {
  ProblemSpec spec;
  RootData root;
  ConditionReport report;
  TrigPoly z;                               // almost-periodic part
  TrigPoly forcing_ap;                      // final w with z = -G[w] up to defect
  std::optional<GridFunction> psi;          // decaying part
  std::optional<GridFunction> forcing_dec;  // final decaying-stage forcing
  std::optional<ThetaConditionReport> theta_report;
  int iterations = 0;
  int psi_iterations = 0;
  double last_step_norm = 0;
  double ball_bound = 0;  // certified tuple-norm bound of the converged iterate
  double truncation_budget = 0;
  double eps0 = 0;
  bool forced = false;

  Complex lambda() const { return root.lambda; }
};

namespace detail {

inline double banach_threshold(double tol, double eps0) {
  if (eps0 > 0.0 && eps0 < 1.0) return tol * (1.0 - eps0) / eps0;
  return tol;
}

inline std::vector<TrigPoly> tuple_of(const TrigPoly& z, int n) {
  std::vector<TrigPoly> Z{z};
  for (int i = 1; i <= n - 2; ++i) Z.push_back(derivative(Z.back()));
  return Z;
}

}  // namespace detail

/// Fixed-point iteration z <- -G[P + L(z) + F(Z)] in the trig-polynomial
/// class. Stops when the certified step norm guarantees the remaining error
/// is below tol (a-posteriori contraction estimate with rate eps0).
inline SolutionBundle picard_solve(const ProblemSpec& spec, const RootData& rd,
                                   const ConditionReport& report, const PicardOptions& opts = {}) {
  for (const MixedFunction& ri : spec.r)
    if (ri.nu)
      throw Error("picard_solve handles almost-periodic input; decaying parts go through "
                  "solve_decomposed");
  if (!report.existence_pass && !opts.force)
    throw CertificateFailed("existence certificate failed; re-run with force to iterate anyway");

  const int n = spec.n;
  const CompositeGreen G(rd.gammas);
  const TrigPoly pap = p_r_lambda(spec, rd.lambda).first;
  TruncationContext ctx{opts.policy};

  SolutionBundle b;
  b.spec = spec;
  b.root = rd;
  b.report = report;
  b.eps0 = report.eps0;
  b.forced = !report.existence_pass;

  const double thr = detail::banach_threshold(opts.tol, report.eps0);
  TrigPoly z;
  bool converged = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const std::vector<TrigPoly> Z = detail::tuple_of(z, n);
    TrigPoly w = pap + l_apply(spec, rd.lambda, Z, ctx) + f_apply(spec, rd.lambda, Z, ctx);
    TruncationResult tr = truncate(Complex{-1, 0} * G.apply(w, 0), opts.policy);
    ctx.discarded_mass += tr.discarded_mass;

    const double step = tuple_norm_upper(tr.poly - z, n);
    z = std::move(tr.poly);
    b.iterations = it;
    b.last_step_norm = step;
    b.ball_bound = tuple_norm_upper(z, n);
    if (report.M > 0 && b.ball_bound > report.M && !opts.force)
      throw BallEscape("iterate left the certified ball of radius " + std::to_string(report.M));
    if (step <= thr) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence("fixed-point iteration did not reach tolerance");

  b.z = z;
  const std::vector<TrigPoly> Z = detail::tuple_of(z, n);
  b.forcing_ap = pap + l_apply(spec, rd.lambda, Z, ctx) + f_apply(spec, rd.lambda, Z, ctx);

  double amp = 0.0;
  for (int i = 0; i <= n - 2; ++i) amp += G.gain(i);
  b.truncation_budget = ctx.discarded_mass * std::max(1.0, amp);
  if (report.eps0 > 0.0 && report.eps0 < 1.0) b.truncation_budget /= 1.0 - report.eps0;
  return b;
}

namespace detail {

struct PsiStage {
  double t0 = 0, h = 1;
  std::size_t count = 2;
  GridFunction forcing;
  std::vector<std::vector<Complex>> lin_fac;  // psi^{(k-1)} coefficient samples
  std::vector<double> lin_sup;
  std::vector<std::vector<Complex>> nl_fac;  // nonlinear weight samples
  std::vector<double> nl_sup;
};

/// Materializes the decaying-stage coefficients on the iteration grid:
/// the almost-periodic parts from PsiCoefficients plus the decaying
/// contributions (both direct and theta-coupled).
inline PsiStage build_psi_stage(const ProblemSpec& spec, const RootData& rd,
                                const PsiCoefficients& pc, const GridFunction& forcing_src,
                                double T, double h) {
  const int n = spec.n;
  const Complex lambda = rd.lambda;
  const auto half = static_cast<std::size_t>(std::llround(T / h));
  PsiStage st;
  st.h = h;
  st.t0 = -h * static_cast<double>(half);
  st.count = 2 * half + 1;
  st.forcing = resample(forcing_src, st.t0, h, st.count);

  std::vector<std::vector<Complex>> nu(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (spec.r[static_cast<std::size_t>(i)].nu) {
      nu[static_cast<std::size_t>(i)].resize(st.count);
      for (std::size_t q = 0; q < st.count; ++q)
        nu[static_cast<std::size_t>(i)][q] =
            spec.r[static_cast<std::size_t>(i)].nu->eval(st.t0 + h * static_cast<double>(q));
    }
  auto vw_nu = [&](int i, std::size_t q) {
    Complex s{0, 0};
    for (int j = 0; j <= n - i; ++j)
      if (i + j < n && !nu[static_cast<std::size_t>(i + j)].empty())
        s += binomial(i + j, j) * cpow0(lambda, j) * nu[static_cast<std::size_t>(i + j)][q];
    return s;
  };
  auto lc_nu = [&](int k, std::size_t q) {
    Complex s{0, 0};
    for (int m = k; m <= n - 1; ++m)
      if (!nu[static_cast<std::size_t>(m)].empty())
        s += binomial(m, k) * cpow0(lambda, m - k) * nu[static_cast<std::size_t>(m)][q];
    return s;
  };

  // B_m(Theta) samples for the theta-coupled decaying contributions
  std::vector<std::vector<Complex>> bth(static_cast<std::size_t>(n - 1));
  {
    TruncationContext ctx;
    TrigOps ops{ctx};
    const BellTable& bt = bell_table(n);
    for (int m = 1; m <= n - 2; ++m) {
      const TrigPoly bm = eval_sym(bt.bell(m), pc.theta_derivs, ops);
      bth[static_cast<std::size_t>(m)].resize(st.count);
      for (std::size_t q = 0; q < st.count; ++q)
        bth[static_cast<std::size_t>(m)][q] = bm.eval(st.t0 + h * static_cast<double>(q));
    }
  }
  auto coupled_nu = [&](int k, std::size_t q) {
    Complex s{0, 0};
    for (int i = k + 1; i <= n; ++i)
      if (i - k <= n - 2 && !bth[static_cast<std::size_t>(i - k)].empty())
        s += binomial(i, k) * bth[static_cast<std::size_t>(i - k)][q] * vw_nu(i, q);
    return s;
  };

  for (int k = 1; k <= n - 1; ++k) {
    std::vector<Complex> fac(st.count);
    const TrigPoly& ap = pc.lin_ap[static_cast<std::size_t>(k - 1)];
    for (std::size_t q = 0; q < st.count; ++q)
      fac[q] = ap.eval(st.t0 + h * static_cast<double>(q)) + lc_nu(k, q) + coupled_nu(k, q);
    st.lin_fac.push_back(std::move(fac));
    st.lin_sup.push_back(sup_norm_upper(ap) + pc.lin_decay_sup[static_cast<std::size_t>(k - 1)]);
  }
  for (int k = 2; k <= n; ++k) {
    std::vector<Complex> fac(st.count);
    const Complex sc = pc.nl_scalar[static_cast<std::size_t>(k - 2)];
    const TrigPoly& ap = pc.nl_ap[static_cast<std::size_t>(k - 2)];
    for (std::size_t q = 0; q < st.count; ++q)
      fac[q] = sc + ap.eval(st.t0 + h * static_cast<double>(q)) + vw_nu(k, q) + coupled_nu(k, q);
    st.nl_fac.push_back(std::move(fac));
    st.nl_sup.push_back(std::abs(sc) + sup_norm_upper(ap) +
                        pc.nl_decay_sup[static_cast<std::size_t>(k - 2)]);
  }
  return st;
}

inline GridFunction zero_grid(double t0, double h, std::size_t count) {
  return GridFunction(t0, h, std::vector<Complex>(count, Complex{0, 0}), TailModel::zero(), false);
}

}  // namespace detail

/// Two-stage solve: the almost-periodic part theta by the spectral fixed
/// point on the decay-free input, then the decaying correction psi by a grid
/// fixed point with theta frozen. The bundle's z/psi pair is the full
/// solution component z = theta + psi.
inline SolutionBundle solve_decomposed(const ProblemSpec& spec, const RootData& rd, double beta,
                                       const PicardOptions& opts = {}) {
  ProblemSpec spec_mu = spec;
  for (MixedFunction& ri : spec_mu.r) ri.nu.reset();
  spec_mu.cls = FunctionClass::AP;
  spec_mu.p = 0.0;

  const ConditionReport rep_mu = check_existence(spec_mu, rd, beta);
  SolutionBundle b = picard_solve(spec_mu, rd, rep_mu, opts);
  b.spec = spec;

  const ThetaConditionReport tcr = compute_theta_conditions(rd, spec, b.z, beta);
  b.theta_report = tcr;
  if (!tcr.pass && !opts.force)
    throw CertificateFailed("decaying-stage certificate failed; re-run with force to iterate anyway");

  bool any_decay = false;
  for (const MixedFunction& ri : spec.r) any_decay = any_decay || ri.nu.has_value();
  if (!any_decay) return b;

  const int n = spec.n;
  TruncationContext ctx{opts.policy};
  const PsiCoefficients pc = build_psi_coefficients(spec, rd, b.z, ctx);
  const std::optional<GridFunction> forcing = psi_forcing(spec, rd, pc, ctx);
  if (!forcing) return b;

  double amin = 1e300;
  for (double a : rd.alphas) amin = std::min(amin, std::abs(a));
  const double T = opts.psi_window > 0 ? opts.psi_window : std::max(50.0, 10.0 / amin);
  const double h = opts.psi_h > 0 ? opts.psi_h : std::min(0.01, forcing->h());
  const detail::PsiStage st = detail::build_psi_stage(spec, rd, pc, *forcing, T, h);

  const CompositeGreen G(rd.gammas);
  GridOps gops{st.t0, st.h, st.count};
  const BellTable& bt = bell_table(n);
  const double thr = detail::banach_threshold(opts.tol, tcr.eps0);

  std::vector<GridFunction> Psi(static_cast<std::size_t>(n - 1),
                                detail::zero_grid(st.t0, st.h, st.count));
  bool converged = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    GridFunction w = st.forcing;
    for (int k = 1; k <= n - 1; ++k)
      w = w + scale_by_bounded(Psi[static_cast<std::size_t>(k - 1)],
                               st.lin_fac[static_cast<std::size_t>(k - 1)],
                               st.lin_sup[static_cast<std::size_t>(k - 1)]);
    for (int k = 2; k <= n; ++k) {
      GridFunction fv = eval_sym(bt.f_poly(k - 1), Psi, gops);
      w = w + scale_by_bounded(fv, st.nl_fac[static_cast<std::size_t>(k - 2)],
                               st.nl_sup[static_cast<std::size_t>(k - 2)]);
    }
    std::vector<GridFunction> next;
    for (int i = 0; i <= n - 2; ++i) next.push_back(Complex{-1, 0} * G.apply(w, i));

    double step = 0.0, ball = 0.0;
    for (int i = 0; i <= n - 2; ++i) {
      step += sample_sup(next[static_cast<std::size_t>(i)] - Psi[static_cast<std::size_t>(i)]);
      ball += sample_sup(next[static_cast<std::size_t>(i)]);
    }
    Psi = std::move(next);
    b.psi_iterations = it;
    b.last_step_norm = step;
    if (ball > tcr.M && !opts.force)
      throw BallEscape("decaying iterate left the certified ball of radius " +
                       std::to_string(tcr.M));
    if (step <= thr) {
      b.forcing_dec = w;
      b.ball_bound += ball;
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence("decaying-stage iteration did not reach tolerance");
  b.psi = Psi[0];
  return b;
}

/// Structured closed form of y(t) = exp(lambda_eff t + A(t) - A(0)
///   + sum_j c_j (G_j(t) - G_j(0)) + int_0^t psi), normalized to y(0) = 1.
struct SolutionRepresentation {
  Complex lambda;
  Complex lambda_eff;
  Complex kappa;         // (-1)^n / prod gamma_j
  TrigPoly oscillatory;  // A = kappa * (zero-mean antiderivative of w)
  Complex osc_at0;
  std::vector<Complex> green_coeff;  // c_j = -1 / (Gamma_j gamma_j)
  std::vector<TrigPoly> green_ap;    // G_j = G_{gamma_j}[w]
  std::vector<Complex> green_at0;
  std::optional<GridFunction> decay_integral;  // int_0^t psi, clamped outside
};

inline SolutionRepresentation reconstruct(const SolutionBundle& b) {
  const int n = b.spec.n;
  SolutionRepresentation rep;
  rep.lambda = b.root.lambda;

  Complex prod{1, 0};
  for (Complex g : b.root.gammas) prod *= g;
  rep.kappa = (n % 2 == 0 ? Complex{1, 0} : Complex{-1, 0}) / prod;

  const Antiderivative anti = antiderivative(b.forcing_ap);
  rep.lambda_eff = b.root.lambda + rep.kappa * anti.linear_coeff;
  rep.oscillatory = rep.kappa * anti.oscillatory;
  rep.osc_at0 = rep.oscillatory.eval(0.0);

  for (std::size_t j = 0; j < b.root.gammas.size(); ++j) {
    rep.green_coeff.push_back(Complex{-1, 0} / (b.root.Gammas[j] * b.root.gammas[j]));
    rep.green_ap.push_back(green_apply(GreenKernel{b.root.gammas[j]}, b.forcing_ap));
    rep.green_at0.push_back(rep.green_ap.back().eval(0.0));
  }

  if (b.psi) {
    const GridFunction& p = *b.psi;
    std::vector<Complex> pre(p.size());
    pre[0] = Complex{0, 0};
    for (std::size_t k = 0; k + 1 < p.size(); ++k)
      pre[k + 1] = pre[k] + 0.5 * p.h() * (p.samples()[k] + p.samples()[k + 1]);
    // shift so the integral vanishes at t = 0
    const double pos = -p.t0() / p.h();
    const auto i0 = static_cast<std::size_t>(
        std::clamp(std::llround(std::floor(pos)), 0ll, static_cast<long long>(p.size() - 2)));
    const double frac = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
    const Complex at0 = pre[i0] * (1.0 - frac) + pre[i0 + 1] * frac;
    for (Complex& v : pre) v -= at0;
    rep.decay_integral =
        GridFunction(p.t0(), p.h(), std::move(pre), TailModel::zero(), false);
  }
  return rep;
}

inline Complex representation_eval(const SolutionRepresentation& rep, double t) {
  Complex expo = rep.lambda_eff * t + rep.oscillatory.eval(t) - rep.osc_at0;
  for (std::size_t j = 0; j < rep.green_ap.size(); ++j)
    expo += rep.green_coeff[j] * (rep.green_ap[j].eval(t) - rep.green_at0[j]);
  if (rep.decay_integral) {
    const GridFunction& di = *rep.decay_integral;
    const double tc = std::clamp(t, di.t0(), di.t_end());
    // clamped: beyond the window the integrand has decayed
    std::size_t k = static_cast<std::size_t>(
        std::clamp(std::llround(std::floor((tc - di.t0()) / di.h())), 0ll,
                   static_cast<long long>(di.size() - 2)));
    const double fr = std::clamp((tc - di.t0()) / di.h() - static_cast<double>(k), 0.0, 1.0);
    expo += di.samples()[k] * (1.0 - fr) + di.samples()[k + 1] * fr;
  }
  return std::exp(expo);
}

/// Pointwise derivatives of the solution component z = z_ap + psi. The
/// almost-periodic part differentiates spectrally; the decaying part reuses
/// the Green-image derivative identities when the final forcing is stored.
class DerivativeStack {
 public:
  DerivativeStack(const SolutionBundle& b, int max_order) {
    zd_.push_back(b.z);
    for (int j = 1; j <= max_order; ++j) zd_.push_back(derivative(zd_.back()));
    if (b.psi) {
      if (b.forcing_dec) {
        const CompositeGreen G(b.root.gammas);
        for (int j = 0; j <= std::min(max_order, G.order() - 1); ++j)
          psid_.push_back(Complex{-1, 0} * G.apply(*b.forcing_dec, j));
      } else {
        psid_.push_back(*b.psi);
      }
      while (static_cast<int>(psid_.size()) <= max_order)
        psid_.push_back(gf_derivative(psid_.back()));
    }
  }

  int max_order() const { return static_cast<int>(zd_.size()) - 1; }

  Complex eval(int j, double t) const {
    Complex v = zd_[static_cast<std::size_t>(j)].eval(t);
    if (!psid_.empty()) v += psid_[static_cast<std::size_t>(j)].eval(t);
    return v;
  }

 private:
  std::vector<TrigPoly> zd_;
  std::vector<GridFunction> psid_;
};

/// y^(i)(t) / y(t) for the bundle's solution.
inline Complex log_derivative(const SolutionBundle& b, int i, double t) {
  if (i < 0) throw Error("derivative order must be nonnegative");
  if (i == 0) return Complex{1, 0};
  const DerivativeStack st(b, i - 1);
  std::vector<Complex> Z;
  for (int j = 0; j < i; ++j) Z.push_back(st.eval(j, t));
  ScalarOps ops;
  return log_ratio(i, b.root.lambda, Z, ops);
}

struct FundamentalSet {
  FundamentalReport report;
  std::vector<SolutionBundle> bundles;
};

namespace detail {

inline int thread_cap(int n) {
  if (const char* env = std::getenv("PERRON_AP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return std::min(v, n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1, std::min(n, hw == 0 ? 1 : static_cast<int>(hw)));
}

}  // namespace detail

/// One certified solution per characteristic root, solved in parallel waves.
inline FundamentalSet fundamental_system(const ProblemSpec& spec, double beta = 0.0,
                                         const PicardOptions& opts = {}) {
  FundamentalSet out;
  out.report = check_fundamental_system(spec, beta);
  const int n = spec.n;
  out.bundles.resize(static_cast<std::size_t>(n));

  const int cap = detail::thread_cap(n);
  for (int base = 0; base < n; base += cap) {
    std::vector<std::future<SolutionBundle>> wave;
    const int hi = std::min(n, base + cap);
    for (int k = base; k < hi; ++k)
      wave.push_back(std::async(std::launch::async, [&, k] {
        const RootData rd = build_root_data(out.report.roots, static_cast<std::size_t>(k));
        return picard_solve(spec, rd, out.report.per_root[static_cast<std::size_t>(k)], opts);
      }));
    for (int k = base; k < hi; ++k)
      out.bundles[static_cast<std::size_t>(k)] = wave[static_cast<std::size_t>(k - base)].get();
  }
  return out;
}

struct OrderCheck {
  double cstar = 0;       // sup_t |Z(t)| / envelope(t) over the window
  double cstar_wide = 0;  // same over the doubled window
  bool stable = true;     // ratio within a factor of 2
};

/// Checks that the solution tuple is dominated by the two-sided exponential
/// smoothing of |P| at rate beta, uniformly in the window size: the constant
/// must not drift when the window doubles.
inline OrderCheck error_order_check(const SolutionBundle& b, double beta, double window = 50.0,
                                    double grid_h = 0.05) {
  if (beta <= 1e-12) throw Error("error_order_check needs a positive rate");
  const int n = b.spec.n;
  auto [pap, pdec] = p_r_lambda(b.spec, b.root.lambda);
  if (pap.empty() && !pdec) return OrderCheck{};

  const double pad = 10.0 / beta;
  const double span = 2.0 * window + pad;
  const auto half = static_cast<std::size_t>(std::ceil(span / grid_h));
  const double t0 = -grid_h * static_cast<double>(half);
  const std::size_t count = 2 * half + 1;
  std::vector<Complex> abs_p(count);
  double sup = 0.0;
  for (std::size_t q = 0; q < count; ++q) {
    const double t = t0 + grid_h * static_cast<double>(q);
    Complex v = pap.eval(t);
    if (pdec) v += pdec->eval(t);
    abs_p[q] = Complex{std::abs(v), 0};
    sup = std::max(sup, std::abs(v));
  }
  const GridFunction ap_grid(t0, grid_h, std::move(abs_p),
                             TailModel::power_bound(2.0 * sup + 1e-300, 1e-3), false);
  const GridFunction fwd =
      green_apply(GreenKernel{Complex{-beta, 0}}, ap_grid, ExtensionPolicy::Hold);
  const GridFunction bwd =
      green_apply(GreenKernel{Complex{beta, 0}}, ap_grid, ExtensionPolicy::Hold);

  const DerivativeStack st(b, n - 2);
  auto cstar_over = [&](double W) {
    double best = 0.0;
    for (double t = -W; t <= W + 1e-12; t += grid_h) {
      double num = 0.0;
      for (int i = 0; i <= n - 2; ++i) num += std::abs(st.eval(i, t));
      const double den = (fwd.eval(t) - bwd.eval(t)).real();
      if (den > 1e-300) best = std::max(best, num / den);
    }
    return best;
  };
  OrderCheck oc;
  oc.cstar = cstar_over(window);
  oc.cstar_wide = cstar_over(2.0 * window);
  const double lo = std::min(oc.cstar, oc.cstar_wide);
  const double hi = std::max(oc.cstar, oc.cstar_wide);
  oc.stable = lo <= 0 ? hi <= 0 : hi / lo <= 2.0;
  return oc;
}

}  // namespace perron_ap
