#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "perron_ap/perron_ap.hpp"

namespace pa = perron_ap;
using Complex = std::complex<double>;

namespace {

pa::ProblemSpec cubic_spec(double eta) {
  pa::ProblemSpec spec;
  spec.n = 3;
  spec.a = {Complex{0, 0}, Complex{-1, 0}, Complex{0, 0}};
  pa::TrigPoly r0 = pa::TrigPoly::constant(Complex{2 * eta, 0}) +
                    pa::TrigPoly::cosine(1.0, eta) +
                    pa::TrigPoly::cosine(std::sqrt(2.0), eta);
  spec.r = {pa::MixedFunction{r0, std::nullopt},
            pa::MixedFunction{}, pa::MixedFunction{}};
  spec.cls = pa::FunctionClass::AP;
  spec.p = 0.0;
  return spec;
}

pa::SolutionBundle solve_cubic(double eta) {
  const pa::ProblemSpec spec = cubic_spec(eta);
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);
  return pa::picard_solve(spec, rd, pa::check_existence(spec, rd, 0.0));
}

pa::ProblemSpec unperturbed(int n, std::vector<Complex> a) {
  pa::ProblemSpec spec;
  spec.n = n;
  spec.a = std::move(a);
  spec.r.assign(static_cast<std::size_t>(n), pa::MixedFunction{});
  spec.cls = pa::FunctionClass::AP;
  return spec;
}

}  // namespace

TEST_CASE("reference problem converges and the first iterate is explicit") {
  const pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);

  SUBCASE("first iterate -G[p]") {
    const pa::CompositeGreen G(rd.gammas);
    const pa::TrigPoly pap = pa::p_r_lambda(spec, rd.lambda).first;
    const pa::TrigPoly z1 = Complex{-1, 0} * G.apply(pap, 0);
    CHECK(std::abs(z1.mean() - Complex{0.02, 0}) < 1e-14);
    CHECK(std::abs(z1.coeff_at(1.0) - Complex{0.0025, 0}) < 1e-14);
    CHECK(std::abs(z1.coeff_at(-1.0) - Complex{0.0025, 0}) < 1e-14);
    CHECK(std::abs(z1.coeff_at(std::sqrt(2.0)) - Complex{1.0 / 600.0, 0}) < 1e-14);
  }

  SUBCASE("full iteration") {
    const pa::SolutionBundle b = solve_cubic(0.01);
    CHECK(b.iterations <= 30);
    CHECK_FALSE(b.forced);
    CHECK(b.eps0 < 0.5);
    CHECK(b.ball_bound <= b.report.M + 1e-12);
    CHECK(b.truncation_budget < 1e-9);
    CHECK(pa::residual_sup(b, -50.0, 50.0, 2001) < 1e-8);

    // fixed point is insensitive to the stopping tolerance
    pa::PicardOptions loose;
    loose.tol = 1e-9;
    const pa::SolutionBundle b2 =
        pa::picard_solve(spec, rd, pa::check_existence(spec, rd, 0.0), loose);
    CHECK(pa::sup_norm_upper(b.z - b2.z) < 1e-8);
  }
}

TEST_CASE("certificate gate and force escape hatch") {
  const pa::ProblemSpec spec = cubic_spec(0.0105);
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);
  const pa::ConditionReport rep = pa::check_existence(spec, rd, 0.0);
  REQUIRE_FALSE(rep.existence_pass);

  CHECK_THROWS_AS(pa::picard_solve(spec, rd, rep), pa::CertificateFailed);

  pa::PicardOptions opts;
  opts.force = true;
  const pa::SolutionBundle b = pa::picard_solve(spec, rd, rep, opts);
  CHECK(b.forced);
  CHECK(pa::residual_sup(b, -20.0, 20.0, 801) < 1e-8);
}

TEST_CASE("iterates that leave the certified ball are rejected") {
  const pa::ProblemSpec spec = cubic_spec(10.0);
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);
  pa::ConditionReport rep = pa::check_existence(spec, rd, 0.0);
  REQUIRE_FALSE(rep.existence_pass);
  rep.existence_pass = true;  // bypass the gate to exercise the ball guard
  CHECK_THROWS_AS(pa::picard_solve(spec, rd, rep), pa::BallEscape);
}

TEST_CASE("unperturbed operators keep the pure exponential") {
  struct Row {
    int n;
    std::vector<Complex> a;
  };
  const std::vector<Row> rows = {
      {2, {Complex{-2, 0}, Complex{1, 0}}},
      {3, {Complex{0, 0}, Complex{-1, 0}, Complex{0, 0}}},
      {5, {Complex{0, 0}, Complex{4, 0}, Complex{0, 0}, Complex{-5, 0}, Complex{0, 0}}},
  };
  for (const Row& row : rows) {
    CAPTURE(row.n);
    const pa::ProblemSpec spec = unperturbed(row.n, row.a);
    const std::vector<Complex> roots = pa::char_roots(spec.a);
    for (std::size_t k = 0; k < roots.size(); ++k) {
      const pa::RootData rd = pa::build_root_data(roots, k);
      const pa::SolutionBundle b =
          pa::picard_solve(spec, rd, pa::check_existence(spec, rd, 0.0));
      CHECK(b.z.empty());
      CHECK(b.iterations == 1);
      CHECK(pa::residual_sup(b, -10.0, 10.0, 401) < 1e-10);
      CHECK(std::abs(pa::log_derivative(b, 1, 0.7) - rd.lambda) < 1e-13);
    }
  }
}

TEST_CASE("reconstruction matches the iterated log-derivative") {
  const pa::SolutionBundle b = solve_cubic(0.01);
  const pa::SolutionRepresentation rep = pa::reconstruct(b);

  SUBCASE("normalized at zero") {
    CHECK(std::abs(pa::representation_eval(rep, 0.0) - Complex{1, 0}) < 1e-14);
  }

  SUBCASE("kappa and the effective exponent") {
    CHECK(std::abs(rep.kappa - Complex{1, 0}) < 1e-12);
    const pa::Antiderivative anti = pa::antiderivative(b.forcing_ap);
    CHECK(std::abs(rep.lambda_eff - (b.root.lambda + rep.kappa * anti.linear_coeff)) <
          1e-14);
    CHECK(std::abs(rep.lambda_eff - b.z.mean()) < 1e-10);
  }

  SUBCASE("logarithmic derivative equals lambda + z") {
    for (double t : {-3.1, 0.4, 7.9}) {
      const double h = 1e-5;
      const Complex num = (pa::representation_eval(rep, t + h) -
                           pa::representation_eval(rep, t - h)) /
                          (2.0 * h * pa::representation_eval(rep, t));
      const Complex exact = b.root.lambda + b.z.eval(t);
      CHECK(std::abs(num - exact) < 1e-8);
      CHECK(std::abs(pa::log_derivative(b, 1, t) - exact) < 1e-13);
    }
  }

  SUBCASE("derivative stack differentiates spectrally") {
    const pa::DerivativeStack st(b, 2);
    const pa::TrigPoly zp = pa::derivative(b.z);
    for (double t : {-1.0, 2.5}) {
      CHECK(std::abs(st.eval(0, t) - b.z.eval(t)) < 1e-14);
      CHECK(std::abs(st.eval(1, t) - zp.eval(t)) < 1e-14);
    }
  }

  SUBCASE("second log-derivative via Bell recursion") {
    // y''/y = (lambda + z)^2 + z'
    const pa::TrigPoly zp = pa::derivative(b.z);
    const double t = 1.9;
    const Complex expect =
        (b.root.lambda + b.z.eval(t)) * (b.root.lambda + b.z.eval(t)) + zp.eval(t);
    CHECK(std::abs(pa::log_derivative(b, 2, t) - expect) < 1e-13);
  }
}

TEST_CASE("two-stage solve splits the log-derivative") {
  pa::ProblemSpec spec = cubic_spec(0.01);
  spec.r[0].nu = pa::GridFunction::sample(
      [](double t) { return Complex{0.002 / (1.0 + t * t), 0.0}; }, -60.0, 0.02,
      6001, pa::TailModel::power_bound(0.002, 2.0));
  spec.cls = pa::FunctionClass::AAP;
  spec.p = 2.0;
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);

  const pa::SolutionBundle b = pa::solve_decomposed(spec, rd, 0.0);

  REQUIRE(b.theta_report.has_value());
  CHECK(b.theta_report->pass);
  REQUIRE(b.psi.has_value());
  REQUIRE(b.forcing_dec.has_value());
  CHECK(b.psi_iterations > 0);
  CHECK(b.psi_iterations <= 30);

  // first stage coincides with the decay-free solve
  const pa::SolutionBundle bmu = solve_cubic(0.01);
  CHECK(pa::sup_norm_upper(b.z - bmu.z) < 1e-10);

  // correction stays inside its certified ball and decays at the edges
  const double psi_sup = pa::sample_sup(*b.psi);
  CHECK(psi_sup > 0.0);
  CHECK(psi_sup <= b.theta_report->M);
  const std::vector<Complex>& s = b.psi->samples();
  CHECK(std::abs(s.front()) < 0.1 * psi_sup);
  CHECK(std::abs(s.back()) < 0.1 * psi_sup);

  SUBCASE("representation carries the decay integral") {
    const pa::SolutionRepresentation rep = pa::reconstruct(b);
    REQUIRE(rep.decay_integral.has_value());
    CHECK(std::abs(pa::representation_eval(rep, 0.0) - Complex{1, 0}) < 1e-12);
    // the decaying correction integrates to a bounded phase shift
    const double tail_gap =
        std::abs(rep.decay_integral->samples().back() -
                 rep.decay_integral->samples().front());
    CHECK(tail_gap < 1.0);
  }

  SUBCASE("full log-derivative solves the pointwise equation") {
    const pa::DerivativeStack st(b, spec.n - 1);
    for (double t : {-8.0, -1.3, 0.0, 2.2, 9.5}) {
      CHECK(std::abs(pa::residual_at(b, st, t)) < 1e-6);
    }
  }
}

TEST_CASE("error envelope constant is stable under window doubling") {
  const pa::SolutionBundle b = solve_cubic(0.01);
  CHECK_THROWS_AS(pa::error_order_check(b, 0.0), pa::Error);
  const pa::OrderCheck oc = pa::error_order_check(b, 0.5, 20.0, 0.1);
  CHECK(oc.cstar > 0.0);
  CHECK(oc.stable);
}

TEST_CASE("fundamental set for an unperturbed pair") {
  const pa::ProblemSpec spec = unperturbed(2, {Complex{-2, 0}, Complex{1, 0}});
  const pa::FundamentalSet fs = pa::fundamental_system(spec);

  REQUIRE(fs.bundles.size() == 2);
  CHECK(fs.bundles[0].z.empty());
  CHECK(fs.bundles[1].z.empty());
  CHECK(std::abs(fs.bundles[0].root.lambda - Complex{-2, 0}) < 1e-12);
  CHECK(std::abs(fs.bundles[1].root.lambda - Complex{1, 0}) < 1e-12);

  // rows are (1, lambda_k): |W| = |lambda_2 - lambda_1| = 3 at every t
  const double w = pa::wronskian_sample(fs.bundles, {-1.0, 0.0, 1.0});
  CHECK(w == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("scaled-down reference perturbation admits a fundamental system") {
  const pa::ProblemSpec spec = cubic_spec(0.002);
  const pa::FundamentalSet fs = pa::fundamental_system(spec);
  CHECK(fs.report.independent);
  REQUIRE(fs.bundles.size() == 3);
  for (const pa::SolutionBundle& b : fs.bundles)
    CHECK(pa::residual_sup(b, -10.0, 10.0, 401) < 1e-8);

  std::vector<double> ts;
  for (int k = 0; k <= 20; ++k) ts.push_back(-10.0 + k);
  CHECK(pa::wronskian_sample(fs.bundles, ts) >= 1.0);
}
