#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "perron_ap/perron_ap.hpp"

namespace pa = perron_ap;
using Complex = std::complex<double>;

namespace {

// y''' - y' + r0(t) y = 0 with r0 = eta (2 + cos t + cos sqrt(2) t)
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

pa::RootData cubic_root_data(std::size_t pick) {
  return pa::build_root_data(pa::char_roots(cubic_spec(0.01).a), pick);
}

double cubic_modulus(double delta) { return 3.0 * delta * delta + 3.0 * delta; }

}  // namespace

TEST_CASE("zero-root certificate chain has closed forms") {
  const pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = cubic_root_data(1);
  REQUIRE(std::abs(rd.lambda) < 1e-12);

  const pa::ConditionReport rep = pa::check_existence(spec, rd, 0.0);

  CHECK(rep.L0 <= 1e-12);
  CHECK(rep.Q0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.delta_lambda ==
        doctest::Approx((std::sqrt(15.0) - 3.0) / 6.0).epsilon(1e-12));
  CHECK(rep.M == doctest::Approx((std::sqrt(6.0) - 2.0) / 6.0).epsilon(1e-12));
  CHECK(rep.gM ==
        doctest::Approx((3.0 * std::sqrt(6.0) - 7.0) / 9.0).epsilon(1e-12));

  const double h_exact =
      (17.0 / 6.0 + 0.5 + std::sqrt(2.0) / 3.0) * 0.01;
  CHECK(rep.H == doctest::Approx(h_exact).epsilon(1e-12));
  CHECK(rep.eps0 ==
        doctest::Approx(cubic_modulus(rep.M) * 2.0).epsilon(1e-12));
  CHECK(rep.eps0 < 0.5);

  CHECK(rep.existence_pass);
  CHECK(rep.order_pass);

  SUBCASE("shifted rate doubles Q at beta = 1/2") {
    const pa::ConditionReport shifted = pa::check_existence(spec, rd, 0.5);
    CHECK(shifted.Qbeta == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(shifted.Lbeta == doctest::Approx(0.0).scale(1e-12));
    CHECK(shifted.order_pass);
  }
}

TEST_CASE("unit-root chain: Q grows and the certificate fails honestly") {
  const pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = cubic_root_data(2);
  REQUIRE(std::abs(rd.lambda - Complex{1, 0}) < 1e-12);

  const pa::ConditionReport rep = pa::check_existence(spec, rd, 0.0);
  CHECK(rep.L0 == doctest::Approx(0.0).scale(1e-12));
  // 12/(2-beta) + 8/(1-beta) at beta = 0
  CHECK(rep.Q0 == doctest::Approx(14.0).epsilon(1e-12));
  CHECK(rep.M ==
        doctest::Approx((std::sqrt(15.0 / 14.0) - 1.0) / 3.0).epsilon(1e-12));

  // documented companion value computed from the looser rate bound
  bool note_seen = false;
  for (const std::string& n : rep.notes)
    if (n.find("0.0082327") != std::string::npos) note_seen = true;
  CHECK(note_seen);

  // H exceeds g(M) for this root at this amplitude: no certificate, no throw
  CHECK_FALSE(rep.existence_pass);
  CHECK(rep.H > rep.gM);

  SUBCASE("beta = 1/2") {
    const pa::ConditionReport shifted = pa::check_existence(spec, rd, 0.5);
    CHECK(shifted.Qbeta == doctest::Approx(24.0).epsilon(1e-12));
  }

  SUBCASE("mirror root carries the same note") {
    const pa::ConditionReport left =
        pa::check_existence(spec, cubic_root_data(0), 0.0);
    bool seen = false;
    for (const std::string& n : left.notes)
      if (n.find("0.0082327") != std::string::npos) seen = true;
    CHECK(seen);
  }

  SUBCASE("zero root does not") {
    const pa::ConditionReport mid =
        pa::check_existence(spec, cubic_root_data(1), 0.0);
    for (const std::string& n : mid.notes)
      CHECK(n.find("0.0082327") == std::string::npos);
  }
}

TEST_CASE("L bound: closed form, beta monotonicity, sharp refinement") {
  pa::ProblemSpec spec = cubic_spec(0.01);
  spec.r[1].mu = pa::TrigPoly::cosine(1.0, 0.05);
  const pa::RootData rd = cubic_root_data(1);

  // lc_1 = r_1 at lambda = 0, I[0.05 cos] = 0.05 per unit rate, two roots
  const double L0 = pa::compute_L(rd, spec, 0.0);
  CHECK(L0 == doctest::Approx(0.1).epsilon(1e-12));

  SUBCASE("nondecreasing in beta") {
    double q_prev = 0.0, l_prev = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double beta = 0.09 * k;
      const double l = pa::compute_L(rd, spec, beta);
      const double q = pa::compute_Q(rd, spec, beta);
      CHECK(l >= l_prev - 1e-15);
      CHECK(q >= q_prev - 1e-15);
      l_prev = l;
      q_prev = q;
    }
  }

  SUBCASE("beta at or beyond the dichotomy rate is rejected") {
    CHECK_THROWS_AS(pa::compute_L(rd, spec, 1.0), pa::BetaTooLarge);
    CHECK_THROWS_AS(pa::compute_Q(rd, spec, 1.5), pa::BetaTooLarge);
    CHECK_THROWS_AS(pa::compute_L(rd, spec, -0.1), pa::BetaTooLarge);
  }

  SUBCASE("sharp bound sits between half the certified value and it") {
    pa::SharpOptions opt;
    const double sharp = pa::compute_L(rd, spec, 0.0, pa::BoundMode::Sharp, opt);
    CHECK(sharp <= L0 + 1e-12);
    CHECK(sharp > 0.5 * L0);
  }
}

TEST_CASE("Q keeps the leading coefficient even when all a_i vanish") {
  pa::ProblemSpec spec;
  spec.n = 3;
  spec.a = {Complex{0, 0}, Complex{-1, 0}, Complex{0, 0}};
  spec.r = {pa::MixedFunction{}, pa::MixedFunction{},
            pa::MixedFunction{}};
  spec.cls = pa::FunctionClass::AP;
  const pa::RootData rd = cubic_root_data(1);
  // a_2 = 0 and r == 0, but the monic a_3 = 1 term remains
  CHECK(pa::compute_Q(rd, spec, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(pa::compute_L(rd, spec, 0.0) == doctest::Approx(0.0).scale(1e-15));
}

TEST_CASE("ball radius selection") {
  SUBCASE("cubic closed form matches the generic maximiser") {
    const pa::MChoice mc = pa::find_M(0.0, 2.0, 3);
    CHECK(mc.M == doctest::Approx((std::sqrt(6.0) - 2.0) / 6.0).epsilon(1e-12));
    CHECK(cubic_modulus(mc.delta_lambda) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(mc.M < mc.delta_lambda);
  }

  SUBCASE("order four agrees with a dense scan") {
    const pa::MChoice mc = pa::find_M(0.1, 5.0, 4);
    auto g = [&](double d) {
      return (1.0 - 0.1 - pa::lipschitz_modulus(4, d) * 5.0) * d;
    };
    double best_d = 0.0, best_g = -1.0;
    for (int i = 1; i < 20000; ++i) {
      const double d = mc.delta_lambda * i / 20000.0;
      if (g(d) > best_g) {
        best_g = g(d);
        best_d = d;
      }
    }
    CHECK(mc.M == doctest::Approx(best_d).epsilon(1e-4));
    CHECK(mc.gM == doctest::Approx(best_g).epsilon(1e-8));
    CHECK(mc.gM >= best_g - 1e-12);
  }

  SUBCASE("g(M) dominates random radii inside the admissible interval") {
    const pa::MChoice mc = pa::find_M(0.2, 3.0, 5);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const double d = u(rng) * mc.delta_lambda;
      const double g = (1.0 - 0.2 - pa::lipschitz_modulus(5, d) * 3.0) * d;
      CHECK(mc.gM >= g - 1e-10);
    }
  }

  SUBCASE("degenerate contraction margin still yields a positive ball") {
    const pa::MChoice mc = pa::find_M(1.0 - 1e-12, 5.0, 3);
    CHECK(mc.M > 0.0);
    CHECK(mc.M < mc.delta_lambda);
    CHECK(mc.gM >= 0.0);
  }

  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(pa::find_M(1.0, 2.0, 3), pa::L0GreaterThanOne);
    CHECK_THROWS_AS(pa::find_M(1.3, 2.0, 3), pa::L0GreaterThanOne);
    CHECK_THROWS_AS(pa::find_M(0.0, 0.0, 3), pa::Error);
  }
}

TEST_CASE("existence report never throws on a failed certificate") {
  const pa::ProblemSpec spec = cubic_spec(10.0);
  const pa::RootData rd = cubic_root_data(1);
  pa::ConditionReport rep;
  CHECK_NOTHROW(rep = pa::check_existence(spec, rd, 0.0));
  CHECK_FALSE(rep.existence_pass);
  CHECK(rep.H == doctest::Approx(38.047378541243647).epsilon(1e-10));
  CHECK(rep.L0 == doctest::Approx(0.0).scale(1e-12));
}

TEST_CASE("H bound grows when a decaying part joins the perturbation") {
  pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = cubic_root_data(1);
  const double h_ap = pa::compute_H(rd, spec);

  spec.r[0].nu = pa::GridFunction::sample(
      [](double t) { return Complex{0.002 / (1.0 + t * t), 0.0}; }, -60.0,
      0.02, 6001, pa::TailModel::power_bound(0.002, 2.0));
  spec.cls = pa::FunctionClass::AAP;
  spec.p = 2.0;
  const double h_mixed = pa::compute_H(rd, spec);

  CHECK(h_mixed > h_ap);
  CHECK(h_mixed == doctest::Approx(0.039725168391526386).epsilon(1e-9));

  pa::SharpOptions opt;
  const double h_sharp = pa::compute_H(rd, spec, pa::BoundMode::Sharp, opt);
  CHECK(h_sharp <= h_mixed + 1e-12);
  CHECK(h_sharp > 0.0);
}

TEST_CASE("fundamental-system criterion on the damped reference problem") {
  pa::ProblemSpec spec = cubic_spec(0.002);
  const pa::FundamentalReport rep = pa::check_fundamental_system(spec, 0.0);

  REQUIRE(rep.roots.size() == 3);
  REQUIRE(rep.per_root.size() == 3);
  CHECK(rep.roots[0].real() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(rep.roots[1]) < 1e-12);
  CHECK(rep.roots[2].real() == doctest::Approx(1.0).epsilon(1e-12));

  // exact inverse Vandermonde norm for {-1, 0, 1}
  CHECK(rep.vinv_exact == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.vinv_used == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.vinv_gautschi >= rep.vinv_used - 1e-12);

  // middle root: M(m(M)+1) = (3 sqrt 6 - 4)/36, sum factor 2
  CHECK(rep.factors[1] ==
        doctest::Approx((3.0 * std::sqrt(6.0) - 4.0) / 36.0).epsilon(1e-9));
  CHECK(rep.sum_factors[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.sum_factors[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rep.sum_factors[2] == doctest::Approx(4.0).epsilon(1e-12));

  // outer roots: M = (sqrt(15/14)-1)/3
  const double m_out = (std::sqrt(15.0 / 14.0) - 1.0) / 3.0;
  const double f_out = m_out * (cubic_modulus(m_out) + 1.0);
  CHECK(rep.factors[0] == doctest::Approx(f_out).epsilon(1e-9));

  CHECK(rep.criterion_value ==
        doctest::Approx((3.0 * std::sqrt(6.0) - 4.0) / 9.0).epsilon(1e-9));
  CHECK(rep.independent);
}

TEST_CASE("fundamental system reports which roots fail") {
  pa::ProblemSpec spec = cubic_spec(0.01);
  try {
    pa::check_fundamental_system(spec, 0.0);
    FAIL("expected PerRootFailure");
  } catch (const pa::PerRootFailure& e) {
    REQUIRE(e.failing_roots.size() == 2);
    CHECK(e.failing_roots[0] == 0);
    CHECK(e.failing_roots[1] == 2);
  }
}

TEST_CASE("order-two fundamental smoke") {
  pa::ProblemSpec spec;
  spec.n = 2;
  spec.a = {Complex{-2, 0}, Complex{1, 0}};
  spec.r = {pa::MixedFunction{}, pa::MixedFunction{}};
  spec.cls = pa::FunctionClass::AP;

  const pa::FundamentalReport rep = pa::check_fundamental_system(spec, 0.0);
  REQUIRE(rep.roots.size() == 2);
  CHECK(rep.roots[0].real() == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(rep.roots[1].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.sum_factors[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.sum_factors[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.vinv_exact == doctest::Approx(1.0).epsilon(1e-12));

  // unperturbed: M = 3/4 maximises (1 - 2 delta/3) delta on (0, 3/2)
  CHECK(rep.per_root[0].M == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(rep.factors[0] == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(rep.criterion_value == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(rep.independent == (rep.criterion_value < 1.0));
  CHECK_FALSE(rep.independent);
}

TEST_CASE("theta-stage conditions") {
  pa::ProblemSpec spec = cubic_spec(0.01);
  spec.r[0].nu = pa::GridFunction::sample(
      [](double t) { return Complex{0.002 / (1.0 + t * t), 0.0}; }, -60.0,
      0.02, 6001, pa::TailModel::power_bound(0.002, 2.0));
  spec.cls = pa::FunctionClass::AAP;
  spec.p = 2.0;
  const pa::RootData rd = cubic_root_data(1);

  SUBCASE("collapses to the first-stage bounds at theta = 0") {
    const pa::ThetaConditionReport tcr =
        pa::compute_theta_conditions(rd, spec, pa::TrigPoly{}, 0.0);
    CHECK(tcr.L0 == doctest::Approx(pa::compute_L(rd, spec, 0.0)).epsilon(1e-12));
    CHECK(tcr.Q0 == doctest::Approx(pa::compute_Q(rd, spec, 0.0)).epsilon(1e-12));
    CHECK(tcr.forcing_norm > 0.0);
  }

  SUBCASE("passes with the converged first-stage log-derivative") {
    pa::ProblemSpec spec_mu = spec;
    spec_mu.r[0].nu.reset();
    spec_mu.cls = pa::FunctionClass::AP;
    spec_mu.p = 0.0;
    const pa::SolutionBundle bundle =
        pa::picard_solve(spec_mu, rd, pa::check_existence(spec_mu, rd, 0.0));

    const pa::ThetaConditionReport tcr =
        pa::compute_theta_conditions(rd, spec, bundle.z, 0.0);
    CHECK(tcr.pass);
    CHECK(tcr.forcing_norm <= tcr.gM);
    CHECK(tcr.forcing_norm > 0.0);
    CHECK(tcr.Q0 >= 2.0 - 1e-12);
    CHECK(tcr.M > 0.0);
    CHECK(tcr.M < tcr.delta_lambda);
  }

  SUBCASE("huge theta pushes the linear bound past one") {
    const pa::TrigPoly theta = pa::TrigPoly::constant(Complex{10.0, 0.0});
    CHECK_THROWS_AS(pa::compute_theta_conditions(rd, spec, theta, 0.0),
                    pa::L0ThetaGreaterThanOne);
  }
}

TEST_CASE("psi forcing needs a decaying part") {
  const pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = cubic_root_data(1);
  pa::TruncationContext ctx;
  const pa::PsiCoefficients pc =
      pa::build_psi_coefficients(spec, rd, pa::TrigPoly{}, ctx);
  CHECK_FALSE(pa::psi_forcing(spec, rd, pc, ctx).has_value());
}
