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

}  // namespace

TEST_CASE("adaptive reference integrator") {
  SUBCASE("exponential growth") {
    pa::ProblemSpec spec;
    spec.n = 2;
    spec.a = {Complex{-1, 0}, Complex{0, 0}};
    spec.r = {pa::MixedFunction{}, pa::MixedFunction{}};
    spec.cls = pa::FunctionClass::AP;

    const pa::Trajectory tr =
        pa::reference_integrate(spec, {Complex{1, 0}, Complex{1, 0}}, 0.0, 10.0);
    const Complex y10 = tr.states.back()[0];
    CHECK(std::abs(y10 - std::exp(10.0)) / std::exp(10.0) < 1e-7);

    // dense output between accepted steps
    const Complex ymid = tr.eval(5.5)[0];
    CHECK(std::abs(ymid - std::exp(5.5)) / std::exp(5.5) < 1e-7);
  }

  SUBCASE("third order: constant and sinh branches") {
    pa::ProblemSpec spec = cubic_spec(0.0);
    const pa::Trajectory flat =
        pa::reference_integrate(spec, {Complex{1, 0}, Complex{0, 0}, Complex{0, 0}},
                                0.0, 5.0);
    CHECK(std::abs(flat.states.back()[0] - Complex{1, 0}) < 1e-9);
    CHECK(std::abs(flat.states.back()[1]) < 1e-9);

    const pa::Trajectory odd =
        pa::reference_integrate(spec, {Complex{0, 0}, Complex{1, 0}, Complex{0, 0}},
                                0.0, 3.0);
    CHECK(std::abs(odd.states.back()[0] - std::sinh(3.0)) < 1e-8);
    CHECK(std::abs(odd.eval(1.2)[0] - std::sinh(1.2)) < 1e-9);
  }

  SUBCASE("guards") {
    pa::ProblemSpec spec = cubic_spec(0.0);
    const std::vector<Complex> u0 = {Complex{1, 0}, Complex{0, 0}, Complex{0, 0}};
    CHECK_THROWS_AS(pa::reference_integrate(spec, {Complex{1, 0}}, 0.0, 1.0), pa::Error);
    CHECK_THROWS_AS(pa::reference_integrate(spec, u0, 1.0, 1.0), pa::Error);
    CHECK_THROWS_AS(pa::reference_integrate(spec, u0, 0.0, 1.0, 1e-300, 0.0),
                    pa::StepUnderflow);
  }
}

TEST_CASE("residual scan accepts the certified solution and flags a corrupt one") {
  const pa::SolutionBundle b = solve_cubic(0.01);
  CHECK(pa::residual_sup(b, -30.0, 30.0, 1201) < 1e-8);

  SUBCASE("window validation") {
    CHECK_THROWS_AS(pa::residual_sup(b, 1.0, -1.0), pa::Error);
    CHECK_THROWS_AS(pa::residual_sup(b, 0.0, 1.0, 1), pa::Error);
  }

  SUBCASE("ten percent corruption is visible") {
    pa::SolutionBundle bad = b;
    bad.z = Complex{1.1, 0} * bad.z;
    CHECK(pa::residual_sup(bad, -30.0, 30.0, 1201) > 1e-4);
  }
}

TEST_CASE("initial state matches the log-derivative chain") {
  const pa::SolutionBundle b = solve_cubic(0.01);
  const std::vector<Complex> u0 = pa::initial_state(b);
  REQUIRE(u0.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(u0[static_cast<std::size_t>(i)] - pa::log_derivative(b, i, 0.0)) <
          1e-13);
  CHECK(std::abs(u0[0] - Complex{1, 0}) < 1e-14);
}

TEST_CASE("representation tracks the adaptive integrator") {
  const pa::SolutionBundle b = solve_cubic(0.01);
  CHECK(pa::reference_agreement(b, 10.0) < 1e-6);
}

TEST_CASE("independent collocation run reproduces the fixed point") {
  const pa::ProblemSpec spec = cubic_spec(0.01);
  const pa::RootData rd = pa::build_root_data(pa::char_roots(spec.a), 1);
  const pa::SolutionBundle b = solve_cubic(0.01);

  pa::OracleOptions opt;
  opt.window = 15.0;
  opt.h = 0.02;
  const pa::GridFunction oracle = pa::collocation_oracle(spec, rd, opt);

  double worst = 0.0;
  for (double t = -10.0; t <= 10.0; t += 0.25)
    worst = std::max(worst, std::abs(oracle.eval(t) - b.z.eval(t)));
  CHECK(worst < 5e-6);
}

TEST_CASE("wronskian sampling") {
  SUBCASE("duplicated solutions are dependent") {
    pa::ProblemSpec pair;
    pair.n = 2;
    pair.a = {-2.0, 1.0};
    pair.r = {pa::MixedFunction{}, pa::MixedFunction{}};
    pair.cls = pa::FunctionClass::AP;
    const pa::RootData rd = pa::build_root_data(pa::char_roots(pair.a), 1);
    const pa::SolutionBundle b =
        pa::picard_solve(pair, rd, pa::check_existence(pair, rd, 0.0));
    const double w = pa::wronskian_sample({b, b}, {0.0, 1.0});
    CHECK(w < 1e-12);
  }

  SUBCASE("scaled-down system stays away from zero") {
    const pa::FundamentalSet fs = pa::fundamental_system(cubic_spec(0.002));
    std::vector<double> ts;
    for (int k = 0; k <= 10; ++k) ts.push_back(-5.0 + k);
    CHECK(pa::wronskian_sample(fs.bundles, ts) >= 1.0);
  }
}
