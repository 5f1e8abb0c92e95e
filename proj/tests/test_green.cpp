#include <cmath>
#include <random>

#include "doctest.h"
#include "perron_ap/green.hpp"

namespace pa = perron_ap;
using pa::Complex;
using pa::GridFunction;
using pa::TrigPoly;

namespace {

GridFunction exp_decay_grid(double T, double h) {
  const auto count = static_cast<std::size_t>(std::llround(2.0 * T / h)) + 1;
  return GridFunction::sample([](double t) { return Complex{std::exp(-std::abs(t)), 0}; }, -T, h,
                              count, pa::TailModel::exp_bound(1.0, 1.0));
}

// G_{-2}[e^{-|s|}](t) = e^t / 3 for t <= 0, e^{-t} - (2/3) e^{-2t} for t > 0.
double closed_form(double t) {
  if (t <= 0.0) return std::exp(t) / 3.0;
  return std::exp(-t) - (2.0 / 3.0) * std::exp(-2.0 * t);
}

TrigPoly apply_ode(const TrigPoly& g, Complex gamma) { return pa::derivative(g) - gamma * g; }

}  // namespace

TEST_CASE("kernel construction rejects vanishing real part") {
  CHECK_THROWS_AS(pa::GreenKernel(Complex{0, 1}), pa::RepeatedRealParts);
  CHECK_THROWS_AS(pa::GreenKernel(Complex{1e-13, 0}), pa::RepeatedRealParts);
  CHECK_NOTHROW(pa::GreenKernel(Complex{-2, 3}));
}

TEST_CASE("spectral action solves x' - w x = -f exactly") {
  const pa::GreenKernel k(Complex{-1.5, 0.5});
  const TrigPoly f = TrigPoly::harmonic(1.0, Complex{1, 1}) + TrigPoly::harmonic(-2.0, Complex{0, 3}) +
                     TrigPoly::constant(Complex{2, 0});
  const TrigPoly g = pa::green_apply(k, f);
  const TrigPoly resid = pa::derivative(g) - k.omega * g - f;
  CHECK(pa::sup_norm_upper(resid) < 1e-14);
  CHECK(std::abs(g.mean() - Complex{2, 0} / (-k.omega)) < 1e-15);
}

TEST_CASE("grid recurrence matches the closed form and converges at h^2") {
  auto max_err = [&](double h) {
    const GridFunction f = exp_decay_grid(30.0, h);
    const GridFunction g = pa::green_apply(pa::GreenKernel(Complex{-2, 0}), f);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      err = std::max(err, std::abs(g.samples()[k] - Complex{closed_form(g.grid_point(k)), 0}));
    return err;
  };
  const double e1 = max_err(0.02);
  const double e2 = max_err(0.01);
  CHECK(e2 < 2e-5);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.5);
}

TEST_CASE("backward rate integrates the other side") {
  const GridFunction f = exp_decay_grid(30.0, 0.01);
  const GridFunction g = pa::green_apply(pa::GreenKernel(Complex{2, 0}), f);
  // f is even, so the backward image is the reflected forward one with the
  // kernel's sign flip
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    err = std::max(err, std::abs(g.samples()[k] + Complex{closed_form(-g.grid_point(k)), 0}));
  CHECK(err < 2e-5);
}

TEST_CASE("hold extension reproduces the constant fixed point") {
  const GridFunction one =
      GridFunction::sample([](double) { return Complex{1, 0}; }, -5.0, 0.05, 201,
                           pa::TailModel::zero(), false);
  const GridFunction g = pa::green_apply(pa::GreenKernel(Complex{-2, 0}), one, pa::ExtensionPolicy::Hold);
  for (const Complex& v : g.samples()) CHECK(std::abs(v - Complex{0.5, 0}) < 1e-13);
}

TEST_CASE("composite green reproduces the reference coefficients") {
  const pa::CompositeGreen G({Complex{-1, 0}, Complex{1, 0}});
  const TrigPoly f = TrigPoly::constant(Complex{2, 0}) + TrigPoly::cosine(1.0, 1.0) +
                     TrigPoly::cosine(std::sqrt(2.0), 1.0);
  const TrigPoly g = G.apply(f, 0);
  CHECK(std::abs(g.mean() - Complex{-2, 0}) < 1e-12);
  CHECK(std::abs(g.coeff_at(1.0) - Complex{-0.25, 0}) < 1e-12);
  CHECK(std::abs(g.coeff_at(-1.0) - Complex{-0.25, 0}) < 1e-12);
  CHECK(std::abs(g.coeff_at(std::sqrt(2.0)) - Complex{-1.0 / 6, 0}) < 1e-12);

  const TrigPoly d = G.apply(f, 1);
  const TrigPoly want = TrigPoly::sine(1.0, 0.5) + TrigPoly::sine(std::sqrt(2.0), std::sqrt(2.0) / 3.0);
  CHECK(pa::coeff_distance(d, want) < 1e-12);
  CHECK(pa::coeff_distance(pa::derivative(g), d) < 1e-14);
}

TEST_CASE("composite inverts its factored operator on random inputs") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> ur(-2.0, 2.0);
  std::uniform_real_distribution<double> uf(0.2, 4.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 5);
    std::vector<Complex> gammas;
    for (int j = 0; j < m; ++j) {
      Complex g;
      bool ok = false;
      while (!ok) {
        g = Complex{ur(rng), ur(rng)};
        if (std::abs(g.real()) < 0.3) continue;
        ok = true;
        for (Complex o : gammas) ok = ok && std::abs(o - g) > 0.2;
      }
      gammas.push_back(g);
    }
    const pa::CompositeGreen G(gammas);

    TrigPoly f;
    for (int k = 0; k < 4; ++k) f = f + TrigPoly::harmonic(uf(rng), Complex{ur(rng), ur(rng)});
    TrigPoly back = G.apply(f, 0);
    for (Complex g : gammas) back = apply_ode(back, g);
    CHECK(pa::coeff_distance(back, f) < 1e-10);

    for (int i = 0; i <= m - 1; ++i) {
      Complex s{0, 0};
      for (std::size_t j = 0; j < gammas.size(); ++j)
        s += pa::cpow0(gammas[j], i) / G.Gammas()[j];
      const double target = (i == m - 1) ? 1.0 : 0.0;
      CHECK(std::abs(s - Complex{target, 0}) < 1e-10);
    }
  }
}

TEST_CASE("composite rejects degenerate rates") {
  CHECK_THROWS_AS(pa::CompositeGreen(std::vector<Complex>{}), pa::DegenerateRoots);
  CHECK_THROWS_AS(pa::CompositeGreen({Complex{1, 0}, Complex{1, 1e-11}}), pa::DegenerateRoots);
  const pa::CompositeGreen G({Complex{-1, 0}, Complex{1, 0}});
  const TrigPoly f = TrigPoly::cosine(1.0, 1.0);
  CHECK_THROWS_AS(G.apply(f, 3), pa::Error);
  CHECK_THROWS_AS(G.apply(f, -1), pa::Error);
}

TEST_CASE("grid composite agrees with the spectral one inside the window") {
  const pa::CompositeGreen G({Complex{-1, 0}, Complex{1, 0}});
  const TrigPoly f = TrigPoly::constant(Complex{1, 0}) + TrigPoly::cosine(1.0, 0.5) +
                     TrigPoly::sine(std::sqrt(3.0), 0.25);
  const double h = 0.01;
  const auto count = static_cast<std::size_t>(std::llround(90.0 / h)) + 1;
  const GridFunction fg = GridFunction::sample([&](double t) { return f.eval(t); }, -45.0, h, count,
                                               pa::TailModel::zero(), false);
  for (int deriv = 0; deriv <= 1; ++deriv) {
    const TrigPoly want = G.apply(f, deriv);
    const GridFunction got = G.apply(fg, deriv, pa::ExtensionPolicy::Hold);
    double err = 0.0;
    for (double t = -20.0; t <= 20.0; t += 0.37)
      err = std::max(err, std::abs(got.eval(t) - want.eval(t)));
    CHECK(err < 1e-4);
  }
}

TEST_CASE("majorant bounds") {
  const TrigPoly c = TrigPoly::constant(Complex{3, 0});
  CHECK(pa::ibound_sup(2.0, c) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(pa::ibound_sup(2.0, c, pa::BoundMode::Sharp) == doctest::Approx(1.5).epsilon(1e-2));

  const TrigPoly f = TrigPoly::cosine(1.0, 1.0);
  const double cert = pa::ibound_sup(1.0, f);
  const double sharp = pa::ibound_sup(1.0, f, pa::BoundMode::Sharp);
  CHECK(cert == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sharp <= cert + 1e-12);
  CHECK(sharp > 2.0 / 3.141592653589793 * 0.9);
  CHECK_THROWS_AS(pa::ibound_sup(0.0, f), pa::RepeatedRealParts);

  const GridFunction g = exp_decay_grid(20.0, 0.05);
  const double gcert = pa::ibound_sup(2.0, g);
  CHECK(gcert == doctest::Approx(0.5).epsilon(1e-12));
  const double gsharp = pa::ibound_sup(2.0, g, pa::BoundMode::Sharp);
  CHECK(gsharp <= gcert + 1e-12);
  // true sup of I_2[e^{-|s|}] is the closed-form value 1/3 at t = 0
  CHECK(gsharp > 0.3);
  CHECK(gsharp < 0.4);
}

TEST_CASE("gain bounds the certified amplification") {
  const pa::CompositeGreen G({Complex{-1, 0}, Complex{1, 0}});
  // sum over j of 1 / (|Gamma_j| |Re gamma_j|) = 1/2 + 1/2
  CHECK(G.gain(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(G.gain(1) == doctest::Approx(1.0).epsilon(1e-14));
}
