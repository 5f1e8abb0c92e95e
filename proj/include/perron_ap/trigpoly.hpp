#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "perron_ap/errors.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

/// Term-drop / frequency-cap policy for trig-poly products and truncation.
struct TruncationPolicy {
  double eps_drop = 1e-13;  // coefficient magnitude below which terms are dropped
  int k_max = 2000;         // frequency count cap
  double eps_freq = 1e-9;   // frequencies closer than this are merged
};

/// Accumulates the total dropped coefficient mass across a computation.
struct TruncationContext {
  TruncationPolicy policy{};
  double discarded_mass = 0.0;
};

/// Generalized trigonometric polynomial  a(t) = sum_m c_m e^{i nu_m t}
/// with strictly increasing real frequencies. The real_valued flag asserts
/// conjugate symmetry (c(-nu) = conj(c(nu))); arithmetic preserves it.
class TrigPoly {
 public:
  TrigPoly() = default;

  static TrigPoly constant(Complex c) {
    TrigPoly p;
    if (c != Complex{0, 0}) {
      p.freqs_.push_back(0.0);
      p.coeffs_.push_back(c);
    }
    p.real_valued_ = (c.imag() == 0.0);
    if (p.real_valued_ && !p.coeffs_.empty()) p.coeffs_[0] = Complex{c.real(), 0.0};
    return p;
  }

  static TrigPoly harmonic(double freq, Complex coeff) {
    TrigPoly p;
    if (coeff != Complex{0, 0}) {
      p.freqs_.push_back(std::abs(freq) < default_eps_freq ? 0.0 : freq);
      p.coeffs_.push_back(coeff);
    }
    p.real_valued_ = p.freqs_.empty() || (p.freqs_[0] == 0.0 && coeff.imag() == 0.0);
    return p;
  }

  /// amp * cos(freq t), stored as the symmetric +-freq pair.
  static TrigPoly cosine(double freq, double amp) {
    if (std::abs(freq) < default_eps_freq) return constant(Complex{amp, 0});
    TrigPoly p;
    const double f = std::abs(freq);
    p.freqs_ = {-f, f};
    p.coeffs_ = {Complex{amp / 2, 0}, Complex{amp / 2, 0}};
    p.real_valued_ = true;
    return p;
  }

  /// amp * sin(freq t).
  static TrigPoly sine(double freq, double amp) {
    if (std::abs(freq) < default_eps_freq) return TrigPoly{};
    TrigPoly p;
    const double f = std::abs(freq);
    const double s = freq < 0 ? -amp : amp;
    p.freqs_ = {-f, f};
    p.coeffs_ = {Complex{0, s / 2}, Complex{0, -s / 2}};
    p.real_valued_ = true;
    return p;
  }

  /// Canonicalize an arbitrary term list: snap near-zero frequencies to 0,
  /// sort, merge clusters closer than eps_freq, drop exact zeros.
  static TrigPoly from_terms(std::vector<double> freqs, std::vector<Complex> coeffs,
                             bool real_valued, double eps_freq = default_eps_freq) {
    TrigPoly p;
    p.real_valued_ = real_valued;
    const std::size_t m = freqs.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < m; ++k)
      if (std::abs(freqs[k]) < eps_freq) freqs[k] = 0.0;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (freqs[a] != freqs[b]) return freqs[a] < freqs[b];
      return a < b;
    });
    std::size_t k = 0;
    while (k < m) {
      // maximal run of frequencies with consecutive gaps < eps_freq
      std::size_t end = k + 1;
      while (end < m && freqs[order[end]] - freqs[order[end - 1]] < eps_freq) ++end;
      Complex sum{0, 0};
      std::size_t rep = order[k];
      for (std::size_t j = k; j < end; ++j) {
        const std::size_t idx = order[j];
        sum += coeffs[idx];
        // representative: largest coefficient, then largest |freq|, then sign
        const double ca = std::abs(coeffs[idx]), cr = std::abs(coeffs[rep]);
        if (ca > cr ||
            (ca == cr && (std::abs(freqs[idx]) > std::abs(freqs[rep]) ||
                          (std::abs(freqs[idx]) == std::abs(freqs[rep]) && freqs[idx] > freqs[rep]))))
          rep = idx;
      }
      if (sum != Complex{0, 0}) {
        p.freqs_.push_back(freqs[rep]);
        p.coeffs_.push_back(sum);
      }
      k = end;
    }
    if (p.real_valued_) p.project_real();
    return p;
  }

  bool empty() const { return freqs_.empty(); }
  std::size_t size() const { return freqs_.size(); }
  const std::vector<double>& freqs() const { return freqs_; }
  const std::vector<Complex>& coeffs() const { return coeffs_; }
  bool real_valued() const { return real_valued_; }
  void set_real_valued(bool v) {
    real_valued_ = v;
    if (v) project_real();
  }

  Complex coeff_at(double freq, double tol = default_eps_freq) const {
    auto it = std::lower_bound(freqs_.begin(), freqs_.end(), freq - tol);
    if (it != freqs_.end() && std::abs(*it - freq) <= tol)
      return coeffs_[static_cast<std::size_t>(it - freqs_.begin())];
    return Complex{0, 0};
  }

  Complex mean() const { return coeff_at(0.0); }

  Complex eval(double t) const {
    Complex s{0, 0};
    for (std::size_t m = 0; m < freqs_.size(); ++m)
      s += coeffs_[m] * std::polar(1.0, freqs_[m] * t);
    if (real_valued_) return Complex{s.real(), 0.0};
    return s;
  }

  friend TrigPoly operator+(const TrigPoly& a, const TrigPoly& b) {
    std::vector<double> f(a.freqs_);
    f.insert(f.end(), b.freqs_.begin(), b.freqs_.end());
    std::vector<Complex> c(a.coeffs_);
    c.insert(c.end(), b.coeffs_.begin(), b.coeffs_.end());
    return from_terms(std::move(f), std::move(c), a.real_valued_ && b.real_valued_);
  }

  friend TrigPoly operator-(const TrigPoly& a, const TrigPoly& b) { return a + (-b); }

  TrigPoly operator-() const {
    TrigPoly p(*this);
    for (auto& c : p.coeffs_) c = -c;
    return p;
  }

  friend TrigPoly operator*(Complex s, const TrigPoly& a) {
    TrigPoly p(a);
    for (auto& c : p.coeffs_) c *= s;
    p.real_valued_ = a.real_valued_ && s.imag() == 0.0;
    if (!p.coeffs_.empty() && s == Complex{0, 0}) {
      p.freqs_.clear();
      p.coeffs_.clear();
    }
    return p;
  }

  friend TrigPoly operator*(double s, const TrigPoly& a) { return Complex{s, 0} * a; }

  /// Complex conjugate: frequencies negate, coefficients conjugate.
  TrigPoly conj() const {
    TrigPoly p;
    p.real_valued_ = real_valued_;
    p.freqs_.resize(freqs_.size());
    p.coeffs_.resize(coeffs_.size());
    for (std::size_t m = 0; m < freqs_.size(); ++m) {
      p.freqs_[freqs_.size() - 1 - m] = -freqs_[m];
      p.coeffs_[freqs_.size() - 1 - m] = std::conj(coeffs_[m]);
    }
    return p;
  }

  static constexpr double default_eps_freq = 1e-9;

 private:
  // Project coefficients onto the conjugate-symmetric subspace. Arithmetic on
  // symmetric inputs is symmetric up to rounding; this pins it exactly.
  void project_real() {
    const std::size_t m = freqs_.size();
    for (std::size_t k = 0; k < m; ++k) {
      if (freqs_[k] == 0.0) {
        coeffs_[k] = Complex{coeffs_[k].real(), 0.0};
        continue;
      }
      if (freqs_[k] >= 0.0) break;
      const std::size_t mirror = mirror_index(k);
      if (mirror == m) continue;  // unmatched; leave as-is (flag is an assertion)
      const Complex avg = 0.5 * (coeffs_[k] + std::conj(coeffs_[mirror]));
      coeffs_[k] = avg;
      coeffs_[mirror] = std::conj(avg);
    }
  }

  std::size_t mirror_index(std::size_t k) const {
    const double target = -freqs_[k];
    auto it = std::lower_bound(freqs_.begin(), freqs_.end(), target - default_eps_freq);
    if (it != freqs_.end() && std::abs(*it - target) <= default_eps_freq)
      return static_cast<std::size_t>(it - freqs_.begin());
    return freqs_.size();
  }

  std::vector<double> freqs_;    // strictly increasing
  std::vector<Complex> coeffs_;  // same length
  bool real_valued_ = true;      // zero poly is real
};

struct TruncationResult {
  TrigPoly poly;
  double discarded_mass = 0.0;
};

/// Drop terms below eps_drop, then cap at k_max keeping the largest |c_m|.
/// Conjugate pairs of a real_valued poly are kept or dropped together.
inline TruncationResult truncate(const TrigPoly& a, double eps_drop, int k_max) {
  const auto& f = a.freqs();
  const auto& c = a.coeffs();
  const std::size_t m = f.size();

  // group indices into units: singletons, or +-nu pairs when real_valued
  std::vector<std::vector<std::size_t>> units;
  if (a.real_valued()) {
    std::vector<char> used(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
      if (used[k]) continue;
      std::vector<std::size_t> unit{k};
      used[k] = 1;
      if (f[k] != 0.0) {
        const double target = -f[k];
        auto it = std::lower_bound(f.begin(), f.end(), target - TrigPoly::default_eps_freq);
        if (it != f.end() && std::abs(*it - target) <= TrigPoly::default_eps_freq) {
          const std::size_t j = static_cast<std::size_t>(it - f.begin());
          if (!used[j]) {
            unit.push_back(j);
            used[j] = 1;
          }
        }
      }
      units.push_back(std::move(unit));
    }
  } else {
    for (std::size_t k = 0; k < m; ++k) units.push_back({k});
  }

  auto unit_peak = [&](const std::vector<std::size_t>& u) {
    double peak = 0.0;
    for (std::size_t idx : u) peak = std::max(peak, std::abs(c[idx]));
    return peak;
  };

  std::vector<std::size_t> keep_units;
  double discarded = 0.0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (unit_peak(units[u]) < eps_drop) {
      for (std::size_t idx : units[u]) discarded += std::abs(c[idx]);
    } else {
      keep_units.push_back(u);
    }
  }

  // cap: keep the largest units while the term count stays within k_max
  std::sort(keep_units.begin(), keep_units.end(), [&](std::size_t x, std::size_t y) {
    const double px = unit_peak(units[x]), py = unit_peak(units[y]);
    if (px != py) return px > py;
    return f[units[x][0]] < f[units[y][0]];
  });
  std::vector<char> keep_term(m, 0);
  int count = 0;
  for (std::size_t u : keep_units) {
    const int sz = static_cast<int>(units[u].size());
    if (count + sz <= k_max) {
      for (std::size_t idx : units[u]) keep_term[idx] = 1;
      count += sz;
    } else {
      for (std::size_t idx : units[u]) discarded += std::abs(c[idx]);
    }
  }

  std::vector<double> nf;
  std::vector<Complex> nc;
  nf.reserve(static_cast<std::size_t>(count));
  nc.reserve(static_cast<std::size_t>(count));
  for (std::size_t k = 0; k < m; ++k) {
    if (keep_term[k]) {
      nf.push_back(f[k]);
      nc.push_back(c[k]);
    }
  }
  return TruncationResult{TrigPoly::from_terms(std::move(nf), std::move(nc), a.real_valued()),
                          discarded};
}

inline TruncationResult truncate(const TrigPoly& a, const TruncationPolicy& pol) {
  return truncate(a, pol.eps_drop, pol.k_max);
}

/// Product with drop pass; errors if the surviving frequency count exceeds the
/// cap (capping inside a product would silently corrupt it).
inline TrigPoly mul(const TrigPoly& a, const TrigPoly& b, TruncationContext& ctx) {
  const auto& fa = a.freqs();
  const auto& ca = a.coeffs();
  const auto& fb = b.freqs();
  const auto& cb = b.coeffs();
  std::vector<double> f;
  std::vector<Complex> c;
  f.reserve(fa.size() * fb.size());
  c.reserve(fa.size() * fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t j = 0; j < fb.size(); ++j) {
      f.push_back(fa[i] + fb[j]);
      c.push_back(ca[i] * cb[j]);
    }
  TrigPoly raw = TrigPoly::from_terms(std::move(f), std::move(c),
                                      a.real_valued() && b.real_valued(),
                                      ctx.policy.eps_freq);
  // drop pass only; the cap is a hard error here
  TruncationResult tr = truncate(raw, ctx.policy.eps_drop, std::numeric_limits<int>::max());
  ctx.discarded_mass += tr.discarded_mass;
  if (static_cast<int>(tr.poly.size()) > ctx.policy.k_max)
    throw ProductOverflow("trig-poly product has " + std::to_string(tr.poly.size()) +
                          " frequencies after the drop pass (cap " +
                          std::to_string(ctx.policy.k_max) + ")");
  return tr.poly;
}

inline TrigPoly derivative(const TrigPoly& a) {
  std::vector<double> f;
  std::vector<Complex> c;
  f.reserve(a.size());
  c.reserve(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a.freqs()[m] == 0.0) continue;
    f.push_back(a.freqs()[m]);
    c.push_back(Complex{0, a.freqs()[m]} * a.coeffs()[m]);
  }
  return TrigPoly::from_terms(std::move(f), std::move(c), a.real_valued());
}

struct Antiderivative {
  Complex linear_coeff;  // the mean of a: integral grows like linear_coeff * t
  TrigPoly oscillatory;  // bounded part; int_0^t a = linear_coeff t + osc(t) - osc(0)
};

inline Antiderivative antiderivative(const TrigPoly& a) {
  Antiderivative r;
  r.linear_coeff = a.mean();
  std::vector<double> f;
  std::vector<Complex> c;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a.freqs()[m] == 0.0) continue;
    f.push_back(a.freqs()[m]);
    c.push_back(a.coeffs()[m] / Complex{0, a.freqs()[m]});
  }
  r.oscillatory = TrigPoly::from_terms(std::move(f), std::move(c), a.real_valued());
  return r;
}

/// Certified sup-norm upper bound: sum of coefficient magnitudes.
inline double sup_norm_upper(const TrigPoly& a) {
  double s = 0.0;
  for (const Complex& c : a.coeffs()) s += std::abs(c);
  return s;
}

/// Diagnostic lower estimate: max |a(t)| over an equispaced sample of
/// [-window, window].
inline double sup_norm_lower(const TrigPoly& a, double window, int samples) {
  if (a.empty() || samples < 1) return 0.0;
  double best = 0.0;
  const double h = samples > 1 ? 2.0 * window / (samples - 1) : 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = -window + h * k;
    Complex v{0, 0};
    for (std::size_t m = 0; m < a.size(); ++m)
      v += a.coeffs()[m] * std::polar(1.0, a.freqs()[m] * t);
    best = std::max(best, std::abs(v));
  }
  return best;
}

/// Sum over i = 0..n-2 of certified sup bounds of a^{(i)}; the norm the
/// contraction ball lives in.
inline double tuple_norm_upper(const TrigPoly& a, int n) {
  double s = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double nu = std::abs(a.freqs()[m]);
    double w = 0.0;
    for (int i = 0; i <= n - 2; ++i) w += rpow0(nu, i);
    s += std::abs(a.coeffs()[m]) * w;
  }
  return s;
}

/// Max coefficient difference over the union of frequency sets.
inline double coeff_distance(const TrigPoly& a, const TrigPoly& b) {
  double best = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m)
    best = std::max(best, std::abs(a.coeffs()[m] - b.coeff_at(a.freqs()[m])));
  for (std::size_t m = 0; m < b.size(); ++m)
    best = std::max(best, std::abs(b.coeffs()[m] - a.coeff_at(b.freqs()[m])));
  return best;
}

}  // namespace perron_ap
