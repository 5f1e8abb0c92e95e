#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "perron_ap/errors.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/util.hpp"

namespace perron_ap {

enum class TailKind { Zero, ExpBound, PowerBound };

/// Global decay envelope asserted for a grid function outside (and inside)
/// its sampling window:
///   Zero:       |f(t)| = 0
///   ExpBound:   |f(t)| <= C e^{-q|t|}
///   PowerBound: |f(t)| <= C / (1 + |t|^q)
struct TailModel {
  TailKind kind = TailKind::Zero;
  double C = 0.0;
  double q = 1.0;

  double value(double t) const {
    switch (kind) {
      case TailKind::Zero:
        return 0.0;
      case TailKind::ExpBound:
        return C * std::exp(-q * std::abs(t));
      case TailKind::PowerBound:
        return C / (1.0 + std::pow(std::abs(t), q));
    }
    return 0.0;
  }

  static TailModel zero() { return TailModel{}; }
  static TailModel exp_bound(double C, double q) { return TailModel{TailKind::ExpBound, C, q}; }
  static TailModel power_bound(double C, double q) {
    return TailModel{TailKind::PowerBound, C, q};
  }
};

namespace detail {

// max over x >= 0 of e^{-a x} (1 + x^q), for folding an exp factor into a
// power envelope; finite for a > 0.
inline double exp_power_fold(double a, double q) {
  if (a <= 0.0) throw TailUnbounded("nonpositive rate in tail fold");
  double best = 1.0;
  // maximizer satisfies q x^{q-1} = a (1 + x^q); scan log-spaced candidates
  for (double x = 1e-6; x < 4000.0 / a + 10.0; x *= 1.25)
    best = std::max(best, std::exp(-a * x) * (1.0 + std::pow(x, q)));
  return 1.05 * best;
}

}  // namespace detail

/// Envelope of a sum: valid pointwise bound for |f + g|.
inline TailModel tail_sum(const TailModel& a, const TailModel& b) {
  if (a.kind == TailKind::Zero) return b;
  if (b.kind == TailKind::Zero) return a;
  if (a.kind == b.kind) {
    if (a.kind == TailKind::ExpBound)
      return TailModel::exp_bound(a.C + b.C, std::min(a.q, b.q));
    return TailModel::power_bound(a.C + b.C, std::min(a.q, b.q));
  }
  // mixed exp + power: dominate the exp part by a power of the same order
  const TailModel& e = a.kind == TailKind::ExpBound ? a : b;
  const TailModel& p = a.kind == TailKind::ExpBound ? b : a;
  const double fold = detail::exp_power_fold(e.q, p.q);
  return TailModel::power_bound(e.C * fold + p.C, p.q);
}

/// Envelope of a product: |f g| <= tail_f tail_g.
inline TailModel tail_product(const TailModel& a, const TailModel& b) {
  if (a.kind == TailKind::Zero || b.kind == TailKind::Zero) return TailModel::zero();
  if (a.kind == TailKind::ExpBound && b.kind == TailKind::ExpBound)
    return TailModel::exp_bound(a.C * b.C, a.q + b.q);
  if (a.kind == TailKind::PowerBound && b.kind == TailKind::PowerBound)
    // (1+|t|^qa)(1+|t|^qb) >= 1+|t|^{qa+qb}
    return TailModel::power_bound(a.C * b.C, a.q + b.q);
  // exp * power decays at least as fast as the power part alone
  const TailModel& e = a.kind == TailKind::ExpBound ? a : b;
  const TailModel& p = a.kind == TailKind::ExpBound ? b : a;
  return TailModel::power_bound(e.C * p.C, p.q);
}

inline TailModel tail_scale(const TailModel& a, double s) {
  TailModel t = a;
  t.C *= std::abs(s);
  return t;
}

/// Sampled function on an equispaced window with a decay envelope.
/// eval() interpolates linearly inside the window; outside it returns the
/// envelope value carrying the phase of the nearest edge sample.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(double t0, double h, std::vector<Complex> samples, TailModel tail,
               bool check_tail = true)
      : t0_(t0), h_(h), samples_(std::move(samples)), tail_(tail) {
    if (samples_.size() < 2) throw GridMismatch("grid needs at least 2 samples");
    if (!(h_ > 0.0)) throw GridMismatch("grid step must be positive");
    if (check_tail) validate_tail();
  }

  /// Build from a callable sampled on [t0, t0 + h*(count-1)].
  template <typename F>
  static GridFunction sample(F&& f, double t0, double h, std::size_t count, TailModel tail,
                             bool check_tail = true) {
    std::vector<Complex> s(count);
    for (std::size_t k = 0; k < count; ++k) s[k] = f(t0 + h * static_cast<double>(k));
    return GridFunction(t0, h, std::move(s), tail, check_tail);
  }

  double t0() const { return t0_; }
  double h() const { return h_; }
  double t_end() const { return t0_ + h_ * static_cast<double>(samples_.size() - 1); }
  std::size_t size() const { return samples_.size(); }
  const std::vector<Complex>& samples() const { return samples_; }
  std::vector<Complex>& samples() { return samples_; }
  const TailModel& tail() const { return tail_; }
  void set_tail(const TailModel& t, bool check = true) {
    tail_ = t;
    if (check) validate_tail();
  }
  double grid_point(std::size_t k) const { return t0_ + h_ * static_cast<double>(k); }

  bool same_shape(const GridFunction& o) const {
    return samples_.size() == o.samples_.size() && std::abs(t0_ - o.t0_) <= 1e-12 * (1 + std::abs(t0_)) &&
           std::abs(h_ - o.h_) <= 1e-12 * h_;
  }

  Complex eval(double t) const {
    if (t < t0_ || t > t_end()) {
      const Complex edge = t < t0_ ? samples_.front() : samples_.back();
      const double mag = std::abs(edge);
      const Complex phase = mag > 0 ? edge / mag : Complex{0, 0};
      return phase * tail_.value(t);
    }
    const double x = (t - t0_) / h_;
    std::size_t k = static_cast<std::size_t>(x);
    if (k >= samples_.size() - 1) k = samples_.size() - 2;
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * samples_[k] + w * samples_[k + 1];
  }

  /// Certified sup bound of the model: max sample magnitude (the envelope is
  /// dominated by the edge samples at the window boundary by construction).
  double sup_norm() const {
    double best = std::max(tail_.value(t0_), tail_.value(t_end()));
    for (const Complex& s : samples_) best = std::max(best, std::abs(s));
    return best;
  }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    a.require_same_shape(b);
    GridFunction r = a;
    for (std::size_t k = 0; k < r.samples_.size(); ++k) r.samples_[k] += b.samples_[k];
    r.tail_ = tail_sum(a.tail_, b.tail_);
    return r;
  }

  friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    a.require_same_shape(b);
    GridFunction r = a;
    for (std::size_t k = 0; k < r.samples_.size(); ++k) r.samples_[k] -= b.samples_[k];
    r.tail_ = tail_sum(a.tail_, b.tail_);
    return r;
  }

  friend GridFunction operator*(const GridFunction& a, const GridFunction& b) {
    a.require_same_shape(b);
    GridFunction r = a;
    for (std::size_t k = 0; k < r.samples_.size(); ++k) r.samples_[k] *= b.samples_[k];
    r.tail_ = tail_product(a.tail_, b.tail_);
    return r;
  }

  friend GridFunction operator*(Complex s, const GridFunction& a) {
    GridFunction r = a;
    for (auto& v : r.samples_) v *= s;
    r.tail_ = tail_scale(a.tail_, std::abs(s));
    return r;
  }

  void require_same_shape(const GridFunction& o) const {
    if (!same_shape(o))
      throw GridMismatch("grid shapes differ: t0 " + std::to_string(t0_) + "/" +
                         std::to_string(o.t0_) + ", h " + std::to_string(h_) + "/" +
                         std::to_string(o.h_) + ", n " + std::to_string(samples_.size()) + "/" +
                         std::to_string(o.samples_.size()));
  }

 private:
  void validate_tail() const {
    const double slack = 1.1;
    const double lo = tail_.value(t0_), hi = tail_.value(t_end());
    if (std::abs(samples_.front()) > slack * lo + 1e-300 ||
        std::abs(samples_.back()) > slack * hi + 1e-300)
      throw TailUnbounded("tail model does not dominate the window boundary samples");
  }

  double t0_ = 0.0;
  double h_ = 1.0;
  std::vector<Complex> samples_;
  TailModel tail_;
};

/// Fourth-order finite-difference derivative (centered inside, one-sided at
/// the edges). The output tail is a model assertion scaled from the input.
inline GridFunction gf_derivative(const GridFunction& f) {
  const auto& s = f.samples();
  const std::size_t n = s.size();
  if (n < 5) throw GridMismatch("derivative stencil needs at least 5 samples");
  std::vector<Complex> d(n);
  const double ih = 1.0 / (12.0 * f.h());
  d[0] = (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) * ih;
  d[1] = (-3.0 * s[0] - 10.0 * s[1] + 18.0 * s[2] - 6.0 * s[3] + s[4]) * ih;
  for (std::size_t k = 2; k + 2 < n; ++k)
    d[k] = (s[k - 2] - 8.0 * s[k - 1] + 8.0 * s[k + 1] - s[k + 2]) * ih;
  d[n - 2] = (3.0 * s[n - 1] + 10.0 * s[n - 2] - 18.0 * s[n - 3] + 6.0 * s[n - 4] - s[n - 5]) * ih;
  d[n - 1] = (25.0 * s[n - 1] - 48.0 * s[n - 2] + 36.0 * s[n - 3] - 16.0 * s[n - 4] + 3.0 * s[n - 5]) * ih;

  // model assertion: same decay shape, constant grown to cover the edge
  // derivative samples with headroom
  TailModel t = f.tail();
  if (t.kind != TailKind::Zero && t.C > 0.0) {
    const double shape_lo = t.value(f.t0()) / t.C;   // decay shape at the edges
    const double shape_hi = t.value(f.t_end()) / t.C;
    double need = t.C * std::max(t.q, 1.0);
    if (shape_lo > 0.0) need = std::max(need, 1.1 * std::abs(d.front()) / shape_lo);
    if (shape_hi > 0.0) need = std::max(need, 1.1 * std::abs(d.back()) / shape_hi);
    t.C = need;
  }
  return GridFunction(f.t0(), f.h(), std::move(d), t, false);
}

/// Largest sample magnitude, ignoring the tail model.
inline double sample_sup(const GridFunction& f) {
  double best = 0.0;
  for (const Complex& s : f.samples()) best = std::max(best, std::abs(s));
  return best;
}

/// Linear-interpolation resample onto a new shape; outside the source window
/// the envelope-with-edge-phase extension is used.
inline GridFunction resample(const GridFunction& f, double t0, double h, std::size_t count) {
  std::vector<Complex> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = f.eval(t0 + h * static_cast<double>(k));
  return GridFunction(t0, h, std::move(s), f.tail(), false);
}

/// Samples of a trig poly on a grid shape.
inline std::vector<Complex> sample_trig(const TrigPoly& p, double t0, double h,
                                        std::size_t count) {
  std::vector<Complex> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = p.eval(t0 + h * static_cast<double>(k));
  return s;
}

/// Pointwise product with a bounded factor given by samples and a certified
/// sup bound; the decaying operand keeps its envelope scaled by that bound.
inline GridFunction scale_by_bounded(const GridFunction& f, const std::vector<Complex>& factor,
                                     double factor_bound) {
  if (factor.size() != f.size()) throw GridMismatch("bounded factor sample count differs");
  GridFunction r = f;
  for (std::size_t k = 0; k < r.size(); ++k) r.samples()[k] *= factor[k];
  r.set_tail(tail_scale(f.tail(), factor_bound), false);
  return r;
}

}  // namespace perron_ap
