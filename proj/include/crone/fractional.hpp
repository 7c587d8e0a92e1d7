#pragma once

// Band-limited fractional powers of a lead factor and a factored transfer type
// that keeps such powers symbolic until a realization is requested.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "crone/lti.hpp"

namespace crone {

// ((1 + s/wb) / (1 + s/wh))^order, order any real number.
template <typename Scalar>
struct FractionalFactor {
  Scalar order = 0;
  Scalar wb = 1;
  Scalar wh = 10;
};

template <typename Scalar>
std::complex<Scalar> lead_response(Scalar omega, Scalar wb, Scalar wh) {
  return std::complex<Scalar>(1, omega / wb) / std::complex<Scalar>(1, omega / wh);
}

template <typename Scalar>
Scalar lead_phase(Scalar omega, Scalar wb, Scalar wh) {
  return std::atan(omega / wb) - std::atan(omega / wh);
}

// Polynomial units for the recursive approximation. The integer part of the
// order is kept as exact lead powers; the fractional remainder in (0,1) is
// distributed over N zero/pole pairs.
template <typename Scalar>
struct BandApproximation {
  Scalar gain = 1;
  std::vector<VectorX<Scalar>> numerators;
  std::vector<VectorX<Scalar>> denominators;
};

namespace detail {
template <typename Scalar>
VectorX<Scalar> corner_unit(Scalar corner) {
  return (VectorX<Scalar>(2) << Scalar(1) / corner, Scalar(1)).finished();
}
}  // namespace detail

template <typename Scalar>
BandApproximation<Scalar> fractional_band_units(Scalar order, Scalar wb, Scalar wh, int N) {
  if (!(wb > 0) || !(wh > wb)) throw ParameterError("fractional band needs 0 < wb < wh");
  if (N < 1) throw ParameterError("approximation order N must be >= 1");
  if (!std::isfinite(order)) throw ParameterError("fractional order must be finite");
  BandApproximation<Scalar> out;
  const Scalar whole = std::floor(order);
  const Scalar frac = order - whole;
  const auto k = static_cast<long>(whole);
  for (long i = 0; i < std::abs(k); ++i) {
    auto& up = k > 0 ? out.numerators : out.denominators;
    auto& down = k > 0 ? out.denominators : out.numerators;
    up.push_back(detail::corner_unit(wb));
    down.push_back(detail::corner_unit(wh));
  }
  if (frac > 0) {
    const Scalar ratio = wh / wb;
    const Scalar alpha = std::pow(ratio, frac / N);
    const Scalar eta = std::pow(ratio, (1 - frac) / N);
    Scalar zero = wb * std::sqrt(eta);
    std::complex<Scalar> approx(1);
    const Scalar wm = std::sqrt(wb * wh);
    for (int i = 0; i < N; ++i) {
      const Scalar pole = zero * alpha;
      out.numerators.push_back(detail::corner_unit(zero));
      out.denominators.push_back(detail::corner_unit(pole));
      approx *= std::complex<Scalar>(1, wm / zero) / std::complex<Scalar>(1, wm / pole);
      zero = pole * eta;
    }
    out.gain = std::pow(std::abs(lead_response(wm, wb, wh)), frac) / std::abs(approx);
  }
  return out;
}

template <typename Scalar>
RationalTransfer<Scalar> fractional_band_approx(Scalar order, Scalar wb, Scalar wh, int N) {
  const auto units = fractional_band_units(order, wb, wh, N);
  VectorX<Scalar> num = VectorX<Scalar>::Constant(1, units.gain);
  VectorX<Scalar> den = VectorX<Scalar>::Ones(1);
  for (const auto& u : units.numerators) num = poly_multiply(num, u);
  for (const auto& u : units.denominators) den = poly_multiply(den, u);
  return RationalTransfer<Scalar>(num, den);
}

// Product of a gain, low-degree polynomial units, fractional lead powers and a
// delay. Units are stored separately so that high-order products never have to
// be expanded into a single ill-conditioned polynomial.
template <typename Scalar>
class FactoredTransfer {
 public:
  using Complex = std::complex<Scalar>;

  FactoredTransfer() = default;
  explicit FactoredTransfer(Scalar gain) : gain_(gain) {}

  Scalar gain() const { return gain_; }
  Scalar delay() const { return delay_; }
  const std::vector<VectorX<Scalar>>& numerators() const { return num_; }
  const std::vector<VectorX<Scalar>>& denominators() const { return den_; }
  const std::vector<FractionalFactor<Scalar>>& fractional() const { return frac_; }

  FactoredTransfer& scale(Scalar k) {
    gain_ *= k;
    return *this;
  }

  FactoredTransfer& multiply_unit(const VectorX<Scalar>& u, int power = 1) {
    for (int i = 0; i < std::abs(power); ++i) (power > 0 ? num_ : den_).push_back(poly_trim(u));
    return *this;
  }

  FactoredTransfer& divide_unit(const VectorX<Scalar>& u, int power = 1) { return multiply_unit(u, -power); }

  FactoredTransfer& multiply_fractional(Scalar order, Scalar wb, Scalar wh) {
    if (!(wb > 0) || !(wh > wb)) throw ParameterError("fractional band needs 0 < wb < wh");
    if (order != Scalar(0)) frac_.push_back({order, wb, wh});
    return *this;
  }

  // Splits an arbitrary rational factor into first/second order units.
  FactoredTransfer& multiply(const RationalTransfer<Scalar>& tf) {
    if (tf.is_zero()) throw ParameterError("cannot factor a zero transfer");
    gain_ *= tf.num()[0] / tf.den()[0];
    for (const auto& u : root_units(zeros(tf))) num_.push_back(u);
    for (const auto& u : root_units(poles(tf))) den_.push_back(u);
    delay_ += tf.delay();
    return *this;
  }

  FactoredTransfer& multiply(const FactoredTransfer& other) {
    gain_ *= other.gain_;
    num_.insert(num_.end(), other.num_.begin(), other.num_.end());
    den_.insert(den_.end(), other.den_.begin(), other.den_.end());
    frac_.insert(frac_.end(), other.frac_.begin(), other.frac_.end());
    delay_ += other.delay_;
    return *this;
  }

  FactoredTransfer inverse() const {
    if (delay_ != Scalar(0)) throw ParameterError("cannot invert a factored transfer with delay");
    if (gain_ == Scalar(0)) throw ParameterError("cannot invert a zero transfer");
    FactoredTransfer out(Scalar(1) / gain_);
    out.num_ = den_;
    out.den_ = num_;
    for (auto f : frac_) {
      f.order = -f.order;
      out.frac_.push_back(f);
    }
    return out;
  }

  FactoredTransfer& add_delay(Scalar tau) {
    if (!(tau >= 0)) throw ParameterError("delay must be >= 0");
    delay_ += tau;
    return *this;
  }

  // Response with fractional powers evaluated exactly.
  Complex exact(Scalar omega) const {
    Complex value = rational_at(omega);
    for (const auto& f : frac_) value *= std::pow(lead_response(omega, f.wb, f.wh), f.order);
    return value;
  }

  // Phase that stays continuous over omega > 0.
  Scalar exact_phase(Scalar omega) const {
    Scalar phase = rational_phase(omega);
    for (const auto& f : frac_) phase += f.order * lead_phase(omega, f.wb, f.wh);
    return phase;
  }

  // Fractional powers replaced by the N-pair recursive approximation.
  FactoredTransfer approximated(int N) const {
    FactoredTransfer out(gain_);
    out.num_ = num_;
    out.den_ = den_;
    out.delay_ = delay_;
    for (const auto& f : frac_) {
      const auto units = fractional_band_units(f.order, f.wb, f.wh, N);
      out.gain_ *= units.gain;
      out.num_.insert(out.num_.end(), units.numerators.begin(), units.numerators.end());
      out.den_.insert(out.den_.end(), units.denominators.begin(), units.denominators.end());
    }
    return out;
  }

  Complex approximated_at(Scalar omega, int N) const { return approximated(N).exact(omega); }

  Eigen::Index relative_degree() const {
    Eigen::Index deg = 0;
    for (const auto& u : den_) deg += u.size() - 1;
    for (const auto& u : num_) deg -= u.size() - 1;
    return deg;
  }

  // Expanded single polynomial ratio (fractional factors approximated).
  RationalTransfer<Scalar> collapse(int N) const {
    const auto a = approximated(N);
    VectorX<Scalar> num = VectorX<Scalar>::Constant(1, a.gain_);
    VectorX<Scalar> den = VectorX<Scalar>::Ones(1);
    for (const auto& u : a.num_) num = poly_multiply(num, u);
    for (const auto& u : a.den_) den = poly_multiply(den, u);
    return RationalTransfer<Scalar>(num, den, a.delay_);
  }

  // Cascade of proper sections of order <= 2, plus Padé states for the delay.
  StateSpace<Scalar> realize(int N, int delay_order = 1) const {
    const auto a = approximated(N);
    if (a.relative_degree() < 0) throw RealizationError("cannot realize an improper transfer");
    auto ss = realize_sections(proper_sections(a.num_, a.den_, a.gain_));
    if (a.delay_ > 0) ss = series(ss, crone::realize(RationalTransfer<Scalar>(VectorX<Scalar>::Ones(1),
                                                                               VectorX<Scalar>::Ones(1), a.delay_),
                                                      delay_order));
    return balance(ss);
  }

 private:
  Complex rational_at(Scalar omega) const {
    const Complex s(0, omega);
    Complex value(gain_);
    for (const auto& u : num_) value *= poly_evaluate(u, s);
    for (const auto& u : den_) {
      const Complex d = poly_evaluate(u, s);
      if (d == Complex(0)) throw EvaluationError("factored transfer has a pole on the axis", omega);
      value /= d;
    }
    if (delay_ != Scalar(0)) value *= std::exp(-s * delay_);
    return value;
  }

  static Scalar unit_phase(const VectorX<Scalar>& u, Scalar omega) {
    const Complex v = poly_evaluate(u, Complex(0, omega));
    if (u.size() == 1) return u[0] < 0 ? std::numbers::pi_v<Scalar> : Scalar(0);
    return std::atan2(v.imag(), v.real());
  }

  Scalar rational_phase(Scalar omega) const {
    Scalar phase = gain_ < 0 ? std::numbers::pi_v<Scalar> : Scalar(0);
    for (const auto& u : num_) phase += unit_phase(u, omega);
    for (const auto& u : den_) phase -= unit_phase(u, omega);
    return phase - omega * delay_;
  }

  Scalar gain_ = 1;
  std::vector<VectorX<Scalar>> num_;
  std::vector<VectorX<Scalar>> den_;
  std::vector<FractionalFactor<Scalar>> frac_;
  Scalar delay_ = 0;
};

using FactoredTransferd = FactoredTransfer<double>;

}  // namespace crone
