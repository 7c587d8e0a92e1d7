#pragma once

// Linear time-invariant substrate: rational transfer functions, state-space
// models, frequency grids and responses. Everything here is templated on the
// real scalar type and works on plain Eigen dense objects.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <type_traits>
#include <vector>

#include "crone/errors.hpp"

namespace crone {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Polynomials, coefficients in descending powers of s.

template <typename Scalar>
VectorX<Scalar> poly_trim(const VectorX<Scalar>& c) {
  Eigen::Index first = 0;
  while (first + 1 < c.size() && c[first] == Scalar(0)) ++first;
  if (c.size() == 0) return VectorX<Scalar>::Zero(1);
  return c.tail(c.size() - first);
}

template <typename Scalar>
Eigen::Index poly_degree(const VectorX<Scalar>& c) {
  return poly_trim(c).size() - 1;
}

template <typename Scalar>
VectorX<Scalar> poly_multiply(const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
  VectorX<Scalar> out = VectorX<Scalar>::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i, b.size()) += a[i] * b;
  return out;
}

template <typename Scalar, typename Point>
Point poly_evaluate(const VectorX<Scalar>& c, const Point& s) {
  Point acc(0);
  for (Eigen::Index i = 0; i < c.size(); ++i) acc = acc * s + Point(c[i]);
  return acc;
}

// Roots through the eigenvalues of the companion matrix. Zero roots are
// deflated first and the remaining polynomial is frequency-scaled so that the
// companion entries are O(1).
template <typename Scalar>
std::vector<std::complex<Scalar>> poly_roots(const VectorX<Scalar>& coeffs) {
  using Complex = std::complex<Scalar>;
  VectorX<Scalar> c = poly_trim(coeffs);
  std::vector<Complex> roots;
  Eigen::Index n = c.size() - 1;
  while (n > 0 && c[n] == Scalar(0)) {
    roots.emplace_back(0);
    --n;
  }
  c.conservativeResize(n + 1);
  if (n == 0) return roots;
  if (n == 1) {
    roots.emplace_back(-c[1] / c[0]);
    return roots;
  }
  if (n == 2) {
    const Scalar a = c[0], b = c[1], cc = c[2];
    const Scalar disc = b * b - 4 * a * cc;
    if (disc >= 0) {
      const Scalar q = -(b + std::copysign(std::sqrt(disc), b)) / 2;
      roots.emplace_back(q / a);
      roots.emplace_back(cc / q);
    } else {
      const Scalar re = -b / (2 * a);
      const Scalar im = std::sqrt(-disc) / (2 * std::abs(a));
      roots.emplace_back(re, im);
      roots.emplace_back(re, -im);
    }
    return roots;
  }
  const Scalar scale = std::pow(std::abs(c[n] / c[0]), Scalar(1) / Scalar(n));
  MatrixX<Scalar> companion = MatrixX<Scalar>::Zero(n, n);
  Scalar power = 1;
  for (Eigen::Index k = 1; k <= n; ++k) {
    power *= scale;
    companion(0, k - 1) = -c[k] / (c[0] * power);
  }
  companion.diagonal(-1).setOnes();
  Eigen::EigenSolver<MatrixX<Scalar>> solver(companion, false);
  // Eigenvalues are only backward stable for the companion matrix; a few Newton
  // steps on the original coefficients recover the lost digits.
  VectorX<Scalar> dc(n);
  for (Eigen::Index k = 0; k < n; ++k) dc[k] = c[k] * Scalar(n - k);
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex z = solver.eigenvalues()[k] * scale;
    Scalar residual = std::abs(poly_evaluate(c, z));
    for (int it = 0; it < 8 && residual > Scalar(0); ++it) {
      const Complex slope = poly_evaluate(dc, z);
      if (slope == Complex(0)) break;
      const Complex next = z - poly_evaluate(c, z) / slope;
      const Scalar r = std::abs(poly_evaluate(c, next));
      if (!(r < residual)) break;
      z = next;
      residual = r;
    }
    roots.push_back(z);
  }
  return roots;
}

template <typename Scalar>
VectorX<Scalar> poly_from_roots(const std::vector<std::complex<Scalar>>& roots) {
  VectorX<std::complex<Scalar>> acc = VectorX<std::complex<Scalar>>::Ones(1);
  for (const auto& r : roots) {
    VectorX<std::complex<Scalar>> next = VectorX<std::complex<Scalar>>::Zero(acc.size() + 1);
    next.head(acc.size()) += acc;
    next.tail(acc.size()) -= acc * r;
    acc = next;
  }
  return acc.real();
}

// ---------------------------------------------------------------------------

template <typename Scalar>
class RationalTransfer {
 public:
  RationalTransfer() : num_(VectorX<Scalar>::Ones(1)), den_(VectorX<Scalar>::Ones(1)) {}

  RationalTransfer(VectorX<Scalar> num, VectorX<Scalar> den, Scalar delay = Scalar(0))
      : num_(poly_trim(num)), den_(poly_trim(den)), delay_(delay) {
    if (den.size() == 0 || den_[0] == Scalar(0))
      throw ParameterError("transfer denominator must have a nonzero leading coefficient");
    if (num.size() == 0) throw ParameterError("transfer numerator is empty");
    if (!(delay_ >= Scalar(0)) || !std::isfinite(delay_)) throw ParameterError("delay must be finite and >= 0");
    if (!num_.allFinite() || !den_.allFinite()) throw ParameterError("transfer coefficients must be finite");
  }

  static RationalTransfer gain(Scalar k) {
    return RationalTransfer(VectorX<Scalar>::Constant(1, k), VectorX<Scalar>::Ones(1));
  }

  const VectorX<Scalar>& num() const { return num_; }
  const VectorX<Scalar>& den() const { return den_; }
  Scalar delay() const { return delay_; }

  Eigen::Index num_degree() const { return num_.size() - 1; }
  Eigen::Index den_degree() const { return den_.size() - 1; }
  bool is_proper() const { return num_degree() <= den_degree(); }
  bool is_zero() const { return num_.size() == 1 && num_[0] == Scalar(0); }

  RationalTransfer without_delay() const { return RationalTransfer(num_, den_); }

  RationalTransfer inverse() const {
    if (is_zero()) throw ParameterError("cannot invert a zero transfer");
    if (delay_ != Scalar(0)) throw ParameterError("cannot invert a transfer with delay");
    return RationalTransfer(den_, num_);
  }

 private:
  VectorX<Scalar> num_;
  VectorX<Scalar> den_;
  Scalar delay_ = 0;
};

template <typename Scalar>
class StateSpace {
 public:
  StateSpace() : StateSpace(MatrixX<Scalar>(0, 0), MatrixX<Scalar>(0, 1), MatrixX<Scalar>(1, 0),
                            MatrixX<Scalar>::Ones(1, 1)) {}

  StateSpace(MatrixX<Scalar> A, MatrixX<Scalar> B, MatrixX<Scalar> C, MatrixX<Scalar> D)
      : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
    const auto n = A_.rows();
    if (A_.cols() != n || B_.rows() != n || C_.cols() != n || D_.rows() != C_.rows() || D_.cols() != B_.cols())
      throw ParameterError("state-space dimensions are inconsistent");
    if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite() || !D_.allFinite())
      throw ParameterError("state-space entries must be finite");
  }

  static StateSpace gain(Scalar k) {
    return StateSpace(MatrixX<Scalar>(0, 0), MatrixX<Scalar>(0, 1), MatrixX<Scalar>(1, 0),
                      MatrixX<Scalar>::Constant(1, 1, k));
  }

  const MatrixX<Scalar>& A() const { return A_; }
  const MatrixX<Scalar>& B() const { return B_; }
  const MatrixX<Scalar>& C() const { return C_; }
  const MatrixX<Scalar>& D() const { return D_; }

  Eigen::Index states() const { return A_.rows(); }
  Eigen::Index inputs() const { return B_.cols(); }
  Eigen::Index outputs() const { return C_.rows(); }
  bool is_siso() const { return inputs() == 1 && outputs() == 1; }

 private:
  MatrixX<Scalar> A_, B_, C_, D_;
};

template <typename Scalar>
class FrequencyGrid {
 public:
  FrequencyGrid() = default;

  explicit FrequencyGrid(std::vector<Scalar> omega) : omega_(std::move(omega)) {
    for (std::size_t k = 0; k < omega_.size(); ++k) {
      if (!(omega_[k] > Scalar(0)) || !std::isfinite(omega_[k]))
        throw ParameterError("frequency grid points must be positive and finite");
      if (k > 0 && !(omega_[k] > omega_[k - 1]))
        throw ParameterError("frequency grid must be strictly increasing");
    }
  }

  // Logarithmic grid from lo to hi (rad/s, inclusive) with the given density.
  static FrequencyGrid logspace(Scalar lo, Scalar hi, Scalar points_per_decade) {
    if (!(lo > 0) || !(hi > lo) || !(points_per_decade > 0))
      throw ParameterError("logspace needs 0 < lo < hi and a positive density");
    const Scalar decades = std::log10(hi / lo);
    const auto intervals = std::max<long>(1, std::lround(decades * points_per_decade));
    std::vector<Scalar> w(static_cast<std::size_t>(intervals) + 1);
    for (long k = 0; k <= intervals; ++k)
      w[static_cast<std::size_t>(k)] = lo * std::pow(Scalar(10), decades * Scalar(k) / Scalar(intervals));
    w.back() = hi;
    return FrequencyGrid(std::move(w));
  }

  static FrequencyGrid log_count(Scalar lo, Scalar hi, std::size_t count) {
    if (count < 2) return FrequencyGrid({lo});
    const Scalar decades = std::log10(hi / lo);
    std::vector<Scalar> w(count);
    for (std::size_t k = 0; k < count; ++k)
      w[k] = lo * std::pow(Scalar(10), decades * Scalar(k) / Scalar(count - 1));
    w.back() = hi;
    return FrequencyGrid(std::move(w));
  }

  const std::vector<Scalar>& points() const { return omega_; }
  std::size_t size() const { return omega_.size(); }
  Scalar operator[](std::size_t k) const { return omega_[k]; }
  auto begin() const { return omega_.begin(); }
  auto end() const { return omega_.end(); }

 private:
  std::vector<Scalar> omega_;
};

template <typename Scalar>
struct ComplexResponse {
  FrequencyGrid<Scalar> grid;
  std::vector<std::complex<Scalar>> values;

  ComplexResponse() = default;
  ComplexResponse(FrequencyGrid<Scalar> g, std::vector<std::complex<Scalar>> v)
      : grid(std::move(g)), values(std::move(v)) {
    if (grid.size() != values.size()) throw ParameterError("response needs exactly one value per grid point");
  }
};

using RationalTransferd = RationalTransfer<double>;
using StateSpaced = StateSpace<double>;
using FrequencyGridd = FrequencyGrid<double>;
using ComplexResponsed = ComplexResponse<double>;

// ---------------------------------------------------------------------------
// Evaluation

template <typename Scalar>
std::complex<Scalar> evaluate(const RationalTransfer<Scalar>& tf, std::complex<Scalar> s) {
  const auto den = poly_evaluate(tf.den(), s);
  if (den == std::complex<Scalar>(0)) throw EvaluationError("transfer has a pole on the evaluation point", std::abs(s));
  auto value = poly_evaluate(tf.num(), s) / den;
  if (tf.delay() != Scalar(0)) value *= std::exp(-s * tf.delay());
  return value;
}

template <typename Scalar>
std::complex<Scalar> evaluate_at(const RationalTransfer<Scalar>& tf, Scalar omega) {
  return evaluate(tf, std::complex<Scalar>(0, omega));
}

template <typename Scalar>
MatrixX<std::complex<Scalar>> evaluate(const StateSpace<Scalar>& ss, std::complex<Scalar> s) {
  using Complex = std::complex<Scalar>;
  if (ss.states() == 0) return ss.D().template cast<Complex>();
  // Cascaded biproper sections cancel D against C x where the gain is small,
  // so the solve runs one precision step up from double.
  using Wide = std::conditional_t<std::is_same_v<Scalar, double>, long double, Scalar>;
  using WideComplex = std::complex<Wide>;
  MatrixX<WideComplex> resolvent = -ss.A().template cast<Wide>().template cast<WideComplex>();
  resolvent.diagonal().array() += WideComplex(s);
  Eigen::PartialPivLU<MatrixX<WideComplex>> lu(resolvent);
  if (!(lu.rcond() > Wide(64) * std::numeric_limits<Wide>::epsilon()))
    throw EvaluationError("resolvent (sI - A) is singular", std::abs(s));
  MatrixX<WideComplex> wide = ss.D().template cast<Wide>().template cast<WideComplex>();
  wide.noalias() += ss.C().template cast<Wide>().template cast<WideComplex>() *
                    lu.solve(ss.B().template cast<Wide>().template cast<WideComplex>());
  return wide.template cast<Complex>();
}

template <typename Scalar>
std::complex<Scalar> evaluate_at(const StateSpace<Scalar>& ss, Scalar omega) {
  if (!ss.is_siso()) throw ParameterError("scalar evaluation needs a SISO model");
  return evaluate(ss, std::complex<Scalar>(0, omega))(0, 0);
}

template <typename Model>
auto eval_response(const Model& model, const FrequencyGrid<double>& grid) {
  std::vector<std::complex<double>> values;
  values.reserve(grid.size());
  for (double w : grid) values.push_back(evaluate_at(model, w));
  return ComplexResponse<double>(grid, std::move(values));
}

// ---------------------------------------------------------------------------
// Composition: `first` feeds `second`.

template <typename Scalar>
RationalTransfer<Scalar> series(const RationalTransfer<Scalar>& first, const RationalTransfer<Scalar>& second) {
  return RationalTransfer<Scalar>(poly_multiply(first.num(), second.num()), poly_multiply(first.den(), second.den()),
                                  first.delay() + second.delay());
}

template <typename Scalar>
StateSpace<Scalar> series(const StateSpace<Scalar>& first, const StateSpace<Scalar>& second) {
  if (second.inputs() != first.outputs()) throw ParameterError("series connection: dimension mismatch");
  const auto n1 = first.states(), n2 = second.states();
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = first.A();
  A.bottomLeftCorner(n2, n1) = second.B() * first.C();
  A.bottomRightCorner(n2, n2) = second.A();
  MatrixX<Scalar> B(n1 + n2, first.inputs());
  B.topRows(n1) = first.B();
  B.bottomRows(n2) = second.B() * first.D();
  MatrixX<Scalar> C(second.outputs(), n1 + n2);
  C.leftCols(n1) = second.D() * first.C();
  C.rightCols(n2) = second.C();
  MatrixX<Scalar> D = second.D() * first.D();
  return StateSpace<Scalar>(std::move(A), std::move(B), std::move(C), std::move(D));
}

// Diagonal similarity T chosen by power-of-two Osborne sweeps over
// [[A, B], [C, 0]], keeping the input and output channels fixed. Returns the
// scaling d with A' = T^-1 A T, B' = T^-1 B, C' = C T and T = diag(d).
template <typename Scalar>
VectorX<Scalar> balancing_scales(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& C) {
  const auto n = A.rows();
  VectorX<Scalar> d = VectorX<Scalar>::Ones(n);
  MatrixX<Scalar> a = A, b = B, c = C;
  constexpr Scalar radix = 2;
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar col = c.col(i).cwiseAbs().sum(), row = b.row(i).cwiseAbs().sum();
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        col += std::abs(a(k, i));
        row += std::abs(a(i, k));
      }
      if (col == Scalar(0) || row == Scalar(0)) continue;
      Scalar f = 1;
      const Scalar total = col + row;
      while (col < row / radix) {
        col *= radix;
        row /= radix;
        f *= radix;
      }
      while (col >= row * radix) {
        col /= radix;
        row *= radix;
        f /= radix;
      }
      if (col + row < Scalar(0.95) * total) {
        changed = true;
        d(i) *= f;
        a.row(i) /= f;
        b.row(i) /= f;
        a.col(i) *= f;
        c.col(i) *= f;
      }
    }
    if (!changed) break;
  }
  return d;
}

template <typename Scalar>
StateSpace<Scalar> apply_scaling(const StateSpace<Scalar>& ss, const VectorX<Scalar>& d) {
  const auto inv = d.cwiseInverse().asDiagonal();
  return StateSpace<Scalar>(inv * ss.A() * d.asDiagonal(), inv * ss.B(), ss.C() * d.asDiagonal(), ss.D());
}

template <typename Scalar>
StateSpace<Scalar> balance(const StateSpace<Scalar>& ss) {
  if (ss.states() == 0) return ss;
  return apply_scaling(ss, balancing_scales(ss.A(), ss.B(), ss.C()));
}

// ---------------------------------------------------------------------------
// Realization

template <typename Scalar>
StateSpace<Scalar> controllable_canonical(const RationalTransfer<Scalar>& tf) {
  if (!tf.is_proper()) throw RealizationError("cannot realize an improper transfer");
  const Eigen::Index n = tf.den_degree();
  const VectorX<Scalar> a = tf.den() / tf.den()[0];
  VectorX<Scalar> b = VectorX<Scalar>::Zero(n + 1);
  b.tail(tf.num().size()) = tf.num() / tf.den()[0];
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(n, n);
  MatrixX<Scalar> B = MatrixX<Scalar>::Zero(n, 1);
  MatrixX<Scalar> C(1, n);
  if (n > 0) {
    A.row(0) = -a.tail(n).transpose();
    A.diagonal(-1).setOnes();
    B(0, 0) = 1;
    C.row(0) = (b.tail(n) - a.tail(n) * b[0]).transpose();
  }
  MatrixX<Scalar> D = MatrixX<Scalar>::Constant(1, 1, b[0]);
  return StateSpace<Scalar>(std::move(A), std::move(B), std::move(C), std::move(D));
}

template <typename Scalar>
StateSpace<Scalar> observable_canonical(const RationalTransfer<Scalar>& tf) {
  const auto c = controllable_canonical(tf);
  return StateSpace<Scalar>(c.A().transpose(), c.C().transpose(), c.B().transpose(), c.D());
}

// Padé approximant of exp(-delay*s), numerator/denominator of the given order.
template <typename Scalar>
RationalTransfer<Scalar> pade(Scalar delay, int order) {
  if (order < 1) throw ParameterError("Pade order must be >= 1");
  if (!(delay >= 0)) throw ParameterError("delay must be >= 0");
  VectorX<Scalar> num(order + 1), den(order + 1);
  // c_k = (2n-k)! n! / ((2n)! k! (n-k)!), built by recurrence.
  Scalar ck = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) ck *= Scalar(order - k + 1) / Scalar(k * (2 * order - k + 1));
    const Scalar term = ck * std::pow(delay, k);
    den[order - k] = term;
    num[order - k] = (k % 2 == 0) ? term : -term;
  }
  return RationalTransfer<Scalar>(num, den);
}

// Log of the corner frequency of a unit of degree <= 2; roots at the origin
// sort below everything else.
template <typename Scalar>
Scalar unit_log_corner(const VectorX<Scalar>& u) {
  const Eigen::Index d = u.size() - 1;
  if (d <= 0) return Scalar(0);
  const Scalar ratio = std::abs(u[d] / u[0]);
  if (ratio == Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
  return std::log(ratio) / Scalar(d);
}

// Groups polynomials of degree <= 2 into proper sections of degree <= 2.
// Each numerator joins the free denominator with the nearest corner, which keeps
// the sections close to flat and avoids cancellation against the feedthrough.
// The overall gain is folded into the first section.
template <typename Scalar>
std::vector<RationalTransfer<Scalar>> proper_sections(const std::vector<VectorX<Scalar>>& numerators,
                                                      const std::vector<VectorX<Scalar>>& denominators, Scalar gain) {
  struct Slot {
    VectorX<Scalar> den;
    std::vector<VectorX<Scalar>> nums;
    Eigen::Index free = 0;
  };
  std::vector<Slot> slots;
  std::vector<VectorX<Scalar>> quad_nums, lin_nums;
  for (const auto& raw : denominators) {
    const VectorX<Scalar> d = poly_trim(raw);
    if (d.size() == 1) {
      gain /= d[0];
    } else if (d.size() <= 3) {
      slots.push_back({d, {}, d.size() - 1});
    } else {
      throw RealizationError("section denominators must have degree <= 2");
    }
  }
  for (const auto& raw : numerators) {
    const VectorX<Scalar> n = poly_trim(raw);
    if (n.size() == 1) {
      gain *= n[0];
    } else if (n.size() == 2) {
      lin_nums.push_back(n);
    } else if (n.size() == 3) {
      quad_nums.push_back(n);
    } else {
      throw RealizationError("section numerators must have degree <= 2");
    }
  }
  const auto distance = [](Scalar a, Scalar b) {
    if (std::isinf(a) && std::isinf(b) && a == b) return Scalar(0);
    const Scalar d = std::abs(a - b);
    return std::isnan(d) ? std::numeric_limits<Scalar>::infinity() : d;
  };
  const auto nearest = [&](Scalar corner, auto&& admissible) {
    auto best = slots.end();
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (auto it = slots.begin(); it != slots.end(); ++it) {
      if (!admissible(*it)) continue;
      const Scalar d = distance(corner, unit_log_corner(it->den));
      if (best == slots.end() || d < best_d) {
        best = it;
        best_d = d;
      }
    }
    return best;
  };
  for (const auto& q : quad_nums) {
    const Scalar corner = unit_log_corner(q);
    auto it = nearest(corner, [](const Slot& s) { return s.free == 2; });
    if (it == slots.end()) {
      // Merge the two single-pole slots nearest to this numerator.
      auto first = nearest(corner, [](const Slot& s) { return s.den.size() == 2 && s.free == 1; });
      if (first != slots.end()) {
        const auto first_index = first - slots.begin();
        auto second = nearest(corner, [&](const Slot& s) {
          return &s != &slots[static_cast<std::size_t>(first_index)] && s.den.size() == 2 && s.free == 1;
        });
        if (second != slots.end()) {
          const auto second_index = second - slots.begin();
          auto& keep = slots[static_cast<std::size_t>(first_index)];
          keep.den = poly_multiply(keep.den, slots[static_cast<std::size_t>(second_index)].den);
          keep.free = 2;
          slots.erase(slots.begin() + second_index);
          it = slots.begin() + (first_index < second_index ? first_index : first_index - 1);
        }
      }
    }
    if (it != slots.end()) {
      it->nums.push_back(q);
      it->free = 0;
      continue;
    }
    const auto r = poly_roots(q);
    if (std::abs(r[0].imag()) > Scalar(0)) throw RealizationError("cannot realize an improper transfer");
    lin_nums.push_back((VectorX<Scalar>(2) << q[0], -q[0] * r[0].real()).finished());
    lin_nums.push_back((VectorX<Scalar>(2) << Scalar(1), -r[1].real()).finished());
  }
  for (const auto& l : lin_nums) {
    const Scalar corner = unit_log_corner(l);
    auto it = nearest(corner, [](const Slot& s) { return s.den.size() == 2 && s.free == 1; });
    if (it == slots.end()) it = nearest(corner, [](const Slot& s) { return s.free >= 1; });
    if (it == slots.end()) throw RealizationError("cannot realize an improper transfer");
    it->nums.push_back(l);
    it->free -= 1;
  }
  std::vector<RationalTransfer<Scalar>> out;
  if (slots.empty()) {
    out.push_back(RationalTransfer<Scalar>::gain(gain));
    return out;
  }
  for (auto& slot : slots) {
    VectorX<Scalar> num = VectorX<Scalar>::Ones(1);
    for (const auto& n : slot.nums) num = poly_multiply(num, n);
    out.emplace_back(num, slot.den);
  }
  // Across a run of biproper sections the state-space output is the difference
  // of terms as large as the product of their |D|/|DC| ratios. Sections without
  // feedthrough or with a pole at the origin break such runs, so the others are
  // spread over the gaps between them in groups of balanced log-ratio.
  const auto log_ratio = [](const RationalTransfer<Scalar>& t) {
    const auto& n = t.num();
    const auto& d = t.den();
    const Scalar dc_den = std::abs(d[d.size() - 1]);
    if (n.size() < d.size() || dc_den == Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
    const Scalar dc = std::abs(n[n.size() - 1]) / dc_den;
    if (dc == Scalar(0)) return std::numeric_limits<Scalar>::max();
    return std::log(std::abs(n[0] / d[0]) / dc);
  };
  std::vector<std::pair<Scalar, RationalTransfer<Scalar>>> runners;
  std::vector<RationalTransfer<Scalar>> breakers;
  for (auto& t : out) {
    const Scalar r = log_ratio(t);
    if (std::isinf(r) && r < 0)
      breakers.push_back(std::move(t));
    else
      runners.emplace_back(r, std::move(t));
  }
  std::stable_sort(runners.begin(), runners.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::vector<RationalTransfer<Scalar>>> groups(breakers.size() + 1);
  std::vector<Scalar> load(groups.size(), Scalar(0));
  for (auto& [r, t] : runners) {
    const auto k = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[k] += r;
    groups[k].push_back(std::move(t));
  }
  out.clear();
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (auto& t : groups[k]) out.push_back(std::move(t));
    if (k < breakers.size()) out.push_back(std::move(breakers[k]));
  }
  out.front() = RationalTransfer<Scalar>(out.front().num() * gain, out.front().den());
  return out;
}

template <typename Scalar>
std::vector<VectorX<Scalar>> root_units(const std::vector<std::complex<Scalar>>& roots) {
  std::vector<VectorX<Scalar>> units;
  for (const auto& r : roots) {
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(r));
    if (std::abs(r.imag()) <= tol) {
      units.push_back((VectorX<Scalar>(2) << Scalar(1), -r.real()).finished());
    } else if (r.imag() > 0) {
      units.push_back((VectorX<Scalar>(3) << Scalar(1), -2 * r.real(), std::norm(r)).finished());
    }
  }
  return units;
}

template <typename Scalar>
StateSpace<Scalar> realize_sections(const std::vector<RationalTransfer<Scalar>>& sections) {
  StateSpace<Scalar> out = StateSpace<Scalar>::gain(Scalar(1));
  bool first = true;
  for (const auto& s : sections) {
    auto ss = controllable_canonical(s);
    out = first ? ss : series(out, ss);
    first = false;
  }
  return out;
}

// Realization of a proper transfer. Low orders use controllable canonical form
// directly; higher orders are cascaded from first/second order sections to keep
// the coefficients well conditioned. A delay is replaced by a Padé approximant
// of the requested order (appended as extra states).
template <typename Scalar>
StateSpace<Scalar> realize(const RationalTransfer<Scalar>& tf, int delay_order = 1) {
  if (tf.delay() > 0 && delay_order < 1) throw RealizationError("delay requires a Pade order >= 1");
  const auto rational = tf.without_delay();
  if (!rational.is_proper()) throw RealizationError("cannot realize an improper transfer");
  StateSpace<Scalar> ss;
  if (rational.den_degree() <= 2) {
    ss = controllable_canonical(rational);
  } else {
    const Scalar gain = rational.num()[0] / rational.den()[0];
    ss = realize_sections(proper_sections(root_units(poly_roots(rational.num())),
                                          root_units(poly_roots(rational.den())), gain));
  }
  if (tf.delay() > 0) {
    const auto p = pade(tf.delay(), delay_order);
    const auto delay_ss = delay_order <= 2 ? controllable_canonical(p)
                                           : realize_sections(proper_sections(root_units(poly_roots(p.num())),
                                                                              root_units(poly_roots(p.den())),
                                                                              p.num()[0] / p.den()[0]));
    ss = series(ss, delay_ss);
  }
  return ss;
}

// ---------------------------------------------------------------------------
// Poles, zeros, phase

template <typename Scalar>
std::vector<std::complex<Scalar>> poles(const RationalTransfer<Scalar>& tf) {
  return poly_roots(tf.den());
}

template <typename Scalar>
std::vector<std::complex<Scalar>> zeros(const RationalTransfer<Scalar>& tf) {
  if (tf.is_zero()) return {};
  return poly_roots(tf.num());
}

template <typename Scalar>
std::vector<std::complex<Scalar>> poles(const StateSpace<Scalar>& ss) {
  std::vector<std::complex<Scalar>> out;
  if (ss.states() == 0) return out;
  Eigen::EigenSolver<MatrixX<Scalar>> solver(ss.A(), false);
  for (Eigen::Index k = 0; k < ss.states(); ++k) out.push_back(solver.eigenvalues()[k]);
  return out;
}

template <typename Derived>
bool is_hurwitz(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() == 0) return true;
  Eigen::EigenSolver<MatrixX<Scalar>> solver(A, false);
  return (solver.eigenvalues().real().array() < Scalar(0)).all();
}

// Phase that is continuous in omega: sum of the individual root factor angles
// minus the delay contribution. Used wherever the principal value would wrap.
template <typename Scalar>
Scalar continuous_phase(const RationalTransfer<Scalar>& tf, Scalar omega) {
  const std::complex<Scalar> s(0, omega);
  Scalar phase = 0;
  for (const auto& z : zeros(tf)) phase += std::arg(s - z);
  for (const auto& p : poles(tf)) phase -= std::arg(s - p);
  if (!tf.is_zero() && tf.num()[0] / tf.den()[0] < 0) phase += std::numbers::pi_v<Scalar>;
  return phase - omega * tf.delay();
}

template <typename Scalar>
std::vector<Scalar> unwrap(std::vector<Scalar> phase) {
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  for (std::size_t k = 1; k < phase.size(); ++k) {
    const Scalar jump = phase[k] - phase[k - 1];
    phase[k] -= two_pi * std::round(jump / two_pi);
  }
  return phase;
}

}  // namespace crone
