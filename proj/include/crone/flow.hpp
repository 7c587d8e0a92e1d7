#pragma once

// Classical fourth-order Runge-Kutta for x' = A x + B v(t) with the input
// sampled at the start, middle and end of each step.

#include "crone/lti.hpp"

namespace crone {

template <typename DerivedX, typename DerivedU>
auto rk4_linear(const MatrixX<typename DerivedX::Scalar>& A, const Eigen::MatrixBase<DerivedX>& x,
                const Eigen::MatrixBase<DerivedU>& u0, const Eigen::MatrixBase<DerivedU>& um,
                const Eigen::MatrixBase<DerivedU>& u1, typename DerivedX::Scalar h) {
  using Scalar = typename DerivedX::Scalar;
  using Block = MatrixX<Scalar>;
  const Block k1 = A * x + u0;
  const Block k2 = A * (x + (h / 2) * k1) + um;
  const Block k3 = A * (x + (h / 2) * k2) + um;
  const Block k4 = A * (x + h * k3) + u1;
  return Block(x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
}

// Precomputed one-step map x+ = Phi x + G0 v(t) + Gm v(t + h/2) + G1 v(t + h).
template <typename Scalar>
class Rk4Propagator {
 public:
  Rk4Propagator() = default;

  Rk4Propagator(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, Scalar h) : A_(A), B_(B), h_(h) {
    const auto n = A.rows();
    const auto m = B.cols();
    const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
    const MatrixX<Scalar> Zn = MatrixX<Scalar>::Zero(n, n);
    const MatrixX<Scalar> Zm = MatrixX<Scalar>::Zero(n, m);
    const MatrixX<Scalar> Z0 = MatrixX<Scalar>::Zero(n, m);
    phi_ = rk4_linear(A, I, Zn, Zn, Zn, h);
    g0_ = rk4_linear(A, Z0, B, Zm, Zm, h);
    gm_ = rk4_linear(A, Z0, Zm, B, Zm, h);
    g1_ = rk4_linear(A, Z0, Zm, Zm, B, h);
  }

  template <typename DX, typename DV>
  VectorX<Scalar> step(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DV>& v0,
                       const Eigen::MatrixBase<DV>& vm, const Eigen::MatrixBase<DV>& v1) const {
    VectorX<Scalar> out = phi_ * x;
    out.noalias() += g0_ * v0;
    out.noalias() += gm_ * vm;
    out.noalias() += g1_ * v1;
    return out;
  }

  // Step of arbitrary length using the same scheme (no precomputation).
  template <typename DX, typename DV>
  VectorX<Scalar> partial(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DV>& v0,
                          const Eigen::MatrixBase<DV>& vm, const Eigen::MatrixBase<DV>& v1, Scalar h) const {
    const VectorX<Scalar> u0 = B_ * v0, um = B_ * vm, u1 = B_ * v1;
    return rk4_linear(A_, VectorX<Scalar>(x), u0, um, u1, h);
  }

  Scalar h() const { return h_; }
  const MatrixX<Scalar>& A() const { return A_; }
  const MatrixX<Scalar>& B() const { return B_; }

 private:
  MatrixX<Scalar> A_, B_;
  MatrixX<Scalar> phi_, g0_, gm_, g1_;
  Scalar h_ = 0;
};

}  // namespace crone
