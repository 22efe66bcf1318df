#pragma once

#include <cassert>
#include <complex>
#include <stdexcept>

#include <Eigen/Core>

#include "gsw/quaternion.hpp"

namespace gsw {

/// Fiber value of Psi in Hom(E, S ⊗ L) after trivialization: an n-tuple of
/// quaternions stored column-wise as (w, x, y, z). U(1) acts on the right by
/// e^{i theta}, SU(n) by the right matrix action through right complex
/// multiplication, and the complex structures I_1, I_2, I_3 act on the left
/// by i, j, k.
template <typename Scalar>
using SpinorValue = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using SpinorValued = SpinorValue<double>;

template <typename Derived>
Quaternion<typename Derived::Scalar> component(const Eigen::MatrixBase<Derived>& psi, Eigen::Index k) {
  return Quaternion<typename Derived::Scalar>::from_coeffs(psi.col(k));
}

// Takes const& so that block expressions can be written through (Eigen's
// "writing functions taking Eigen types as parameters" idiom).
template <typename Derived>
void set_component(const Eigen::MatrixBase<Derived>& psi_, Eigen::Index k, const Quaternion<typename Derived::Scalar>& q) {
  auto& psi = const_cast<Eigen::MatrixBase<Derived>&>(psi_);
  psi(0, k) = q.w;
  psi(1, k) = q.x;
  psi(2, k) = q.y;
  psi(3, k) = q.z;
}

template <typename Scalar>
SpinorValue<Scalar> make_spinor(std::initializer_list<Quaternion<Scalar>> parts) {
  SpinorValue<Scalar> psi(4, static_cast<Eigen::Index>(parts.size()));
  Eigen::Index k = 0;
  for (const auto& q : parts) set_component(psi, k++, q);
  return psi;
}

/// |Psi|^2 = sum_k |psi_k|^2.
template <typename Derived>
typename Derived::Scalar squared_amplitude(const Eigen::MatrixBase<Derived>& psi) {
  typename Derived::Scalar s(0);
  for (Eigen::Index k = 0; k < psi.cols(); ++k) s += psi.col(k).squaredNorm();
  return s;
}

/// Left multiplication of every component by the unit imaginary of `axis`.
template <typename Derived>
SpinorValue<typename Derived::Scalar> apply_complex_structure(int axis, const Eigen::MatrixBase<Derived>& psi) {
  using Scalar = typename Derived::Scalar;
  if (axis < 1 || axis > 3) throw std::invalid_argument("complex structure axis must be 1, 2 or 3");
  const auto e = complex_structure_unit<Scalar>(axis);
  SpinorValue<Scalar> out(4, psi.cols());
  for (Eigen::Index k = 0; k < psi.cols(); ++k) set_component(out, k, e * component(psi, k));
  return out;
}

/// Hyperkähler moment map of the right U(1) action, mu(Psi) = 1/2 sum_k psi_k i conj(psi_k).
template <typename Derived>
ImaginaryTriple<typename Derived::Scalar> moment_map(const Eigen::MatrixBase<Derived>& psi) {
  using Scalar = typename Derived::Scalar;
  Quaternion<Scalar> acc;
  for (Eigen::Index k = 0; k < psi.cols(); ++k) {
    const auto q = component(psi, k);
    acc += q * Quaternion<Scalar>::unit_i() * q.conjugate();
  }
  return Scalar(0.5) * acc.imaginary();
}

/// K_xi(Psi) = Psi · (i xi).
template <typename Derived>
SpinorValue<typename Derived::Scalar> killing_field(typename Derived::Scalar xi, const Eigen::MatrixBase<Derived>& psi) {
  SpinorValue<typename Derived::Scalar> out(4, psi.cols());
  for (Eigen::Index k = 0; k < psi.cols(); ++k) set_component(out, k, times_i(component(psi, k)) * xi);
  return out;
}

/// Psi · e^{i theta}.
template <typename Derived>
SpinorValue<typename Derived::Scalar> rotate_phase(const Eigen::MatrixBase<Derived>& psi, typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  const std::complex<Scalar> phase = std::polar(Scalar(1), theta);
  SpinorValue<Scalar> out(4, psi.cols());
  for (Eigen::Index k = 0; k < psi.cols(); ++k) set_component(out, k, times_complex(component(psi, k), phase));
  return out;
}

/// Right matrix action (Psi U)_l = sum_k psi_k U_kl with complex entries acting by right multiplication.
template <typename Derived, typename Scalar = typename Derived::Scalar>
SpinorValue<Scalar> right_matrix_action(const Eigen::MatrixBase<Derived>& psi, const ComplexMatrix<Scalar>& u) {
  assert(u.rows() == psi.cols() && u.cols() == psi.cols());
  SpinorValue<Scalar> out = SpinorValue<Scalar>::Zero(4, psi.cols());
  for (Eigen::Index l = 0; l < psi.cols(); ++l) {
    Quaternion<Scalar> acc;
    for (Eigen::Index k = 0; k < psi.cols(); ++k) acc += times_complex(component(psi, k), u(k, l));
    set_component(out, l, acc);
  }
  return out;
}

/// Real inner product sum_k Re(phi_k conj(psi_k)).
template <typename DA, typename DB>
typename DA::Scalar spinor_inner(const Eigen::MatrixBase<DA>& phi, const Eigen::MatrixBase<DB>& psi) {
  typename DA::Scalar s(0);
  for (Eigen::Index k = 0; k < phi.cols(); ++k) s += phi.col(k).dot(psi.col(k));
  return s;
}

}  // namespace gsw
