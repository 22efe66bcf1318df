#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Core>

namespace gsw {

/// Point of g ⊗ R^3 for g = u(1): the (i, j, k) coefficients of an imaginary
/// quaternion. Also carries the curvature triple (F23, F31, F12).
template <typename Scalar>
using ImaginaryTriple = Eigen::Matrix<Scalar, 3, 1>;

/// Real quaternion w + x i + y j + z k with the Hamilton product (ij = k).
template <typename Scalar>
struct Quaternion {
  Scalar w{0};
  Scalar x{0};
  Scalar y{0};
  Scalar z{0};

  constexpr Quaternion() = default;
  constexpr Quaternion(Scalar w_, Scalar x_, Scalar y_, Scalar z_) : w(w_), x(x_), y(y_), z(z_) {}

  static constexpr Quaternion identity() { return {1, 0, 0, 0}; }
  static constexpr Quaternion unit_i() { return {0, 1, 0, 0}; }
  static constexpr Quaternion unit_j() { return {0, 0, 1, 0}; }
  static constexpr Quaternion unit_k() { return {0, 0, 0, 1}; }

  /// Embeds c = a + b·i into the complex subalgebra span{1, i}.
  static constexpr Quaternion from_complex(const std::complex<Scalar>& c) { return {c.real(), c.imag(), 0, 0}; }

  static constexpr Quaternion pure(const ImaginaryTriple<Scalar>& v) { return {0, v(0), v(1), v(2)}; }

  template <typename Derived>
  static Quaternion from_coeffs(const Eigen::MatrixBase<Derived>& c) {
    return {c(0), c(1), c(2), c(3)};
  }

  Eigen::Matrix<Scalar, 4, 1> coeffs() const { return {w, x, y, z}; }
  ImaginaryTriple<Scalar> imaginary() const { return {x, y, z}; }

  constexpr Quaternion conjugate() const { return {w, -x, -y, -z}; }
  constexpr Scalar squared_norm() const { return w * w + x * x + y * y + z * z; }
  Scalar norm() const { return std::sqrt(squared_norm()); }

  constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }

  constexpr Quaternion& operator+=(const Quaternion& o) {
    w += o.w;
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Quaternion& operator-=(const Quaternion& o) {
    w -= o.w;
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Quaternion& operator*=(Scalar s) {
    w *= s;
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
  friend constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
  friend constexpr Quaternion operator*(Quaternion a, Scalar s) { return a *= s; }
  friend constexpr Quaternion operator*(Scalar s, Quaternion a) { return a *= s; }
  friend constexpr Quaternion operator/(Quaternion a, Scalar s) { return a *= Scalar(1) / s; }

  friend constexpr Quaternion operator*(const Quaternion& p, const Quaternion& q) {
    return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
  }

  friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

using Quaterniond = Quaternion<double>;

template <typename Scalar>
constexpr Quaternion<Scalar> quat_mul(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
  return p * q;
}

/// Euclidean inner product Re(p q̄) on H = R^4.
template <typename Scalar>
constexpr Scalar real_inner(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
  return p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z;
}

/// q · c for c in the complex subalgebra; this is the right U(1)/C action.
template <typename Scalar>
constexpr Quaternion<Scalar> times_complex(const Quaternion<Scalar>& q, const std::complex<Scalar>& c) {
  const Scalar a = c.real();
  const Scalar b = c.imag();
  return {q.w * a - q.x * b, q.w * b + q.x * a, q.y * a + q.z * b, q.z * a - q.y * b};
}

/// q · i, the Killing direction of the right U(1) action at q (xi = 1).
template <typename Scalar>
constexpr Quaternion<Scalar> times_i(const Quaternion<Scalar>& q) {
  return {-q.x, q.w, q.z, -q.y};
}

/// Unit imaginary for complex structure I_axis, axis in {1, 2, 3} -> i, j, k.
template <typename Scalar>
constexpr Quaternion<Scalar> complex_structure_unit(int axis) {
  switch (axis) {
    case 1:
      return Quaternion<Scalar>::unit_i();
    case 2:
      return Quaternion<Scalar>::unit_j();
    default:
      return Quaternion<Scalar>::unit_k();
  }
}

}  // namespace gsw
