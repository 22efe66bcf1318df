#pragma once

#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "gsw/lattice.hpp"

namespace gsw {

template <typename Scalar, typename Rng>
Quaternion<Scalar> random_quaternion(Rng& rng) {
  std::normal_distribution<Scalar> normal(0, 1);
  const Scalar w = normal(rng);
  const Scalar x = normal(rng);
  const Scalar y = normal(rng);
  const Scalar z = normal(rng);
  return {w, x, y, z};
}

template <typename Scalar, typename Rng>
SpinorValue<Scalar> random_spinor_value(int n, Rng& rng) {
  SpinorValue<Scalar> psi(4, n);
  for (int k = 0; k < n; ++k) set_component(psi, k, random_quaternion<Scalar>(rng));
  return psi;
}

/// Haar-like SU(n) sample: QR of a complex Gaussian matrix, then the determinant phase removed.
template <typename Scalar, typename Rng>
ComplexMatrix<Scalar> random_special_unitary(int n, Rng& rng) {
  std::normal_distribution<Scalar> normal(0, 1);
  ComplexMatrix<Scalar> m(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      const Scalar re = normal(rng);
      const Scalar im = normal(rng);
      m(r, c) = {re, im};
    }
  return BackgroundField<Scalar>::project_special_unitary(m);
}

/// Links uniform in (-pi, pi], scaled by `amplitude`.
template <typename Scalar, typename Rng>
GaugeField<Scalar> random_gauge_field(const LatticeGeometry& g, Scalar amplitude, Rng& rng) {
  std::uniform_real_distribution<Scalar> uniform(-std::numbers::pi_v<Scalar>, std::numbers::pi_v<Scalar>);
  GaugeField<Scalar> a(g);
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) a.set_angle(s, d, amplitude * uniform(rng));
  return a;
}

/// Standard normal coefficients (not normalized).
template <typename Scalar, typename Rng>
SpinorField<Scalar> random_spinor_field(const LatticeGeometry& g, int n, Rng& rng) {
  std::normal_distribution<Scalar> normal(0, 1);
  SpinorField<Scalar> psi(g, n);
  auto& c = psi.coeffs();
  for (Index col = 0; col < c.cols(); ++col)
    for (int r = 0; r < 4; ++r) c(r, col) = normal(rng);
  return psi;
}

template <typename Scalar, typename Rng>
BackgroundField<Scalar> random_background(const LatticeGeometry& g, int n, Rng& rng) {
  auto b = BackgroundField<Scalar>::identity(g, n);
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) b.set_link(s, d, random_special_unitary<Scalar>(n, rng));
  return b;
}

template <typename Scalar, typename Rng>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> random_gauge_function(const LatticeGeometry& g, Rng& rng) {
  std::uniform_real_distribution<Scalar> uniform(-std::numbers::pi_v<Scalar>, std::numbers::pi_v<Scalar>);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gauge(g.sites());
  for (Index s = 0; s < g.sites(); ++s) gauge(s) = uniform(rng);
  return gauge;
}

}  // namespace gsw
