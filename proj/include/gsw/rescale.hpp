#pragma once

#include <stdexcept>

#include "gsw/lattice.hpp"

namespace gsw {

template <typename Scalar>
struct Rescaled {
  GaugeField<Scalar> a;
  SpinorField<Scalar> u;
  Scalar epsilon;
};

/// (a, u) -> (a, u/r) with epsilon = 1/r. Because mu is homogeneous of degree
/// two, F_a = mu(u) holds iff r^{-2} F_a = mu(u/r), and the Dirac equation is
/// linear, so solutions at epsilon = 1 map to solutions at epsilon = 1/r.
template <typename Scalar>
Rescaled<Scalar> rescale(const GaugeField<Scalar>& a, const SpinorField<Scalar>& u, Scalar r) {
  if (!(r > 0)) throw std::invalid_argument("rescale factor r must be positive");
  require_same_geometry(a.geometry(), u.geometry());
  return {a, u * (Scalar(1) / r), Scalar(1) / r};
}

}  // namespace gsw
