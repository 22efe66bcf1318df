#pragma once

// Configurations shared by the unit tests and the acceptance runner. The
// reference values quoted next to them come from tests/oracles/*.py.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "gsw/fueter_quotient.hpp"
#include "gsw/lattice.hpp"
#include "gsw/random_fields.hpp"
#include "gsw/swsolver.hpp"

namespace gsw::fixtures {

// Smooth closed-form fields on 4^3, L = 2, n = 2 (mirrors oracles/lattice_energy.py).
struct FormulaConfig {
  LatticeGeometry g{4, 2.0};
  GaugeFieldd a{g};
  BackgroundFieldd b = BackgroundFieldd::identity(g, 2);
  SpinorFieldd psi{g, 2};
};

inline FormulaConfig formula_config(bool with_background) {
  FormulaConfig c;
  const int n = c.g.size();
  for (Index s = 0; s < c.g.sites(); ++s) {
    const auto [x1, x2, x3] = c.g.coords(s);
    for (int d = 0; d < 3; ++d) c.a.set_angle(s, d, 0.3 * std::sin(2 * std::numbers::pi * (x1 + 2 * x2 + 3 * x3 + d) / n) + 0.1 * d);
    for (int k = 0; k < 2; ++k)
      c.psi.set_value(s, k, {std::cos(x1 + k) + 0.5, std::sin(x2 - k), 0.3 * x3 - 0.2 * k, std::cos(x1 * x2 + x3 + k)});
    if (with_background)
      for (int d = 0; d < 3; ++d) {
        const double t = 0.2 * (x1 + d), u = 0.3 * x2, v = 0.1 * x3 - d;
        const std::complex<double> p = std::polar(std::cos(t), u), q = std::polar(std::sin(t), v);
        ComplexMatrix<double> m(2, 2);
        m << p, -std::conj(q), q, std::conj(p);
        c.b.set_link(s, d, m);
      }
  }
  return c;
}

// A straight zero curve along x1 through the cell centres (x2, x3) = (c + 1/2, c + 1/2),
// c = N/2 - 1, in lattice units.
struct LineCurve {
  LatticeGeometry g;
  double centre;  // lattice units

  explicit LineCurve(int n) : g(n, 1.0 * n), centre(n / 2 - 0.5) {}

  // Minimal-image offset of site s from the curve in the (x2, x3) plane, lattice units.
  std::pair<double, double> offset(Index s) const {
    const auto x = g.coords(s);
    const int n = g.size();
    auto wrap = [n](double d) { return d - n * std::round(d / n); };
    return {wrap(x[1] - centre), wrap(x[2] - centre)};
  }

  double rho(Index s) const {
    const auto [u, v] = offset(s);
    return std::hypot(u, v) * g.spacing();
  }

  std::vector<CellIndex> cells() const {
    std::vector<CellIndex> out;
    const int c = static_cast<int>(centre - 0.5);
    for (int i = 0; i < g.size(); ++i) out.push_back(g.site(i, c, c));
    return out;
  }
};

// |Psi| = rho^gamma around the curve. Reference fits over the annulus [2h, 6h] on 16^3:
// gamma = 0.5 -> 0.5100051607, gamma = 1.0 -> 1.0200103215.
inline Eigen::VectorXd holder_amplitude(const LineCurve& curve, double gamma) {
  Eigen::VectorXd amp(curve.g.sites());
  for (Index s = 0; s < curve.g.sites(); ++s) amp(s) = std::pow(curve.rho(s), gamma);
  return amp;
}

// Psi = rho^gamma (1, e^{i theta} j), theta the angle around the curve. mu vanishes
// identically and the H/±1 representative is e^{i theta / 2}: monodromy -1 around the curve.
inline SpinorFieldd half_winding(const LineCurve& curve, double gamma = 0.5) {
  SpinorFieldd psi(curve.g, 2);
  for (Index s = 0; s < curve.g.sites(); ++s) {
    const auto [u, v] = curve.offset(s);
    const double r = std::pow(curve.rho(s), gamma);
    const double angle = std::atan2(v, u);
    psi.set_value(s, 0, {r, 0, 0, 0});
    psi.set_value(s, 1, times_complex(Quaterniond::unit_j(), std::polar(r, -angle)));
  }
  return psi;
}

// Closed square loop of sites in the plane x1 = x1_fixed, corners [lo, hi]^2 in (x2, x3).
inline std::vector<Index> square_loop(const LatticeGeometry& g, int x1_fixed, int lo, int hi) {
  std::vector<Index> loop;
  for (int t = lo; t < hi; ++t) loop.push_back(g.site(x1_fixed, t, lo));
  for (int t = lo; t < hi; ++t) loop.push_back(g.site(x1_fixed, hi, t));
  for (int t = hi; t > lo; --t) loop.push_back(g.site(x1_fixed, t, hi));
  for (int t = hi; t > lo; --t) loop.push_back(g.site(x1_fixed, lo, t));
  loop.push_back(loop.front());
  return loop;
}

// Amplitude vanishing on the site line (x2, x3) = (c, c) and >= 1 elsewhere.
inline Eigen::VectorXd site_line_amplitude(const LatticeGeometry& g, int c) {
  Eigen::VectorXd amp(g.sites());
  for (Index s = 0; s < g.sites(); ++s) {
    const auto x = g.coords(s);
    const int du = g.periodic_delta(c, x[1]), dv = g.periodic_delta(c, x[2]);
    amp(s) = std::hypot(double(du), double(dv)) * g.spacing();
  }
  return amp;
}

}  // namespace gsw::fixtures
