#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>

#include "gsw/fueter_quotient.hpp"
#include "gsw/random_fields.hpp"
#include "gsw/rescale.hpp"
#include "gsw/scenario.hpp"
#include "gsw/snapshot.hpp"
#include "gsw/swsolver.hpp"

namespace gsw {
namespace {

using Rng = std::mt19937_64;
using MomentMap = std::function<ImaginaryTriple<double>(const SpinorValued&)>;

// Wrong convention used by the test hook: the j-moment map in place of the i-moment map.
ImaginaryTriple<double> perturbed_moment_map(const SpinorValued& psi) {
  Quaterniond sum{0, 0, 0, 0};
  for (Index k = 0; k < psi.cols(); ++k) {
    const Quaterniond q = component(psi, k);
    sum += q * Quaterniond::unit_j() * q.conjugate();
  }
  return 0.5 * sum.imaginary();
}

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

struct Tracker {
  double worst = 0.0;
  void see(double v) { worst = std::max(worst, std::isfinite(v) ? v : INFINITY); }
};

constexpr int kAlgebraSamples = 1000;

double quaternion_relations(Rng& rng) {
  Tracker t;
  const auto i = Quaterniond::unit_i(), j = Quaterniond::unit_j(), k = Quaterniond::unit_k(), one = Quaterniond::identity();
  for (const auto& q : {i * i, j * j, k * k, i * j * k}) t.see((q + one).coeffs().norm());
  t.see((i * j - k).coeffs().norm());
  t.see((j * k - i).coeffs().norm());
  t.see((k * i - j).coeffs().norm());
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto p = random_quaternion<double>(rng), q = random_quaternion<double>(rng), r = random_quaternion<double>(rng);
    const double scale = p.norm() * q.norm() * r.norm();
    t.see(rel(((p * q) * r - p * (q * r)).coeffs().norm(), scale));
    t.see(rel(std::abs((p * q).norm() - p.norm() * q.norm()), p.norm() * q.norm()));
    t.see(rel(((p * q).conjugate() - q.conjugate() * p.conjugate()).coeffs().norm(), p.norm() * q.norm()));
  }
  return t.worst;
}

double complex_structure_identities(Rng& rng) {
  Tracker t;
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    const double scale = psi.norm();
    for (int a = 1; a <= 3; ++a) {
      t.see(rel((apply_complex_structure(a, apply_complex_structure(a, psi)) + psi).norm(), scale));
      const int b = a % 3 + 1, c = b % 3 + 1;
      t.see(rel((apply_complex_structure(a, apply_complex_structure(b, psi)) - apply_complex_structure(c, psi)).norm(), scale));
    }
  }
  return t.worst;
}

double moment_homogeneity(const MomentMap& mu, Rng& rng) {
  Tracker t;
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    const double r = scale(rng);
    const SpinorValued scaled = r * psi;
    t.see(rel((mu(scaled) - r * r * mu(psi)).norm(), r * r * squared_amplitude(psi)));
  }
  return t.worst;
}

double moment_u1_invariance(const MomentMap& mu, Rng& rng) {
  Tracker t;
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    t.see(rel((mu(rotate_phase(psi, angle(rng))) - mu(psi)).norm(), squared_amplitude(psi)));
  }
  return t.worst;
}

double moment_su_n_invariance(const MomentMap& mu, Rng& rng) {
  Tracker t;
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto psi = random_spinor_value<double>(3, rng);
    const auto u = random_special_unitary<double>(3, rng);
    t.see(rel((mu(right_matrix_action(psi, u)) - mu(psi)).norm(), squared_amplitude(psi)));
  }
  return t.worst;
}

// n = 1: psi = a + j b with (a, b) in C^2. The standard form psi psi^* - |psi|^2/2 in
// Pauli coefficients c = (Re H01, -Im H01, H00) must equal mu up to the fixed frame
// change mu = (c3, -c2, -c1).
double moment_convention(const MomentMap& mu, Rng& rng) {
  Tracker t;
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto q = random_quaternion<double>(rng);
    const std::complex<double> a{q.w, q.x}, b{q.y, -q.z};
    const std::complex<double> h01 = a * std::conj(b);
    const double h00 = 0.5 * (std::norm(a) - std::norm(b));
    const ImaginaryTriple<double> expected{h00, h01.imag(), -h01.real()};
    t.see(rel((mu(make_spinor<double>({q})) - expected).norm(), q.squared_norm()));
  }
  return t.worst;
}

// mu is quadratic, so its differential is exactly (mu(psi + v) - mu(psi - v)) / 2;
// it must satisfy <d mu(v), e_a> = -<I_a K(psi), v> with K(psi) = psi i.
double moment_killing_relation(const MomentMap& mu, Rng& rng) {
  Tracker t;
  for (int s = 0; s < kAlgebraSamples; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    const auto v = random_spinor_value<double>(2, rng);
    const SpinorValued plus = psi + v, minus = psi - v;
    const ImaginaryTriple<double> dmu = 0.5 * (mu(plus) - mu(minus));
    const auto kill = killing_field(1.0, psi);
    for (int a = 1; a <= 3; ++a) {
      const double lhs = dmu(a - 1);
      const double rhs = -spinor_inner(apply_complex_structure(a, kill), v);
      t.see(rel(std::abs(lhs - rhs), psi.norm() * v.norm()));
    }
  }
  return t.worst;
}

struct Instance {
  LatticeGeometry g{4, 2.0};
  GaugeFieldd a{g};
  BackgroundFieldd b = BackgroundFieldd::identity(g, 2);
  SpinorFieldd psi{g, 2};
};

Instance random_instance(Rng& rng, double link_amplitude, bool random_b) {
  Instance in;
  in.a = random_gauge_field<double>(in.g, link_amplitude, rng);
  if (random_b) in.b = random_background<double>(in.g, 2, rng);
  in.psi = random_spinor_field<double>(in.g, 2, rng);
  in.psi *= 1.0 / l2_norm(in.psi);
  return in;
}

template <typename Field>
double max_abs(const Field& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

double rescale_identity(Rng& rng) {
  Tracker t;
  std::uniform_real_distribution<double> radius(0.2, 20.0);
  for (int s = 0; s < 100; ++s) {
    const auto in = random_instance(rng, 0.5, false);
    const double r = radius(rng);
    const auto base = sw_residual(in.a, in.b, in.psi, 1.0);
    const auto sc = rescale(in.a, in.psi, r);
    const auto res = sw_residual(sc.a, in.b, sc.u, sc.epsilon);
    t.see(rel(max_abs(res.dirac.coeffs() - base.dirac.coeffs() / r), max_abs(base.dirac.coeffs()) / r));
    t.see(rel(max_abs(res.curvature.values() - base.curvature.values() / (r * r)), max_abs(base.curvature.values()) / (r * r)));
  }
  return t.worst;
}

double gauge_invariance(Rng& rng) {
  Tracker t;
  for (int s = 0; s < 100; ++s) {
    const auto in = random_instance(rng, 0.3, true);
    const double alpha = 0.3 + 0.01 * s;
    const auto gauge = random_gauge_function<double>(in.g, rng);
    const auto [a2, psi2] = gauge_transform(gauge, in.a, in.psi);
    const double e1 = energy(in.a, in.b, in.psi, alpha), e2 = energy(a2, in.b, psi2, alpha);
    t.see(rel(std::abs(e1 - e2), e1));
    const double d1 = l2_norm(dirac_residual(in.a, in.b, in.psi)), d2 = l2_norm(dirac_residual(a2, in.b, psi2));
    t.see(rel(std::abs(d1 - d2), d1));
    const auto r1 = sw_residual(in.a, in.b, in.psi, 0.7), r2 = sw_residual(a2, in.b, psi2, 0.7);
    const double c1 = std::sqrt(l2_norm_squared(r1.curvature)), c2 = std::sqrt(l2_norm_squared(r2.curvature));
    t.see(rel(std::abs(c1 - c2), c1));
  }
  return t.worst;
}

double dirac_symmetry(Rng& rng) {
  Tracker t;
  for (int s = 0; s < 20; ++s) {
    const auto in = random_instance(rng, 1.0, true);
    const auto phi = random_spinor_field<double>(in.g, 2, rng);
    const double lhs = l2_inner(dirac_residual(in.a, in.b, phi), in.psi);
    const double rhs = l2_inner(phi, dirac_residual(in.a, in.b, in.psi));
    t.see(rel(std::abs(lhs - rhs), l2_norm(phi) * l2_norm(dirac_residual(in.a, in.b, in.psi)) + std::abs(lhs)));
  }
  return t.worst;
}

// Central differences of the energy along random tangent directions.
double gradient_check(Rng& rng, int directions) {
  Tracker t;
  const auto in = random_instance(rng, 0.5, false);
  const double alpha = M_PI / 4, step = 1e-5;
  const auto grad = energy_gradient(in.a, in.b, in.psi, alpha);
  std::normal_distribution<double> normal;
  for (int s = 0; s < directions; ++s) {
    GaugeFieldd::Angles dtheta(3, in.g.sites());
    for (Index c = 0; c < dtheta.size(); ++c) dtheta(c) = normal(rng);
    auto dpsi = random_spinor_field<double>(in.g, 2, rng);
    dpsi -= in.psi * (l2_inner(dpsi, in.psi) / l2_inner(in.psi, in.psi));
    auto shifted = [&](double h) {
      GaugeFieldd a(in.g, in.a.angles() + h * dtheta);
      return energy(a, in.b, in.psi + h * dpsi, alpha);
    };
    const double fd = (shifted(step) - shifted(-step)) / (2 * step);
    const double analytic = (grad.links.array() * dtheta.array()).sum() + l2_inner(grad.spinor, dpsi);
    t.see(rel(std::abs(fd - analytic), std::abs(analytic)));
  }
  return t.worst;
}

double flux_quantization(Rng& rng) {
  Tracker t;
  const LatticeGeometry g(6, 3.0);
  for (Plane p : kPlanes)
    for (int m : {-2, 1, 3}) {
      const auto a = uniform_flux<double>(g, p, m);
      for (int slice = 0; slice < g.size(); ++slice) t.see(std::abs(chern_flux_value(a, p, slice) - m));
      t.see(max_abs(monopole_charges(a)));
    }
  const auto a = random_gauge_field<double>(g, 1.0, rng);
  const auto q = monopole_charges(a);
  t.see(max_abs(q.array() - q.array().round()));
  t.see(std::abs(q.sum()));
  return t.worst;
}

double horizontal_contraction(Rng& rng) {
  Tracker t;
  for (int s = 0; s < 20; ++s) {
    auto in = random_instance(rng, 0.5, true);
    for (Index x = 0; x < in.g.sites(); ++x) {
      const auto q = random_quaternion<double>(rng);
      in.psi.set_value(x, 0, q);
      in.psi.set_value(x, 1, q * Quaterniond::unit_j());
    }
    const auto res = horizontal_fueter_residual(in.a, in.b, in.psi);
    const auto dirac = dirac_residual(in.a, in.b, in.psi);
    t.see(std::max(0.0, res.norm - l2_norm(dirac)) / l2_norm(dirac));
    SpinorFieldd vertical(in.g, 2);
    std::normal_distribution<double> normal;
    const std::array<Quaterniond, 4> units{Quaterniond::identity(), Quaterniond::unit_i(), Quaterniond::unit_j(), Quaterniond::unit_k()};
    for (Index x = 0; x < in.g.sites(); ++x) {
      const auto kill = killing_field(1.0, in.psi.at(x));
      SpinorValued v = SpinorValued::Zero(4, 2);
      for (const auto& e : units) {
        const double c = normal(rng);
        for (Index k = 0; k < 2; ++k) set_component(v, k, component(v, k) + c * (e * component(kill, k)));
      }
      vertical.at(x) = v;
    }
    const auto moved = horizontal_part(in.psi, dirac + vertical);
    t.see(rel(max_abs(moved.coeffs() - res.field.coeffs()), max_abs(dirac.coeffs())));
  }
  return t.worst;
}

double snapshot_round_trip(Rng& rng) {
  const auto in = random_instance(rng, 1.0, true);
  const auto path = std::filesystem::temp_directory_path() / ("gsw_check_" + std::to_string(::getpid()) + ".gsw");
  write_snapshot(path, {0.25, in.a, in.psi, in.b});
  const auto back = read_snapshot(path);
  std::filesystem::remove(path);
  bool same = back.alpha == 0.25 && back.a.angles() == in.a.angles() && back.psi.coeffs() == in.psi.coeffs();
  for (Index s = 0; s < in.g.sites() && same; ++s)
    for (int d = 0; d < 3; ++d) same = same && back.b.link(s, d) == in.b.link(s, d);
  return same ? 0.0 : 1.0;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  const MomentMap mu = options.perturb_moment_map ? MomentMap(perturbed_moment_map) : MomentMap([](const SpinorValued& psi) { return moment_map(psi); });
  Rng rng(options.seed);
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double measured, double tol) { out.push_back({std::move(name), measured, tol, measured <= tol}); };
  add("quaternion_relations", quaternion_relations(rng), 1e-12);
  add("complex_structure_identities", complex_structure_identities(rng), 1e-12);
  add("moment_map_homogeneity", moment_homogeneity(mu, rng), 1e-12);
  add("moment_map_u1_invariance", moment_u1_invariance(mu, rng), 1e-12);
  add("moment_map_su_n_invariance", moment_su_n_invariance(mu, rng), 1e-12);
  add("moment_map_convention", moment_convention(mu, rng), 1e-12);
  add("moment_map_killing_relation", moment_killing_relation(mu, rng), 1e-12);
  add("rescale_identity", rescale_identity(rng), 1e-12);
  add("gauge_invariance", gauge_invariance(rng), 1e-12);
  add("dirac_symmetry", dirac_symmetry(rng), 1e-12);
  add("gradient_finite_difference", gradient_check(rng, 10), 1e-6);
  add("flux_quantization", flux_quantization(rng), 1e-9);
  add("horizontal_projection_contraction", horizontal_contraction(rng), 1e-12);
  add("snapshot_round_trip", snapshot_round_trip(rng), 0.0);
  return out;
}

}  // namespace gsw
