#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "gsw/random_fields.hpp"
#include "gsw/rescale.hpp"
#include "gsw/swsolver.hpp"

using namespace gsw;

namespace {

using Rng = std::mt19937_64;
constexpr double pi = std::numbers::pi;

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

SpinorFieldd normalized(SpinorFieldd psi) {
  psi *= 1.0 / l2_norm(psi);
  return psi;
}

}  // namespace

TEST_CASE("Dirac residual matches the reference at one site") {
  // Reference: oracles/lattice_energy.py, site (1, 1, 0).
  const double plain[2][4] = {{0.05129429615456553, -1.632136821429138, 1.9259683193236614, -1.6667003107659473},
                              {1.2339104885212409, -1.9745652955303479, 1.6020427030836513, -1.398375084874622}};
  const double twisted[2][4] = {{-0.5057148264181773, -2.534468688476758, 1.9754943501384026, -1.9233061339110338},
                                {0.6644015142057198, -2.959978042064198, 0.934360839527565, 0.8951904816630321}};
  for (bool with_b : {false, true}) {
    const auto c = fixtures::formula_config(with_b);
    const auto d = dirac_residual(c.a, c.b, c.psi);
    const Index s = c.g.site(1, 1, 0);
    for (int k = 0; k < 2; ++k)
      for (int r = 0; r < 4; ++r) CHECK(d.at(s)(r, k) == doctest::Approx(with_b ? twisted[k][r] : plain[k][r]).epsilon(1e-12));
  }
}

TEST_CASE("energy matches the reference values") {
  struct Row {
    bool with_b;
    double alpha;
    double energy;
  };
  const Row rows[] = {{false, 0.3, 62.438145468954346},
                      {false, pi / 4, 61.194323922589845},
                      {true, 0.3, 95.81916249906821},
                      {true, pi / 4, 94.57534095270373}};
  for (const auto& row : rows) {
    const auto c = fixtures::formula_config(row.with_b);
    CHECK(energy(c.a, c.b, c.psi, row.alpha) == doctest::Approx(row.energy).epsilon(1e-12));
  }
  const auto c = fixtures::formula_config(true);
  CHECK(l2_inner(dirac_residual(c.a, c.b, c.psi), dirac_residual(c.a, c.b, c.psi)) == doctest::Approx(170.67683987029355).epsilon(1e-12));
  CHECK(l2_norm_squared(blowup_residual(c.a, c.b, c.psi, 0.3).curvature) == doctest::Approx(20.961485127842884).epsilon(1e-12));
  CHECK(residual_norm(c.a, c.b, c.psi, 0.3) == doctest::Approx(std::sqrt(2 * 95.81916249906821)).epsilon(1e-12));
}

TEST_CASE("moment map field at one site") {
  const auto c = fixtures::formula_config(false);
  const auto mu = moment_map_field(c.psi);
  const Index s = c.g.site(1, 1, 0);
  CHECK(mu.value(s, Plane::p23) == doctest::Approx(0.6461144437972843).epsilon(1e-13));
  CHECK(mu.value(s, Plane::p31) == doctest::Approx(0.5271825059551216).epsilon(1e-13));
  CHECK(mu.value(s, Plane::p12) == doctest::Approx(0.4714193461034124).epsilon(1e-13));
}

TEST_CASE("linear Fueter-regular map has zero interior residual") {
  // u = x1 i + x2 j - 2 x3 k: D u = i i + j j - 2 k k = 0. Centered differences are exact on
  // linear maps away from the periodic seam.
  const LatticeGeometry g(6, 3.0);
  auto build = [&](double c3) {
    SpinorFieldd u(g, 1);
    for (Index s = 0; s < g.sites(); ++s) {
      const auto x = g.coords(s);
      const double h = g.spacing();
      u.set_value(s, 0, {0, x[0] * h, x[1] * h, c3 * x[2] * h});
    }
    return u;
  };
  const GaugeFieldd a(g);
  const auto b = BackgroundFieldd::identity(g, 1);
  const auto regular = dirac_residual(a, b, build(-2.0));
  const auto irregular = dirac_residual(a, b, build(1.0));
  for (Index s = 0; s < g.sites(); ++s) {
    const auto x = g.coords(s);
    const bool interior = std::all_of(x.begin(), x.end(), [&](int v) { return v > 0 && v < g.size() - 1; });
    if (!interior) continue;
    CHECK(regular.at(s).norm() < 1e-13);
    CHECK(irregular.value(s, 0).coeffs().isApprox(Eigen::Vector4d(-3, 0, 0, 0), 1e-13));
  }
}

TEST_CASE("Dirac residual is symmetric") {
  Rng rng(1);
  const LatticeGeometry g(4, 2.0);
  for (int s = 0; s < 10; ++s) {
    const auto a = random_gauge_field<double>(g, 1.0, rng);
    const auto b = random_background<double>(g, 2, rng);
    const auto phi = random_spinor_field<double>(g, 2, rng), psi = random_spinor_field<double>(g, 2, rng);
    const double lhs = l2_inner(dirac_residual(a, b, phi), psi), rhs = l2_inner(phi, dirac_residual(a, b, psi));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs) + 1e-13);
  }
}

TEST_CASE("residuals and energy are gauge invariant") {
  Rng rng(2);
  const LatticeGeometry g(4, 2.0);
  for (int s = 0; s < 100; ++s) {
    const auto a = random_gauge_field<double>(g, 0.5, rng);
    const auto b = random_background<double>(g, 2, rng);
    const auto psi = normalized(random_spinor_field<double>(g, 2, rng));
    const auto [a2, psi2] = gauge_transform(random_gauge_function<double>(g, rng), a, psi);
    const double alpha = 0.05 + 0.014 * s;
    const double e1 = energy(a, b, psi, alpha);
    CHECK(std::abs(energy(a2, b, psi2, alpha) - e1) <= 1e-12 * e1);
    const double d1 = l2_norm(dirac_residual(a, b, psi));
    CHECK(std::abs(l2_norm(dirac_residual(a2, b, psi2)) - d1) <= 1e-12 * d1);
    const auto r1 = sw_residual(a, b, psi, 0.5), r2 = sw_residual(a2, b, psi2, 0.5);
    CHECK(std::abs(l2_norm_squared(r1.curvature) - l2_norm_squared(r2.curvature)) <= 1e-12 * l2_norm_squared(r1.curvature));
    CHECK(max_abs(r1.curvature.values() - r2.curvature.values()) <= 1e-12 * max_abs(r1.curvature.values()));
  }
}

TEST_CASE("rescaling transforms residuals componentwise") {
  Rng rng(3);
  const LatticeGeometry g(4, 2.0);
  std::uniform_real_distribution<double> radius(0.1, 50.0);
  for (int s = 0; s < 100; ++s) {
    const auto a = random_gauge_field<double>(g, 0.5, rng);
    const auto u = random_spinor_field<double>(g, 2, rng);
    const auto b = BackgroundFieldd::identity(g, 2);
    const double r = radius(rng);
    const auto base = sw_residual(a, b, u, 1.0);
    const auto sc = rescale(a, u, r);
    const auto moved = sw_residual(sc.a, b, sc.u, sc.epsilon);
    CHECK(max_abs(moved.dirac.coeffs() * r - base.dirac.coeffs()) <= 1e-12 * max_abs(base.dirac.coeffs()));
    CHECK(max_abs(moved.curvature.values() * (r * r) - base.curvature.values()) <= 1e-12 * max_abs(base.curvature.values()));
  }
}

TEST_CASE("blow-up residual parts") {
  const auto c = fixtures::formula_config(false);
  const double alpha = 0.4;
  const auto r = blowup_residual(c.a, c.b, c.psi, alpha);
  CHECK(r.norm_defect == doctest::Approx(l2_norm(c.psi) - 1.0));
  const Eigen::MatrixXd expected =
      std::pow(std::sin(alpha), 2) * curvature(c.a).values() - std::pow(std::cos(alpha), 2) * moment_map_field(c.psi).values();
  CHECK(max_abs(r.curvature.values() - expected) < 1e-13);
  CHECK(max_abs(sw_residual(c.a, c.b, c.psi, 0.0).curvature.values() + moment_map_field(c.psi).values()) == 0.0);
  CHECK_THROWS_AS(blowup_residual(c.a, c.b, c.psi, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(blowup_residual(c.a, c.b, c.psi, 1.6), std::invalid_argument);
  CHECK_THROWS_AS(sw_residual(c.a, c.b, c.psi, -1.0), std::invalid_argument);
}

TEST_CASE("analytic gradient agrees with central differences") {
  Rng rng(4);
  const LatticeGeometry g(4, 2.0);
  std::normal_distribution<double> normal;
  for (bool with_b : {false, true}) {
    const auto a = random_gauge_field<double>(g, 0.5, rng);
    const auto b = with_b ? random_background<double>(g, 2, rng) : BackgroundFieldd::identity(g, 2);
    const auto psi = normalized(random_spinor_field<double>(g, 2, rng));
    for (double alpha : {pi / 4, 0.2, 0.0}) {
      const auto grad = energy_gradient(a, b, psi, alpha);
      const auto raw = energy_gradient_unprojected(a, b, psi, alpha);
      for (int dir = 0; dir < 10; ++dir) {
        GaugeFieldd::Angles dtheta(3, g.sites());
        for (Index i = 0; i < dtheta.size(); ++i) dtheta(i) = normal(rng);
        const auto dpsi_raw = random_spinor_field<double>(g, 2, rng);
        const SpinorFieldd dpsi = dpsi_raw - psi * (l2_inner(dpsi_raw, psi) / l2_inner(psi, psi));
        auto e = [&](double t, const SpinorFieldd& v) { return energy(GaugeFieldd(g, a.angles() + t * dtheta), b, psi + t * v, alpha); };
        const double step = 1e-5;
        const double fd = (e(step, dpsi) - e(-step, dpsi)) / (2 * step);
        const double an = (grad.links.array() * dtheta.array()).sum() + l2_inner(grad.spinor, dpsi);
        CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
        const double fd_raw = (e(step, dpsi_raw) - e(-step, dpsi_raw)) / (2 * step);
        const double an_raw = (raw.links.array() * dtheta.array()).sum() + l2_inner(raw.spinor, dpsi_raw);
        CHECK(std::abs(fd_raw - an_raw) <= 1e-6 * std::abs(an_raw));
      }
      CHECK(std::abs(l2_inner(grad.spinor, psi)) < 1e-12 * l2_norm(grad.spinor));
    }
  }
}

TEST_CASE("constant configuration solves the system at every angle") {
  const LatticeGeometry g(4, 2.0);
  const auto psi = constant_solution(g, 2, Quaterniond{0.3, -0.2, 0.9, 0.1});
  CHECK(l2_norm(psi) == doctest::Approx(1.0));
  const GaugeFieldd a(g);
  const auto b = BackgroundFieldd::identity(g, 2);
  for (double alpha : {pi / 4, pi / 8, 0.0}) {
    CHECK(energy(a, b, psi, alpha) < 1e-24);
    const auto report = solve(a, b, psi, alpha);
    CHECK(report.status == SolveStatus::converged);
    CHECK(report.iterations == 0);
    CHECK(report.energy_trace.size() == 1);
  }
  CHECK(energy(a, BackgroundFieldd::identity(g, 4), constant_solution(g, 4, Quaterniond::identity()), 0.3) < 1e-24);
  CHECK_THROWS_AS(constant_solution(g, 3, Quaterniond::identity()), std::invalid_argument);
}

TEST_CASE("solver trace is monotone and the callback sees every iteration") {
  const LatticeGeometry g(4, 2.0);
  const auto init = random_initial_state(g, 2, 0.3, 11);
  const auto b = BackgroundFieldd::identity(g, 2);
  SolverOptions options;
  options.max_iter = 300;
  std::vector<IterationInfo> seen;
  options.callback = [&](const IterationInfo& info) { seen.push_back(info); };
  const auto report = solve(init.a, b, init.psi, pi / 4, options);
  CHECK(report.iterations <= 300);
  CHECK(report.energy_trace.size() == static_cast<std::size_t>(report.iterations + 1));
  CHECK(seen.size() == report.energy_trace.size());
  for (std::size_t i = 1; i < report.energy_trace.size(); ++i) {
    CHECK(report.energy_trace[i] <= report.energy_trace[i - 1]);
    CHECK(seen[i].energy == report.energy_trace[i]);
    CHECK(seen[i].iteration == static_cast<int>(i));
    CHECK(seen[i].step > 0.0);
  }
  CHECK(report.energy_trace.back() < 0.05 * report.energy_trace.front());
  CHECK(l2_norm(report.psi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.energy_trace.back() == doctest::Approx(energy(report.a, b, report.psi, pi / 4)).epsilon(1e-12));
  CHECK(report.min_amplitude == doctest::Approx(site_amplitude(report.psi).minCoeff()));
}

TEST_CASE("solver is deterministic") {
  const LatticeGeometry g(4, 2.0);
  const auto b = BackgroundFieldd::identity(g, 2);
  SolverOptions options;
  options.max_iter = 50;
  const auto i1 = random_initial_state(g, 2, 0.3, 5), i2 = random_initial_state(g, 2, 0.3, 5);
  const auto r1 = solve(i1.a, b, i1.psi, 0.5, options), r2 = solve(i2.a, b, i2.psi, 0.5, options);
  CHECK(r1.energy_trace == r2.energy_trace);
  CHECK(r1.psi.coeffs() == r2.psi.coeffs());
  CHECK(random_initial_state(g, 2, 0.3, 6).psi.coeffs() != i1.psi.coeffs());
}

TEST_CASE("solver statuses") {
  const LatticeGeometry g(4, 2.0);
  const auto init = random_initial_state(g, 2, 0.3, 1);
  const auto b = BackgroundFieldd::identity(g, 2);
  SolverOptions options;
  options.max_iter = 0;
  auto r = solve(init.a, b, init.psi, 0.5, options);
  CHECK(r.status == SolveStatus::max_iterations);
  CHECK(!is_failure(r, options));
  options.require_convergence = true;
  CHECK(is_failure(r, options));

  options.max_iter = 10;
  options.initial_step = 1e-16;
  r = solve(init.a, b, init.psi, 0.5, options);
  CHECK(r.status == SolveStatus::line_search_failure);
  CHECK(is_failure(r, SolverOptions{}));
  CHECK(to_string(SolveStatus::converged) == "converged");

  CHECK_THROWS_AS(solve(init.a, b, SpinorFieldd(g, 2), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(solve(init.a, BackgroundFieldd::identity(g, 3), init.psi, 0.5), std::invalid_argument);
}

TEST_CASE("continuation warm-starts along the schedule") {
  const LatticeGeometry g(4, 2.0);
  const auto init = random_initial_state(g, 2, 0.2, 3);
  const auto b = BackgroundFieldd::identity(g, 2);
  SolverOptions options;
  options.max_iter = 40;
  const auto result = continue_alpha({pi / 4, pi / 8, 0.0}, init.a, b, init.psi, options);
  REQUIRE(result.completed());
  REQUIRE(result.rungs.size() == 3);
  CHECK(result.rungs[2].epsilon == 0.0);
  CHECK(result.rungs[0].epsilon == doctest::Approx(1.0));
  const auto direct = solve(result.rungs[0].a, b, result.rungs[0].psi, pi / 8, options);
  CHECK(direct.energy_trace.back() == result.rungs[1].energy);
  for (const auto& r : result.rungs) CHECK(r.residual_norm == doctest::Approx(std::sqrt(2 * r.energy)));

  CHECK_THROWS_AS(continue_alpha({}, init.a, b, init.psi), std::invalid_argument);
  CHECK_THROWS_AS(continue_alpha({0.3, 0.3}, init.a, b, init.psi), std::invalid_argument);
  CHECK_THROWS_AS(continue_alpha({0.2, 0.3}, init.a, b, init.psi), std::invalid_argument);
  CHECK_THROWS_AS(continue_alpha({pi / 2, 0.3}, init.a, b, init.psi), std::invalid_argument);
  CHECK_THROWS_AS(continue_alpha({0.3, -0.1}, init.a, b, init.psi), std::invalid_argument);
}

TEST_CASE("continuation stops at the first failed rung") {
  // With a = 0 the energy grows as alpha decreases; a tolerance between the two rung
  // energies lets rung 0 converge immediately and rung 1 fail.
  const LatticeGeometry g(4, 2.0);
  const auto init = random_initial_state(g, 2, 0.0, 3);
  const auto b = BackgroundFieldd::identity(g, 2);
  const double e0 = energy(init.a, b, init.psi, pi / 4), e1 = energy(init.a, b, init.psi, pi / 8);
  REQUIRE(e0 < e1);
  SolverOptions options;
  options.max_iter = 0;
  options.tol = 0.5 * (e0 + e1);
  options.require_convergence = true;
  const auto result = continue_alpha({pi / 4, pi / 8}, init.a, b, init.psi, options);
  CHECK(!result.completed());
  REQUIRE(result.rungs.size() == 1);
  CHECK(result.rungs[0].status == SolveStatus::converged);
  CHECK(result.failed->status == SolveStatus::max_iterations);
  CHECK(result.failed->alpha == pi / 8);
}
