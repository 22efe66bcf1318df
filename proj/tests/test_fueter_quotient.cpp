#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "gsw/fueter_quotient.hpp"
#include "gsw/random_fields.hpp"

using namespace gsw;

namespace {

using Rng = std::mt19937_64;
constexpr double pi = std::numbers::pi;

// Psi = (q, q j): mu(Psi) = 0 for every q.
SpinorValued balanced(const Quaterniond& q) { return make_spinor<double>({q, q * Quaterniond::unit_j()}); }

SpinorFieldd balanced_field(const LatticeGeometry& g, Rng& rng) {
  SpinorFieldd psi(g, 2);
  for (Index s = 0; s < g.sites(); ++s) psi.at(s) = balanced(random_quaternion<double>(rng));
  return psi;
}

double class_distance(const Quaterniond& p, const Quaterniond& q) { return std::min((p - q).coeffs().norm(), (p + q).coeffs().norm()); }

std::array<Quaterniond, 4> units() { return {Quaterniond::identity(), Quaterniond::unit_i(), Quaterniond::unit_j(), Quaterniond::unit_k()}; }

SpinorValued vertical_vector(const SpinorValued& psi, const Eigen::Vector4d& c) {
  const auto kill = killing_field(1.0, psi);
  SpinorValued v = SpinorValued::Zero(4, psi.cols());
  const auto e = units();
  for (int a = 0; a < 4; ++a)
    for (Index k = 0; k < psi.cols(); ++k) set_component(v, k, component(v, k) + c(a) * (e[a] * component(kill, k)));
  return v;
}

}  // namespace

TEST_CASE("horizontal projection is an orthogonal projection") {
  Rng rng(1);
  for (int s = 0; s < 500; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    const auto v = random_spinor_value<double>(2, rng);
    const auto p = horizontal_projection(psi, v);
    CHECK((horizontal_projection(psi, p) - p).norm() <= 1e-12 * v.norm());
    CHECK(p.norm() <= v.norm() * (1 + 1e-12));
    const auto kill = killing_field(1.0, psi);
    for (const auto& e : units()) {
      SpinorValued basis(4, 2);
      for (Index k = 0; k < 2; ++k) set_component(basis, k, e * component(kill, k));
      CHECK(std::abs(spinor_inner(p, basis)) <= 1e-12 * v.norm() * psi.norm());
    }
    const Eigen::Vector4d c = Eigen::Vector4d::Random();
    CHECK(horizontal_projection(psi, vertical_vector(psi, c)).norm() <= 1e-12 * squared_amplitude(psi) * c.norm());
  }
  const auto v = random_spinor_value<double>(2, rng);
  CHECK(horizontal_projection(SpinorValued::Zero(4, 2), v) == v);
  CHECK_THROWS_AS(horizontal_projection(SpinorValued::Zero(4, 2), SpinorValued::Zero(4, 3)), std::invalid_argument);
}

TEST_CASE("horizontal Fueter residual contracts and ignores vertical perturbations") {
  Rng rng(2);
  const LatticeGeometry g(4, 2.0);
  for (int s = 0; s < 20; ++s) {
    const auto a = random_gauge_field<double>(g, 0.5, rng);
    const auto b = random_background<double>(g, 2, rng);
    const auto psi = balanced_field(g, rng);
    const auto res = horizontal_fueter_residual(a, b, psi);
    const auto full = dirac_residual(a, b, psi);
    CHECK(res.norm <= l2_norm(full) * (1 + 1e-12));
    CHECK(res.norm == doctest::Approx(l2_norm(res.field)));
    SpinorFieldd shifted = full;
    for (Index x = 0; x < g.sites(); ++x) shifted.at(x) += vertical_vector(psi.at(x), Eigen::Vector4d::Random());
    const auto again = horizontal_part(psi, shifted);
    CHECK((again.coeffs() - res.field.coeffs()).cwiseAbs().maxCoeff() <= 1e-12 * full.coeffs().cwiseAbs().maxCoeff());
  }
  const auto generic = random_spinor_field<double>(g, 2, rng);
  CHECK_THROWS_AS(horizontal_fueter_residual(GaugeFieldd(g), BackgroundFieldd::identity(g, 2), generic), std::domain_error);
}

TEST_CASE("quadratic invariant does not separate orbits on the zero level") {
  // (q, q j) and (q e^{j beta}, q e^{j beta} j) share psi_1 conj(psi_2) but lie in different U(1) orbits.
  const Quaterniond q{0.4, -1.1, 0.7, 0.2};
  const double beta = 0.6;
  const Quaterniond rot{std::cos(beta), 0, std::sin(beta), 0};
  const auto p1 = balanced(q), p2 = balanced(q * rot);
  CHECK(moment_map(p1).norm() < 1e-15);
  CHECK(moment_map(p2).norm() < 1e-15);
  const auto w1 = quadratic_invariant(p1), w2 = quadratic_invariant(p2);
  CHECK((w1 - w2).coeffs().norm() < 1e-14);
  CHECK(std::abs(w1.w) < 1e-15);
  const auto r1 = quotient_representative(p1), r2 = quotient_representative(p2);
  REQUIRE(r1);
  REQUIRE(r2);
  CHECK(class_distance(*r1, *r2) > 0.1);
}

TEST_CASE("quotient representative is a U(1)-invariant class") {
  Rng rng(3);
  std::uniform_real_distribution<double> angle(-pi, pi);
  for (int s = 0; s < 500; ++s) {
    const auto psi = random_spinor_value<double>(2, rng);
    const auto r = quotient_representative(psi);
    REQUIRE(r);
    const auto moved = quotient_representative(rotate_phase(psi, angle(rng)));
    REQUIRE(moved);
    CHECK(class_distance(*r, *moved) <= 1e-12 * r->norm());
    CHECK(r->norm() == doctest::Approx(component(psi, 0).norm()));
  }
  const Quaterniond q{1, 2, 3, 4};
  CHECK(class_distance(*quotient_representative(balanced(q)), q) < 1e-14);
  CHECK(!quotient_representative(make_spinor<double>({Quaterniond{0, 0, 0, 0}, q})));
  CHECK(!quotient_representative(make_spinor<double>({q, q})));
  CHECK_THROWS_AS(quotient_representative(SpinorValued::Zero(4, 3)), std::invalid_argument);
}

TEST_CASE("zero set of a wrapping site line") {
  const LatticeGeometry g(16, 16.0);
  const auto amp = fixtures::site_line_amplitude(g, 8);
  const auto report = zero_set(g, amp, 0.5 * g.spacing());
  std::vector<CellIndex> expected;
  for (int i = 0; i < 16; ++i)
    for (int y : {7, 8})
      for (int z : {7, 8}) expected.push_back(g.site(i, y, z));
  std::sort(expected.begin(), expected.end());
  CHECK(report.cells == expected);
  REQUIRE(report.components.size() == 1);
  CHECK(report.components[0].period == std::array<int, 3>{1, 0, 0});
  CHECK(!report.components[0].multiply_wrapping);
  CHECK(report.labels == std::vector<int>(expected.size(), 0));
  CHECK(report.threshold == 0.5);
}

TEST_CASE("zero set edge cases") {
  const LatticeGeometry g(6, 3.0);
  CHECK(zero_set(g, Eigen::VectorXd::Ones(g.sites()), 0.5).empty());
  CHECK_THROWS_AS(zero_set(g, Eigen::VectorXd::Ones(g.sites()), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(zero_set(g, Eigen::VectorXd::Ones(5), 0.5), std::invalid_argument);
  Eigen::VectorXd amp = Eigen::VectorXd::Ones(g.sites());
  amp(g.site(0, 0, 0)) = 0.0;
  const auto point = zero_set(g, amp, 0.5);
  CHECK(point.cells.size() == 8);
  REQUIRE(point.components.size() == 1);
  CHECK(point.components[0].period == std::array<int, 3>{0, 0, 0});
  CHECK_THROWS_AS(zero_set_from_cells(g, {g.sites()}), std::invalid_argument);
}

TEST_CASE("component periods") {
  const LatticeGeometry g(8, 8.0);
  std::vector<CellIndex> ring, line_y, plane, pair;
  for (int t = 2; t < 5; ++t) {
    ring.push_back(g.site(t, 2, 3));
    ring.push_back(g.site(t, 4, 3));
    ring.push_back(g.site(2, t, 3));
    ring.push_back(g.site(4, t, 3));
  }
  for (int t = 0; t < 8; ++t) line_y.push_back(g.site(5, t, 1));
  for (int t = 0; t < 8; ++t)
    for (int u = 0; u < 8; ++u) plane.push_back(g.site(t, u, 6));
  const auto r = zero_set_from_cells(g, ring);
  REQUIRE(r.components.size() == 1);
  CHECK(r.components[0].period == std::array<int, 3>{0, 0, 0});
  CHECK(zero_set_from_cells(g, line_y).components[0].period == std::array<int, 3>{0, 1, 0});
  const auto p = zero_set_from_cells(g, plane);
  CHECK(p.components[0].multiply_wrapping);
  CHECK_THROWS_AS(zero_set_class(p, {{1, 1}}), std::domain_error);
  pair = line_y;
  for (int t = 0; t < 8; ++t) pair.push_back(g.site(t, 1, 5));
  const auto two = zero_set_from_cells(g, pair);
  REQUIRE(two.components.size() == 2);
  CHECK(zero_set_class(two, {{1, 1}, {1, -1}}) == std::array<int, 3>{-1, 1, 0});
}

TEST_CASE("class of a wrapping curve with multiplicity two") {
  const fixtures::LineCurve curve(16);
  const auto report = zero_set_from_cells(curve.g, curve.cells());
  REQUIRE(report.components.size() == 1);
  CHECK(zero_set_class(report, {{2, +1}}) == std::array<int, 3>{2, 0, 0});
  CHECK(zero_set_class(report, {{2, -1}}) == std::array<int, 3>{-2, 0, 0});
  CHECK(zero_set_class(report, {{1, +1}}) == std::array<int, 3>{1, 0, 0});
  CHECK_THROWS_AS(zero_set_class(report, {{2, 0}}), std::domain_error);
  CHECK_THROWS_AS(zero_set_class(report, {}), std::invalid_argument);

  // The class of Z is twice the first Chern class of the line bundle: pair it with a unit flux
  // through the x2-x3 tori.
  const auto a = uniform_flux<double>(curve.g, Plane::p23, 1);
  const std::array<int, 3> twice_flux{2 * chern_flux(a, Plane::p23, 0), 2 * chern_flux(a, Plane::p31, 0), 2 * chern_flux(a, Plane::p12, 0)};
  CHECK(zero_set_class(report, {{2, +1}}) == twice_flux);
}

TEST_CASE("class is translation invariant") {
  const LatticeGeometry g(8, 4.0);
  Rng rng(4);
  std::uniform_int_distribution<int> shift(0, 7);
  std::vector<CellIndex> cells;
  for (int t = 0; t < 8; ++t) cells.push_back(g.site(t, t, 2));
  for (int t = 0; t < 8; ++t) cells.push_back(g.site(t + 1, t, 2));
  const auto base = zero_set_class(zero_set_from_cells(g, cells), {{1, 1}});
  CHECK(base == std::array<int, 3>{1, 1, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const int dx = shift(rng), dy = shift(rng), dz = shift(rng);
    std::vector<CellIndex> moved;
    for (CellIndex c : cells) {
      const auto x = g.coords(c);
      moved.push_back(g.site(x[0] + dx, x[1] + dy, x[2] + dz));
    }
    CHECK(zero_set_class(zero_set_from_cells(g, moved), {{1, 1}}) == base);
  }
}

TEST_CASE("Hölder exponent of synthetic power laws") {
  // Reference fits from oracles/holder.py on 16^3, annulus [2h, 6h].
  const fixtures::LineCurve curve(16);
  const auto report = zero_set_from_cells(curve.g, curve.cells());
  const auto options = HolderOptions::defaults(curve.g);
  const auto half = holder_exponent(curve.g, fixtures::holder_amplitude(curve, 0.5), report, options);
  CHECK(half.exponent == doctest::Approx(0.5100051607).epsilon(1e-9));
  CHECK(half.accepted);
  CHECK(half.r_squared > 0.999);
  const auto one = holder_exponent(curve.g, fixtures::holder_amplitude(curve, 1.0), report, options);
  CHECK(one.exponent == doctest::Approx(1.0200103215).epsilon(1e-9));
  CHECK(one.samples == half.samples);
  for (double gamma : {0.5, 1.0, 1.5}) {
    const auto fit = holder_exponent(curve.g, fixtures::holder_amplitude(curve, gamma), report, options);
    CHECK(std::abs(fit.exponent - gamma) < 0.05 * std::max(1.0, gamma));
  }
}

TEST_CASE("Hölder fit guards") {
  const fixtures::LineCurve curve(16);
  const auto amp = fixtures::holder_amplitude(curve, 0.5);
  CHECK_THROWS_AS(holder_exponent(curve.g, amp, ZeroSetReport{}, HolderOptions::defaults(curve.g)), std::domain_error);
  const auto report = zero_set_from_cells(curve.g, curve.cells());
  CHECK_THROWS_AS(holder_exponent(curve.g, amp, report, {2.0, 2.05}), std::domain_error);
  const auto flat = holder_exponent(curve.g, Eigen::VectorXd::Ones(curve.g.sites()), report, HolderOptions::defaults(curve.g));
  CHECK(flat.exponent == 0.0);
  CHECK(!flat.accepted);
}

TEST_CASE("distance to the zero set") {
  const LatticeGeometry g(8, 4.0);
  const auto report = zero_set_from_cells(g, {g.site(3, 3, 3)});
  const auto dist = distance_to_zero_set(g, report);
  CHECK(dist(g.site(3, 3, 3)) == doctest::Approx(std::sqrt(0.75) * 0.5));
  CHECK(dist(g.site(7, 3, 3)) == doctest::Approx(std::sqrt(3.5 * 3.5 + 0.5) * 0.5));
  CHECK(dist(g.site(0, 3, 3)) == doctest::Approx(std::sqrt(3.5 * 3.5 + 0.5) * 0.5));
}

TEST_CASE("half-winding fixture has monodromy -1 around the curve") {
  const fixtures::LineCurve curve(16);
  const auto psi = fixtures::half_winding(curve);
  double worst = 0;
  for (Index s = 0; s < curve.g.sites(); ++s) worst = std::max(worst, moment_map(psi.at(s)).norm());
  CHECK(worst < 1e-14);
  for (auto [lo, hi] : {std::pair{7, 8}, std::pair{5, 10}, std::pair{2, 13}})
    for (int x1 : {0, 5}) CHECK(z2_monodromy(psi, fixtures::square_loop(curve.g, x1, lo, hi)) == -1);
  // Contractible loops away from the curve.
  CHECK(z2_monodromy(psi, fixtures::square_loop(curve.g, 3, 1, 4)) == +1);
  CHECK(z2_monodromy(psi, fixtures::square_loop(curve.g, 3, 9, 12)) == +1);
  // Loop in a plane containing the curve direction does not link it.
  std::vector<Index> flat;
  for (int t = 0; t < 16; ++t) flat.push_back(curve.g.site(t, 4, 4));
  CHECK(z2_monodromy(psi, flat) == +1);
}

TEST_CASE("monodromy is gauge invariant and guarded") {
  Rng rng(5);
  const fixtures::LineCurve curve(16);
  const auto psi = fixtures::half_winding(curve);
  const auto [a2, psi2] = gauge_transform(random_gauge_function<double>(curve.g, rng), GaugeFieldd(curve.g), psi);
  CHECK(z2_monodromy(psi2, fixtures::square_loop(curve.g, 2, 5, 10)) == -1);
  CHECK(z2_monodromy(psi2, fixtures::square_loop(curve.g, 2, 1, 4)) == +1);

  CHECK_THROWS_AS(z2_monodromy(psi, {curve.g.site(0, 0, 0), curve.g.site(2, 0, 0)}), std::invalid_argument);
  CHECK_THROWS_AS(z2_monodromy(psi, {curve.g.site(0, 0, 0)}), std::invalid_argument);
  CHECK_THROWS_AS(z2_monodromy(psi, fixtures::square_loop(curve.g, 0, 5, 10), {10.0}), std::domain_error);
  CHECK_THROWS_AS(z2_monodromy(SpinorFieldd(curve.g, 3), fixtures::square_loop(curve.g, 0, 5, 10)), std::invalid_argument);
}
