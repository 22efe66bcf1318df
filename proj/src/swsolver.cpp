#include "gsw/swsolver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gsw/random_fields.hpp"

namespace gsw {
namespace {

void check_compatible(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi) {
  require_same_geometry(psi.geometry(), a.geometry());
  require_same_geometry(psi.geometry(), b.geometry());
  if (b.rank() != psi.rank()) throw std::invalid_argument("background rank does not match spinor rank");
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi / 2)) throw std::invalid_argument("alpha must lie in [0, pi/2]");
}

struct Mixing {
  double curvature;  // sin^2 alpha
  double moment;     // cos^2 alpha
};

Mixing mixing(double alpha) {
  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  return {s * s, c * c};
}

double min_amplitude(const SpinorFieldd& psi) { return site_amplitude(psi).minCoeff(); }

PlaquetteFieldd mixed_curvature_residual(const GaugeFieldd& a, const SpinorFieldd& psi, double curvature_weight, double moment_weight) {
  auto r = curvature(a);
  r.values() *= curvature_weight;
  r.values() -= moment_weight * moment_map_field(psi).values();
  return r;
}

double l2_norm_squared(const SpinorFieldd& psi) { return l2_inner(psi, psi); }

void normalize(SpinorFieldd& psi) {
  const double norm = l2_norm(psi);
  if (!(norm > 0.0)) throw std::invalid_argument("cannot normalize a vanishing spinor field");
  psi *= 1.0 / norm;
}

EnergyGradient gradient_impl(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha, bool project) {
  check_compatible(a, b, psi);
  check_alpha(alpha);
  const auto& g = psi.geometry();
  const double h = g.spacing();
  const int n = psi.rank();
  const auto [sw, cw] = mixing(alpha);

  const SpinorFieldd v = dirac_residual(a, b, psi);
  const PlaquetteFieldd r = mixed_curvature_residual(a, psi, sw, cw);

  // Spinor part: D(D Psi) + cos^2(alpha) R(x) psi_k(x) i.
  SpinorFieldd spinor = dirac_residual(a, b, v);
  for (Index s = 0; s < g.sites(); ++s) {
    const auto rq = Quaterniond::pure(r.triple(s));
    for (int k = 0; k < n; ++k) spinor.set_value(s, k, spinor.value(s, k) + cw * (rq * times_i(psi.value(s, k))));
  }
  if (project) {
    const double along = l2_inner(spinor, psi) / l2_inner(psi, psi);
    spinor.coeffs() -= along * psi.coeffs();
  }

  // Link part. Dirac term: (h^2/2) [<V(x), e_d T+Psi(x) i> + <V(x+e_d), e_d T-Psi(x+e_d) i>].
  GaugeFieldd::Angles links = GaugeFieldd::Angles::Zero(3, g.sites());
  SpinorValued fwd(4, n);
  SpinorValued bwd(4, n);
  const double dirac_scale = 0.5 * h * h;
  for (Index s = 0; s < g.sites(); ++s) {
    for (int d = 0; d < 3; ++d) {
      const Index up = g.neighbor(s, d, +1);
      const auto e = complex_structure_unit<double>(d + 1);
      detail::transport(psi, a, b, s, d, +1, fwd);
      detail::transport(psi, a, b, up, d, -1, bwd);
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += real_inner(v.value(s, k), e * times_i(component(fwd, k)));
        acc += real_inner(v.value(up, k), e * times_i(component(bwd, k)));
      }
      links(d, s) += dirac_scale * acc;
    }
  }
  // Curvature term: h sin^2(alpha) R_p(y) dP_p/dtheta, scattered over the four plaquette edges.
  for (Index s = 0; s < g.sites(); ++s) {
    for (Plane p : kPlanes) {
      const auto [mu, nu, normal] = plane_axes(p);
      (void)normal;
      const double w = h * sw * r.value(s, p);
      links(mu, s) += w;
      links(nu, g.neighbor(s, mu, +1)) += w;
      links(mu, g.neighbor(s, nu, +1)) -= w;
      links(nu, s) -= w;
    }
  }
  return {std::move(links), std::move(spinor)};
}

// Retraction step: theta -= (t/h) dE/dtheta (descent in the connection a = theta/h),
// Psi -= t grad, then renormalize to the unit sphere.
void take_step(const GaugeFieldd& a, const SpinorFieldd& psi, const EnergyGradient& grad, double t, GaugeFieldd& a_out, SpinorFieldd& psi_out) {
  const double h = a.geometry().spacing();
  a_out = GaugeFieldd(a.geometry(), a.angles() - (t / h) * grad.links);
  psi_out = psi;
  psi_out.coeffs() -= t * grad.spinor.coeffs();
  normalize(psi_out);
}

}  // namespace

SpinorFieldd dirac_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi) {
  check_compatible(a, b, psi);
  const auto& g = psi.geometry();
  const int n = psi.rank();
  const double inv = 1.0 / (2.0 * g.spacing());
  SpinorFieldd out(g, n);
  SpinorValued fwd(4, n);
  SpinorValued bwd(4, n);
  for (Index s = 0; s < g.sites(); ++s) {
    for (int d = 0; d < 3; ++d) {
      const auto e = complex_structure_unit<double>(d + 1);
      detail::transport(psi, a, b, s, d, +1, fwd);
      detail::transport(psi, a, b, s, d, -1, bwd);
      for (int k = 0; k < n; ++k) {
        const Quaterniond diff = (component(fwd, k) - component(bwd, k)) * inv;
        out.set_value(s, k, out.value(s, k) + e * diff);
      }
    }
  }
  return out;
}

PlaquetteFieldd moment_map_field(const SpinorFieldd& psi) {
  PlaquetteFieldd out(psi.geometry());
  for (Index s = 0; s < psi.geometry().sites(); ++s) out.values().col(s) = moment_map(psi.at(s));
  return out;
}

SwResidual sw_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  return {dirac_residual(a, b, psi), mixed_curvature_residual(a, psi, epsilon * epsilon, 1.0)};
}

BlowupResidual blowup_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha) {
  check_alpha(alpha);
  const auto [sw, cw] = mixing(alpha);
  return {l2_norm(psi) - 1.0, dirac_residual(a, b, psi), mixed_curvature_residual(a, psi, sw, cw)};
}

double l2_norm_squared(const PlaquetteFieldd& t) {
  CompensatedSum<double> sum;
  const auto& v = t.values();
  for (Index c = 0; c < v.cols(); ++c)
    for (int r = 0; r < 3; ++r) sum.add(v(r, c) * v(r, c));
  return t.geometry().cell_volume() * sum.value();
}

double energy(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha) {
  const auto res = blowup_residual(a, b, psi, alpha);
  return 0.5 * l2_norm_squared(res.dirac) + 0.5 * l2_norm_squared(res.curvature);
}

double residual_norm(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha) {
  return std::sqrt(2.0 * energy(a, b, psi, alpha));
}

EnergyGradient energy_gradient(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha) {
  return gradient_impl(a, b, psi, alpha, true);
}

EnergyGradient energy_gradient_unprojected(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha) {
  return gradient_impl(a, b, psi, alpha, false);
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::line_search_failure:
      return "line_search_failure";
  }
  return "unknown";
}

bool is_failure(const SolveReport& report, const SolverOptions& options) {
  if (report.status == SolveStatus::line_search_failure) return true;
  return options.require_convergence && report.status == SolveStatus::max_iterations;
}

SolveReport solve(const GaugeFieldd& a0, const BackgroundFieldd& b, const SpinorFieldd& psi0, double alpha, const SolverOptions& options) {
  check_compatible(a0, b, psi0);
  check_alpha(alpha);
  if (!(l2_norm(psi0) > 0.0)) throw std::invalid_argument("initial spinor must be nonzero");
  const auto start = std::chrono::steady_clock::now();
  const double h = a0.geometry().spacing();

  GaugeFieldd a = a0;
  SpinorFieldd psi = psi0;
  normalize(psi);
  double e = energy(a, b, psi, alpha);
  std::vector<double> trace{e};
  if (options.callback) options.callback({0, e, 0.0, min_amplitude(psi)});

  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  GaugeFieldd a_trial = a;
  SpinorFieldd psi_trial = psi;
  if (e < options.tol) {
    status = SolveStatus::converged;
  } else {
    while (iterations < options.max_iter) {
      const auto grad = energy_gradient(a, b, psi, alpha);
      const double slope = grad.links.squaredNorm() / h + l2_inner(grad.spinor, grad.spinor);
      if (!(slope > 0.0)) {
        status = SolveStatus::line_search_failure;
        break;
      }
      double t = options.initial_step;
      double e_trial = 0.0;
      bool accepted = false;
      while (t >= options.step_floor) {
        take_step(a, psi, grad, t, a_trial, psi_trial);
        e_trial = energy(a_trial, b, psi_trial, alpha);
        if (e_trial <= e - options.armijo * t * slope) {
          accepted = true;
          break;
        }
        t *= options.backtrack;
      }
      if (!accepted) {
        status = SolveStatus::line_search_failure;
        break;
      }
      std::swap(a, a_trial);
      std::swap(psi, psi_trial);
      e = e_trial;
      ++iterations;
      trace.push_back(e);
      if (options.callback) options.callback({iterations, e, t, min_amplitude(psi)});
      if (e < options.tol) {
        status = SolveStatus::converged;
        break;
      }
    }
  }

  const double amp = min_amplitude(psi);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {status, alpha, std::move(a), std::move(psi), std::move(trace), iterations, amp, amp < options.low_amplitude_threshold, wall};
}

ContinuationResult continue_alpha(const std::vector<double>& schedule, const GaugeFieldd& a0, const BackgroundFieldd& b, const SpinorFieldd& psi0,
                                  const SolverOptions& options) {
  if (schedule.empty()) throw std::invalid_argument("alpha schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] >= 0.0 && schedule[i] < std::numbers::pi / 2)) throw std::invalid_argument("alpha schedule entries must lie in [0, pi/2)");
    if (i > 0 && !(schedule[i] < schedule[i - 1])) throw std::invalid_argument("alpha schedule must be strictly decreasing");
  }
  ContinuationResult result;
  const GaugeFieldd* a = &a0;
  const SpinorFieldd* psi = &psi0;
  for (const double alpha : schedule) {
    auto report = solve(*a, b, *psi, alpha, options);
    const double e = report.energy_trace.back();
    ContinuationState state{alpha,           std::tan(alpha), std::move(report.a), std::move(report.psi), e, std::sqrt(2.0 * e),
                            report.min_amplitude, report.iterations, report.status, std::move(report.energy_trace)};
    if (is_failure(report, options)) {
      result.failed = std::move(state);
      break;
    }
    result.rungs.push_back(std::move(state));
    a = &result.rungs.back().a;
    psi = &result.rungs.back().psi;
  }
  return result;
}

SpinorFieldd constant_solution(const LatticeGeometry& g, int n, const Quaterniond& q0) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("constant solution needs an even number of spinors");
  SpinorFieldd psi(g, n);
  const Quaterniond q1 = q0 * Quaterniond::unit_j();
  for (Index s = 0; s < g.sites(); ++s)
    for (int k = 0; k < n; ++k) psi.set_value(s, k, k % 2 == 0 ? q0 : q1);
  normalize(psi);
  return psi;
}

InitialState random_initial_state(const LatticeGeometry& g, int n, double link_amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto a = random_gauge_field<double>(g, link_amplitude, rng);
  auto psi = random_spinor_field<double>(g, n, rng);
  normalize(psi);
  return {std::move(a), std::move(psi)};
}

}  // namespace gsw
