#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "gsw/lattice.hpp"

namespace gsw {

// Residuals of the Seiberg-Witten system with n spinors on the lattice torus.
//
// Orientation convention: the complex structures (I1, I2, I3) = left (i, j, k)
// pair with the coordinate directions (x1, x2, x3), and a 2-form F is read as
// the imaginary triple (F23, F31, F12).

/// D Psi = sum_j I_j nabla_j^{a ⊗ B} Psi with centered differences. Symmetric
/// with respect to l2_inner.
SpinorFieldd dirac_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi);

/// mu(Psi(x)) per site.
PlaquetteFieldd moment_map_field(const SpinorFieldd& psi);

struct SwResidual {
  SpinorFieldd dirac;
  PlaquetteFieldd curvature;  // eps^2 F_a - mu(Psi)
};

/// Residual of D Psi = 0, eps^2 F_a = mu(Psi). eps = 1 is the undeformed system,
/// eps = 0 leaves -mu(Psi) in the second slot.
SwResidual sw_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double epsilon);

struct BlowupResidual {
  double norm_defect;  // ||Psi||_{L2} - 1
  SpinorFieldd dirac;
  PlaquetteFieldd curvature;  // sin^2(alpha) F_A - cos^2(alpha) mu(Psi)
};

/// Residual of the blown-up system at mixing angle alpha in [0, pi/2].
BlowupResidual blowup_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha);

/// h^3 sum_x |T(x)|^2 for a per-site triple field.
double l2_norm_squared(const PlaquetteFieldd& t);

/// 1/2 ||D Psi||^2 + 1/2 ||sin^2(alpha) F_A - cos^2(alpha) mu(Psi)||^2.
double energy(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha);

struct EnergyGradient {
  /// dE/dtheta_d(x), laid out like GaugeField::angles().
  GaugeFieldd::Angles links;
  /// L2 gradient in Psi, projected orthogonally to Psi.
  SpinorFieldd spinor;
};

/// First variation of energy(). For a link direction dtheta and a spinor direction
/// dPsi tangent to the sphere, dE = sum(links .* dtheta) + l2_inner(spinor, dPsi).
EnergyGradient energy_gradient(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha);

/// Same as energy_gradient() but without the tangential projection of the spinor part.
EnergyGradient energy_gradient_unprojected(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha);

enum class SolveStatus { converged, max_iterations, line_search_failure };

std::string_view to_string(SolveStatus status);

struct IterationInfo {
  int iteration;
  double energy;
  double step;
  double min_amplitude;
};

using IterationCallback = std::function<void(const IterationInfo&)>;

struct SolverOptions {
  int max_iter = 50000;
  double tol = 1e-10;
  double initial_step = 1.0;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double step_floor = 1e-14;
  /// Iterates with min|Psi| below this are flagged (the U(1) action is not free at Psi = 0).
  double low_amplitude_threshold = 1e-6;
  /// Treat max_iterations as a failure for exit codes and continuation.
  bool require_convergence = false;
  IterationCallback callback;
};

struct SolveReport {
  SolveStatus status;
  double alpha;
  GaugeFieldd a;
  SpinorFieldd psi;
  std::vector<double> energy_trace;
  int iterations;
  double min_amplitude;
  bool low_amplitude;
  double wall_seconds;
};

bool is_failure(const SolveReport& report, const SolverOptions& options);

/// Projected gradient descent with Armijo backtracking on the unit L2 sphere.
/// The energy trace is monotone nonincreasing.
SolveReport solve(const GaugeFieldd& a0, const BackgroundFieldd& b, const SpinorFieldd& psi0, double alpha, const SolverOptions& options = {});

struct ContinuationState {
  double alpha;
  double epsilon;
  GaugeFieldd a;
  SpinorFieldd psi;
  double energy;
  double residual_norm;
  double min_amplitude;
  int iterations;
  SolveStatus status;
  std::vector<double> energy_trace;
};

struct ContinuationResult {
  std::vector<ContinuationState> rungs;
  /// Set when a rung failed; rungs then holds the completed prefix.
  std::optional<ContinuationState> failed;
  bool completed() const { return !failed.has_value(); }
};

/// Solves rung by rung along a strictly decreasing alpha schedule in [0, pi/2),
/// warm-starting each rung from the previous one.
ContinuationResult continue_alpha(const std::vector<double>& schedule, const GaugeFieldd& a0, const BackgroundFieldd& b, const SpinorFieldd& psi0,
                                  const SolverOptions& options = {});

/// sqrt(||D Psi||^2 + ||sin^2 F - cos^2 mu||^2) = sqrt(2 E).
double residual_norm(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double alpha);

/// Constant Psi = (q0, q0 j, q0, q0 j, ...) normalized in L2; mu vanishes identically,
/// so with a = 0 and B = id this solves the system at every alpha. n must be even.
SpinorFieldd constant_solution(const LatticeGeometry& g, int n, const Quaterniond& q0);

struct InitialState {
  GaugeFieldd a;
  SpinorFieldd psi;
};

/// Links uniform in (-pi, pi] times `link_amplitude`, spinor coefficients standard
/// normal then normalized; deterministic in `seed`.
InitialState random_initial_state(const LatticeGeometry& g, int n, double link_amplitude, std::uint64_t seed);

}  // namespace gsw
