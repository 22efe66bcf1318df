#pragma once

#include <array>
#include <optional>
#include <vector>

#include "gsw/lattice.hpp"

namespace gsw {

// Diagnostics for limit configurations at alpha -> 0: horizontal (downstairs)
// Fueter residual, blow-up set extraction, Hölder fits, Z/2 monodromy for
// n = 2, and the homology class of the zero set.

/// Removes from v the components along the vertical span {K(Psi), I1 K(Psi), I2 K(Psi), I3 K(Psi)},
/// K(Psi) = Psi i. These four vectors are mutually orthogonal with norm |Psi|, so this is an
/// orthogonal projection. Returns v unchanged where Psi = 0.
SpinorValued horizontal_projection(const SpinorValued& psi, const SpinorValued& v);

struct HorizontalResidual {
  SpinorFieldd field;
  double norm;
};

/// Pointwise horizontal part of D Psi and its L2 norm. Requires |mu(Psi(x))| <= mu_tolerance |Psi(x)|^2
/// at every site; throws std::domain_error otherwise.
HorizontalResidual horizontal_fueter_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double mu_tolerance = 1e-8);

/// Horizontal projection of an arbitrary field v, site by site, relative to Psi.
SpinorFieldd horizontal_part(const SpinorFieldd& psi, const SpinorFieldd& v);

/// psi_1 conj(psi_2): U(1)-invariant, but on mu^{-1}(0) it is imaginary and does not
/// separate orbits (q and q e^{j beta} give the same value).
Quaterniond quadratic_invariant(const SpinorValued& psi);

/// Representative q in H of the class of Psi = (psi_1, psi_2) in H^2 // U(1) = H / ±1.
/// Writing psi_2 = psi_1 (c + j z) with c, z complex, the orbit point with arg z = 0
/// is Psi e^{-i arg(z)/2}, and q = psi_1 e^{-i arg(z)/2}. Defined up to sign; U(1)
/// invariant as a ±-class. Returns nullopt where psi_1 = 0 or z = 0.
std::optional<Quaterniond> quotient_representative(const SpinorValued& psi);

/// Lattice cell, identified by the site index of its lower corner.
using CellIndex = Index;

struct ZeroComponent {
  std::vector<CellIndex> cells;  // ascending
  /// Primitive homology generator of the component (first nonzero entry positive),
  /// or zero for a contractible component.
  std::array<int, 3> period{0, 0, 0};
  /// True when the component wraps in two or more independent directions.
  bool multiply_wrapping = false;
};

struct HolderFit {
  double exponent;
  double r_squared;
  int samples;
  bool accepted;
};

struct MonodromyRecord {
  int loop_id;
  int sign;
};

struct ZeroSetReport {
  double threshold;
  std::vector<CellIndex> cells;  // ascending
  std::vector<int> labels;       // component id per entry of `cells`
  std::vector<ZeroComponent> components;
  std::optional<HolderFit> holder;
  std::vector<MonodromyRecord> monodromies;
  std::optional<std::array<int, 3>> homology_class;

  bool empty() const { return cells.empty(); }
};

/// Cells having at least one corner with amplitude < delta, split into 6-connected
/// components on the periodic lattice (deterministic scan order).
ZeroSetReport zero_set(const LatticeGeometry& g, const Eigen::VectorXd& amplitude, double delta);

/// Report for a prescribed cell set (synthetic curves).
ZeroSetReport zero_set_from_cells(const LatticeGeometry& g, std::vector<CellIndex> cells, double threshold = 0.0);

struct HolderOptions {
  double inner_radius;  // physical units
  double outer_radius;
  double min_r_squared = 0.9;
  int min_samples = 8;

  /// Annulus [2h, 6h].
  static HolderOptions defaults(const LatticeGeometry& g) { return {2.0 * g.spacing(), 6.0 * g.spacing()}; }
};

/// Lattice distance from every site to the nearest zero-cell centre.
Eigen::VectorXd distance_to_zero_set(const LatticeGeometry& g, const ZeroSetReport& report);

/// Least-squares slope of log|Psi| against log dist(., Z) over sites in the annulus.
/// Throws std::domain_error for an empty zero set or too few samples.
HolderFit holder_exponent(const LatticeGeometry& g, const Eigen::VectorXd& amplitude, const ZeroSetReport& report, const HolderOptions& options);

struct MonodromyOptions {
  double delta = 0.0;
  /// Successive lifts must be closer than this angle.
  double max_step_angle = 1.5707963267948966;
};

/// Holonomy sign (+1 or -1) of the H/±1 representative along a closed nearest-neighbour
/// loop of sites (n = 2). The final site may repeat the first. Throws std::domain_error if
/// the loop meets |Psi| <= delta, leaves the chart, or a step is not resolvable.
int z2_monodromy(const SpinorFieldd& psi, const std::vector<Index>& loop, const MonodromyOptions& options = {});

struct ComponentOrientation {
  int multiplicity = 1;
  int orientation = 0;  // +1, -1; 0 = unoriented
};

/// Signed multiplicity-weighted intersection numbers (k1, k2, k3) of the zero curves with the
/// coordinate 2-tori {x1 = c}, {x2 = c}, {x3 = c}. Throws std::domain_error for an unoriented
/// or multiply wrapping component.
std::array<int, 3> zero_set_class(const ZeroSetReport& report, const std::vector<ComponentOrientation>& orientation);

}  // namespace gsw
