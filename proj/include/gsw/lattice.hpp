#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsw/quaternion.hpp"
#include "gsw/spinor.hpp"

namespace gsw {

using Index = Eigen::Index;

/// Neumaier-compensated sum. Summation order is the call order, so results are
/// reproducible bit-for-bit for a fixed traversal.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    const Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  Scalar value() const { return sum_ + carry_; }

 private:
  Scalar sum_{0};
  Scalar carry_{0};
};

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar theta) {
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  Scalar r = std::remainder(theta, two_pi);
  if (r <= -std::numbers::pi_v<Scalar>) r += two_pi;
  return r;
}

/// Coordinate planes, numbered so that plane p carries the p-th entry of the
/// curvature triple (F23, F31, F12).
enum class Plane : int { p23 = 0, p31 = 1, p12 = 2 };

inline constexpr std::array<Plane, 3> kPlanes{Plane::p23, Plane::p31, Plane::p12};

/// Ordered (0-based) directions spanning the plane, and the normal direction.
struct PlaneAxes {
  int first;
  int second;
  int normal;
};

constexpr PlaneAxes plane_axes(Plane p) {
  switch (p) {
    case Plane::p23:
      return {1, 2, 0};
    case Plane::p31:
      return {2, 0, 1};
    default:
      return {0, 1, 2};
  }
}

/// Periodic cubic lattice of N^3 sites on the flat torus of side L.
/// Site index s = x1 + N*x2 + N^2*x3 (x1 fastest). Directions are 0-based
/// inside the lattice API; operations mirroring the continuum use axes 1..3.
class LatticeGeometry {
 public:
  LatticeGeometry(int sites_per_axis, double length) : n_(sites_per_axis), length_(length) {
    if (sites_per_axis < 4) throw std::invalid_argument("lattice needs N >= 4 sites per axis, got N = " + std::to_string(sites_per_axis));
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("box length L must be positive and finite");
  }

  int size() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  Index sites() const { return Index(n_) * n_ * n_; }
  double cell_volume() const {
    const double h = spacing();
    return h * h * h;
  }

  Index site(int x1, int x2, int x3) const { return wrap(x1) + Index(n_) * (wrap(x2) + Index(n_) * wrap(x3)); }

  std::array<int, 3> coords(Index s) const {
    const int x1 = static_cast<int>(s % n_);
    const int x2 = static_cast<int>((s / n_) % n_);
    const int x3 = static_cast<int>(s / (Index(n_) * n_));
    return {x1, x2, x3};
  }

  /// Site one step from s along direction d (0..2); step = +1 or -1.
  Index neighbor(Index s, int d, int step) const {
    const Index stride = d == 0 ? 1 : (d == 1 ? Index(n_) : Index(n_) * n_);
    const int x = static_cast<int>((s / stride) % n_);
    if (step > 0) return x == n_ - 1 ? s - stride * (n_ - 1) : s + stride;
    return x == 0 ? s + stride * (n_ - 1) : s - stride;
  }

  /// Minimal-image displacement between integer lattice coordinates.
  int periodic_delta(int from, int to) const {
    int d = (to - from) % n_;
    if (d < 0) d += n_;
    if (2 * d > n_) d -= n_;
    return d;
  }

  friend bool operator==(const LatticeGeometry&, const LatticeGeometry&) = default;

 private:
  int wrap(int x) const {
    const int r = x % n_;
    return r < 0 ? r + n_ : r;
  }

  int n_;
  double length_;
};

inline void require_same_geometry(const LatticeGeometry& a, const LatticeGeometry& b) {
  if (!(a == b)) throw std::invalid_argument("geometry mismatch between lattice fields");
}

/// Compact U(1) link angles theta_d(x) in (-pi, pi] for the connection a (or A).
template <typename Scalar>
class GaugeField {
 public:
  using Angles = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  explicit GaugeField(const LatticeGeometry& geometry) : geometry_(geometry), angles_(Angles::Zero(3, geometry.sites())) {}

  /// Wraps every entry on construction.
  GaugeField(const LatticeGeometry& geometry, Angles angles) : geometry_(geometry), angles_(std::move(angles)) {
    if (angles_.cols() != geometry_.sites()) throw std::invalid_argument("link array size does not match geometry");
    angles_ = angles_.unaryExpr([](Scalar t) { return wrap_angle(t); });
  }

  const LatticeGeometry& geometry() const { return geometry_; }
  Scalar angle(Index site, int d) const { return angles_(d, site); }
  void set_angle(Index site, int d, Scalar theta) { angles_(d, site) = wrap_angle(theta); }
  std::complex<Scalar> phase(Index site, int d) const { return std::polar(Scalar(1), angles_(d, site)); }

  /// (3, sites): site-major, direction-minor in memory.
  const Angles& angles() const { return angles_; }

 private:
  LatticeGeometry geometry_;
  Angles angles_;
};

/// Fixed SU(n) link matrices of the background connection B. Link (x, d)
/// transports from x + e_d to x.
template <typename Scalar>
class BackgroundField {
 public:
  using Matrix = ComplexMatrix<Scalar>;

  static BackgroundField identity(const LatticeGeometry& geometry, int n) { return BackgroundField(geometry, n); }

  const LatticeGeometry& geometry() const { return geometry_; }
  int rank() const { return n_; }
  bool is_identity() const { return identity_; }

  const Matrix& link(Index site, int d) const { return links_[static_cast<std::size_t>(3 * site + d)]; }

  void set_link(Index site, int d, const Matrix& u) {
    if (u.rows() != n_ || u.cols() != n_) throw std::invalid_argument("background link has wrong dimension");
    links_[static_cast<std::size_t>(3 * site + d)] = u;
    identity_ = false;
  }

  /// Largest of max|U^H U - 1| and |det U - 1| over all links.
  Scalar unitarity_defect() const {
    Scalar worst(0);
    const Matrix id = Matrix::Identity(n_, n_);
    for (const auto& u : links_) {
      worst = std::max(worst, (u.adjoint() * u - id).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(u.determinant() - std::complex<Scalar>(1)));
    }
    return worst;
  }

  /// Projects every link to SU(n): polar factor, then the determinant phase is divided out.
  void reunitarize() {
    for (auto& u : links_) u = project_special_unitary(u);
    identity_ = false;
  }

  static Matrix project_special_unitary(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU() * svd.matrixV().adjoint();
    const Scalar phase = std::arg(u.determinant());
    return u * std::polar(Scalar(1), -phase / static_cast<Scalar>(m.rows()));
  }

 private:
  BackgroundField(const LatticeGeometry& geometry, int n)
      : geometry_(geometry), n_(n), links_(static_cast<std::size_t>(3 * geometry.sites()), Matrix::Identity(n, n)) {
    if (n < 1) throw std::invalid_argument("spinor rank n must be positive");
  }

  LatticeGeometry geometry_;
  int n_;
  std::vector<Matrix> links_;
  bool identity_ = true;
};

/// One SpinorValue per site; column site*n + k holds psi_k(site).
template <typename Scalar>
class SpinorField {
 public:
  using Coeffs = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;

  SpinorField(const LatticeGeometry& geometry, int n) : geometry_(geometry), n_(n), coeffs_(Coeffs::Zero(4, geometry.sites() * n)) {
    if (n < 1) throw std::invalid_argument("spinor rank n must be positive");
  }

  SpinorField(const LatticeGeometry& geometry, int n, Coeffs coeffs) : geometry_(geometry), n_(n), coeffs_(std::move(coeffs)) {
    if (n < 1) throw std::invalid_argument("spinor rank n must be positive");
    if (coeffs_.cols() != geometry_.sites() * n) throw std::invalid_argument("spinor array size does not match geometry");
  }

  const LatticeGeometry& geometry() const { return geometry_; }
  int rank() const { return n_; }

  auto at(Index site) { return coeffs_.middleCols(site * n_, n_); }
  auto at(Index site) const { return coeffs_.middleCols(site * n_, n_); }

  Quaternion<Scalar> value(Index site, int k) const { return Quaternion<Scalar>::from_coeffs(coeffs_.col(site * n_ + k)); }
  void set_value(Index site, int k, const Quaternion<Scalar>& q) { coeffs_.col(site * n_ + k) << q.w, q.x, q.y, q.z; }

  Coeffs& coeffs() { return coeffs_; }
  const Coeffs& coeffs() const { return coeffs_; }

  SpinorField& operator+=(const SpinorField& o) {
    require_same_geometry(geometry_, o.geometry_);
    coeffs_ += o.coeffs_;
    return *this;
  }
  SpinorField& operator-=(const SpinorField& o) {
    require_same_geometry(geometry_, o.geometry_);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SpinorField& operator*=(Scalar s) {
    coeffs_ *= s;
    return *this;
  }
  friend SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
  friend SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
  friend SpinorField operator*(SpinorField a, Scalar s) { return a *= s; }
  friend SpinorField operator*(Scalar s, SpinorField a) { return a *= s; }

 private:
  LatticeGeometry geometry_;
  int n_;
  Coeffs coeffs_;
};

/// One real value per site and plane, rows ordered (23, 31, 12). Column s is
/// the ImaginaryTriple attached to site s.
template <typename Scalar>
class PlaquetteField {
 public:
  using Values = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  explicit PlaquetteField(const LatticeGeometry& geometry) : geometry_(geometry), values_(Values::Zero(3, geometry.sites())) {}

  const LatticeGeometry& geometry() const { return geometry_; }
  Scalar value(Index site, Plane p) const { return values_(static_cast<int>(p), site); }
  Scalar& value(Index site, Plane p) { return values_(static_cast<int>(p), site); }
  ImaginaryTriple<Scalar> triple(Index site) const { return values_.col(site); }

  Values& values() { return values_; }
  const Values& values() const { return values_; }

 private:
  LatticeGeometry geometry_;
  Values values_;
};

using GaugeFieldd = GaugeField<double>;
using BackgroundFieldd = BackgroundField<double>;
using SpinorFieldd = SpinorField<double>;
using PlaquetteFieldd = PlaquetteField<double>;

namespace detail {

/// Writes T_{+d} Psi(x) (step = +1) or T_{-d} Psi(x) (step = -1) into `out` (4 x n):
///   T_{+d} Psi(x) = Psi(x+e_d) B_d(x) e^{i theta_d(x)}
///   T_{-d} Psi(x) = Psi(x-e_d) B_d(x-e_d)^H e^{-i theta_d(x-e_d)}
template <typename Scalar>
void transport(const SpinorField<Scalar>& psi, const GaugeField<Scalar>& a, const BackgroundField<Scalar>& b, Index site, int d, int step,
               SpinorValue<Scalar>& out) {
  const auto& g = psi.geometry();
  const int n = psi.rank();
  const Index from = g.neighbor(site, d, step);
  const Index link_site = step > 0 ? site : from;
  const std::complex<Scalar> phase = step > 0 ? a.phase(link_site, d) : std::conj(a.phase(link_site, d));
  if (b.is_identity()) {
    for (int l = 0; l < n; ++l) set_component(out, l, times_complex(psi.value(from, l), phase));
    return;
  }
  const auto& u = b.link(link_site, d);
  for (int l = 0; l < n; ++l) {
    Quaternion<Scalar> acc;
    for (int k = 0; k < n; ++k) {
      const std::complex<Scalar> c = step > 0 ? u(k, l) : std::conj(u(l, k));
      acc += times_complex(psi.value(from, k), c * phase);
    }
    set_component(out, l, acc);
  }
}

}  // namespace detail

/// Centered covariant difference along `axis` (1..3), twisted by a ⊗ B:
/// (T_{+} Psi - T_{-} Psi) / (2h).
template <typename Scalar>
SpinorField<Scalar> covariant_derivative(const SpinorField<Scalar>& psi, const GaugeField<Scalar>& a, const BackgroundField<Scalar>& b, int axis) {
  if (axis < 1 || axis > 3) throw std::invalid_argument("axis must be 1, 2 or 3");
  require_same_geometry(psi.geometry(), a.geometry());
  require_same_geometry(psi.geometry(), b.geometry());
  if (b.rank() != psi.rank()) throw std::invalid_argument("background rank does not match spinor rank");
  const auto& g = psi.geometry();
  const int d = axis - 1;
  const Scalar inv = Scalar(1) / (2 * static_cast<Scalar>(g.spacing()));
  SpinorField<Scalar> out(g, psi.rank());
  SpinorValue<Scalar> fwd(4, psi.rank());
  SpinorValue<Scalar> bwd(4, psi.rank());
  for (Index s = 0; s < g.sites(); ++s) {
    detail::transport(psi, a, b, s, d, +1, fwd);
    detail::transport(psi, a, b, s, d, -1, bwd);
    out.at(s) = (fwd - bwd) * inv;
  }
  return out;
}

/// theta_mu(x) + theta_nu(x+e_mu) - theta_mu(x+e_nu) - theta_nu(x), unwrapped.
template <typename Scalar>
Scalar raw_plaquette(const GaugeField<Scalar>& a, Index site, Plane p) {
  const auto& g = a.geometry();
  const auto [mu, nu, normal] = plane_axes(p);
  (void)normal;
  return a.angle(site, mu) + a.angle(g.neighbor(site, mu, +1), nu) - a.angle(g.neighbor(site, nu, +1), mu) - a.angle(site, nu);
}

/// Wrapped plaquette angles in (-pi, pi].
template <typename Scalar>
PlaquetteField<Scalar> plaquette_angles(const GaugeField<Scalar>& a) {
  PlaquetteField<Scalar> out(a.geometry());
  for (Index s = 0; s < a.geometry().sites(); ++s)
    for (Plane p : kPlanes) out.value(s, p) = wrap_angle(raw_plaquette(a, s, p));
  return out;
}

/// F_a per site as (F23, F31, F12): wrapped plaquette angle / h^2.
template <typename Scalar>
PlaquetteField<Scalar> curvature(const GaugeField<Scalar>& a) {
  auto out = plaquette_angles(a);
  const Scalar h = static_cast<Scalar>(a.geometry().spacing());
  out.values() /= h * h;
  return out;
}

/// Smallest distance of any wrapped plaquette angle from the branch cut at ±pi.
template <typename Scalar>
Scalar wrap_margin(const GaugeField<Scalar>& a) {
  const auto angles = plaquette_angles(a);
  return std::numbers::pi_v<Scalar> - angles.values().cwiseAbs().maxCoeff();
}

/// Gauge transformation by site-wise U(1) angles g:
///   Psi(x) -> Psi(x) e^{i g(x)},   theta_d(x) -> theta_d(x) - (g(x+e_d) - g(x)).
/// With the link phase entering transport as e^{+i theta}, this is the sign for which
/// the covariant derivative is covariant (a -> a - dg).
template <typename Scalar>
std::pair<GaugeField<Scalar>, SpinorField<Scalar>> gauge_transform(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gauge, const GaugeField<Scalar>& a,
                                                                    const SpinorField<Scalar>& psi) {
  require_same_geometry(a.geometry(), psi.geometry());
  const auto& g = a.geometry();
  if (gauge.size() != g.sites()) throw std::invalid_argument("gauge function size does not match geometry");
  GaugeField<Scalar> a_out = a;
  SpinorField<Scalar> psi_out(g, psi.rank());
  for (Index s = 0; s < g.sites(); ++s) {
    for (int d = 0; d < 3; ++d) a_out.set_angle(s, d, a.angle(s, d) - (gauge(g.neighbor(s, d, +1)) - gauge(s)));
    const std::complex<Scalar> phase = std::polar(Scalar(1), gauge(s));
    for (int k = 0; k < psi.rank(); ++k) psi_out.set_value(s, k, times_complex(psi.value(s, k), phase));
  }
  return {std::move(a_out), std::move(psi_out)};
}

/// h^3 sum_x Re<Phi(x), Psi(x)>.
template <typename Scalar>
Scalar l2_inner(const SpinorField<Scalar>& phi, const SpinorField<Scalar>& psi) {
  require_same_geometry(phi.geometry(), psi.geometry());
  if (phi.rank() != psi.rank()) throw std::invalid_argument("spinor rank mismatch");
  CompensatedSum<Scalar> sum;
  const auto& a = phi.coeffs();
  const auto& b = psi.coeffs();
  for (Index c = 0; c < a.cols(); ++c)
    for (int r = 0; r < 4; ++r) sum.add(a(r, c) * b(r, c));
  return static_cast<Scalar>(phi.geometry().cell_volume()) * sum.value();
}

template <typename Scalar>
Scalar l2_norm(const SpinorField<Scalar>& psi) {
  return std::sqrt(l2_inner(psi, psi));
}

/// |Psi(x)| per site.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> site_amplitude(const SpinorField<Scalar>& psi) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> amp(psi.geometry().sites());
  for (Index s = 0; s < amp.size(); ++s) amp(s) = std::sqrt(squared_amplitude(psi.at(s)));
  return amp;
}

/// (1/2pi) sum of wrapped plaquette angles over the coordinate 2-torus of `plane`
/// at position `slice` along the normal direction.
template <typename Scalar>
Scalar chern_flux_value(const GaugeField<Scalar>& a, Plane plane, int slice) {
  const auto& g = a.geometry();
  const auto [mu, nu, normal] = plane_axes(plane);
  CompensatedSum<Scalar> sum;
  std::array<int, 3> x{};
  x[normal] = slice;
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      x[mu] = i;
      x[nu] = j;
      sum.add(wrap_angle(raw_plaquette(a, g.site(x[0], x[1], x[2]), plane)));
    }
  }
  return sum.value() / (2 * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
int chern_flux(const GaugeField<Scalar>& a, Plane plane, int slice) {
  return static_cast<int>(std::lround(chern_flux_value(a, plane, slice)));
}

/// Per-cube oriented sum of the six wrapped face angles, divided by 2pi. Integer
/// valued (Bianchi identity mod 2pi); nonzero entries are lattice monopoles.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> monopole_charges(const GaugeField<Scalar>& a) {
  const auto& g = a.geometry();
  const auto angles = plaquette_angles(a);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q(g.sites());
  for (Index s = 0; s < g.sites(); ++s) {
    Scalar sum(0);
    for (Plane p : kPlanes) {
      const int normal = plane_axes(p).normal;
      sum += angles.value(g.neighbor(s, normal, +1), p) - angles.value(s, p);
    }
    q(s) = sum / (2 * std::numbers::pi_v<Scalar>);
  }
  return q;
}

/// Link configuration carrying `quanta` flux quanta through every 2-torus of `plane`,
/// spread uniformly: every plaquette of that plane has angle 2pi*quanta/N^2 and all
/// other plaquettes vanish.
template <typename Scalar>
GaugeField<Scalar> uniform_flux(const LatticeGeometry& g, Plane plane, int quanta) {
  const int n = g.size();
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  if (std::abs(two_pi * quanta) >= std::numbers::pi_v<Scalar> * n * n) throw std::invalid_argument("flux per plaquette would reach the branch cut");
  const auto [mu, nu, normal] = plane_axes(plane);
  (void)normal;
  GaugeField<Scalar> a(g);
  for (Index s = 0; s < g.sites(); ++s) {
    const auto x = g.coords(s);
    a.set_angle(s, nu, two_pi * quanta * x[mu] / (Scalar(n) * n));
    if (x[mu] == n - 1) a.set_angle(s, mu, -two_pi * quanta * x[nu] / Scalar(n));
  }
  return a;
}

}  // namespace gsw
