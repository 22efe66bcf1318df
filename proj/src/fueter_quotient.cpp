#include "gsw/fueter_quotient.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gsw/swsolver.hpp"

namespace gsw {
namespace {

using Vec3i = std::array<int, 3>;

Vec3i cross(const Vec3i& a, const Vec3i& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

bool is_zero(const Vec3i& v) { return v[0] == 0 && v[1] == 0 && v[2] == 0; }

int dot(const Vec3i& a, const Vec3i& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3i primitive(Vec3i v) {
  const int g = std::gcd(std::gcd(std::abs(v[0]), std::abs(v[1])), std::abs(v[2]));
  for (int& c : v) c /= g;
  return v;
}

Vec3i normalize_sign(Vec3i v) {
  for (int c : v) {
    if (c == 0) continue;
    if (c < 0)
      for (int& e : v) e = -e;
    break;
  }
  return v;
}

// Homology generator of the subgroup spanned by the loop periods found while unwrapping.
void assign_period(ZeroComponent& comp, const std::vector<Vec3i>& periods) {
  const auto first = std::find_if(periods.begin(), periods.end(), [](const Vec3i& p) { return !is_zero(p); });
  if (first == periods.end()) return;
  const Vec3i base = primitive(*first);
  int multiple = 0;
  for (const auto& p : periods) {
    if (is_zero(p)) continue;
    if (!is_zero(cross(base, p))) {
      comp.multiply_wrapping = true;
      comp.period = {0, 0, 0};
      return;
    }
    multiple = std::gcd(multiple, std::abs(dot(p, base)) / dot(base, base));
  }
  comp.period = normalize_sign({base[0] * multiple, base[1] * multiple, base[2] * multiple});
}

// 6-connected components of the cell set, scanned in ascending cell order.
void label_components(const LatticeGeometry& g, ZeroSetReport& report) {
  const Index total = g.sites();
  std::vector<int> label_of(static_cast<std::size_t>(total), -1);
  std::vector<char> member(static_cast<std::size_t>(total), 0);
  for (CellIndex c : report.cells) member[static_cast<std::size_t>(c)] = 1;
  std::vector<Vec3i> unwrapped(static_cast<std::size_t>(total));
  const int n = g.size();

  for (CellIndex seed : report.cells) {
    if (label_of[static_cast<std::size_t>(seed)] >= 0) continue;
    const int id = static_cast<int>(report.components.size());
    ZeroComponent comp;
    std::vector<Vec3i> periods;
    std::deque<CellIndex> queue{seed};
    label_of[static_cast<std::size_t>(seed)] = id;
    unwrapped[static_cast<std::size_t>(seed)] = g.coords(seed);
    while (!queue.empty()) {
      const CellIndex c = queue.front();
      queue.pop_front();
      comp.cells.push_back(c);
      const Vec3i uc = unwrapped[static_cast<std::size_t>(c)];
      for (int d = 0; d < 3; ++d) {
        for (int step : {+1, -1}) {
          const CellIndex nb = g.neighbor(c, d, step);
          if (!member[static_cast<std::size_t>(nb)]) continue;
          Vec3i expected = uc;
          expected[d] += step;
          if (label_of[static_cast<std::size_t>(nb)] < 0) {
            label_of[static_cast<std::size_t>(nb)] = id;
            unwrapped[static_cast<std::size_t>(nb)] = expected;
            queue.push_back(nb);
          } else {
            const Vec3i& un = unwrapped[static_cast<std::size_t>(nb)];
            periods.push_back({(expected[0] - un[0]) / n, (expected[1] - un[1]) / n, (expected[2] - un[2]) / n});
          }
        }
      }
    }
    std::sort(comp.cells.begin(), comp.cells.end());
    assign_period(comp, periods);
    report.components.push_back(std::move(comp));
  }
  report.labels.clear();
  for (CellIndex c : report.cells) report.labels.push_back(label_of[static_cast<std::size_t>(c)]);
}

}  // namespace

SpinorValued horizontal_projection(const SpinorValued& psi, const SpinorValued& v) {
  if (psi.cols() != v.cols()) throw std::invalid_argument("spinor rank mismatch");
  const double norm2 = squared_amplitude(psi);
  SpinorValued out = v;
  if (!(norm2 > 0.0)) return out;
  const auto killing = killing_field(1.0, psi);
  const std::array<Quaterniond, 4> units{Quaterniond::identity(), Quaterniond::unit_i(), Quaterniond::unit_j(), Quaterniond::unit_k()};
  for (const auto& e : units) {
    SpinorValued basis(4, psi.cols());
    for (Index k = 0; k < psi.cols(); ++k) set_component(basis, k, e * component(killing, k));
    out -= (spinor_inner(v, basis) / norm2) * basis;
  }
  return out;
}

SpinorFieldd horizontal_part(const SpinorFieldd& psi, const SpinorFieldd& v) {
  require_same_geometry(psi.geometry(), v.geometry());
  SpinorFieldd out(psi.geometry(), psi.rank());
  for (Index s = 0; s < psi.geometry().sites(); ++s) out.at(s) = horizontal_projection(psi.at(s), v.at(s));
  return out;
}

HorizontalResidual horizontal_fueter_residual(const GaugeFieldd& a, const BackgroundFieldd& b, const SpinorFieldd& psi, double mu_tolerance) {
  for (Index s = 0; s < psi.geometry().sites(); ++s) {
    const double mu = moment_map(psi.at(s)).norm();
    if (mu > mu_tolerance * squared_amplitude(psi.at(s)))
      throw std::domain_error("moment map constraint violated at site " + std::to_string(s) + " (|mu| = " + std::to_string(mu) + ")");
  }
  auto field = horizontal_part(psi, dirac_residual(a, b, psi));
  const double norm = l2_norm(field);
  return {std::move(field), norm};
}

Quaterniond quadratic_invariant(const SpinorValued& psi) {
  if (psi.cols() != 2) throw std::invalid_argument("quadratic invariant needs n = 2");
  return component(psi, 0) * component(psi, 1).conjugate();
}

std::optional<Quaterniond> quotient_representative(const SpinorValued& psi) {
  if (psi.cols() != 2) throw std::invalid_argument("quotient representative needs n = 2");
  const Quaterniond p1 = component(psi, 0);
  const double n1 = p1.squared_norm();
  if (!(n1 > 0.0)) return std::nullopt;
  const Quaterniond u = p1.conjugate() * component(psi, 1) / n1;
  // u = c + j z with j (zr + zi i) = zr j - zi k.
  const double zr = u.y;
  const double zi = -u.z;
  if (zr == 0.0 && zi == 0.0) return std::nullopt;
  const double half = -0.5 * std::atan2(zi, zr);
  return times_complex(p1, std::polar(1.0, half));
}

ZeroSetReport zero_set(const LatticeGeometry& g, const Eigen::VectorXd& amplitude, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("zero-set threshold must be positive");
  if (amplitude.size() != g.sites()) throw std::invalid_argument("amplitude size does not match geometry");
  std::vector<char> flagged(static_cast<std::size_t>(g.sites()), 0);
  for (Index s = 0; s < g.sites(); ++s) {
    if (!(amplitude(s) < delta)) continue;
    // s is a corner of the 8 cells whose lower corners are s - {0,1}^3.
    for (int mask = 0; mask < 8; ++mask) {
      Index c = s;
      for (int d = 0; d < 3; ++d)
        if (mask & (1 << d)) c = g.neighbor(c, d, -1);
      flagged[static_cast<std::size_t>(c)] = 1;
    }
  }
  std::vector<CellIndex> cells;
  for (Index c = 0; c < g.sites(); ++c)
    if (flagged[static_cast<std::size_t>(c)]) cells.push_back(c);
  return zero_set_from_cells(g, std::move(cells), delta);
}

ZeroSetReport zero_set_from_cells(const LatticeGeometry& g, std::vector<CellIndex> cells, double threshold) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (CellIndex c : cells)
    if (c < 0 || c >= g.sites()) throw std::invalid_argument("cell index out of range");
  ZeroSetReport report;
  report.threshold = threshold;
  report.cells = std::move(cells);
  label_components(g, report);
  return report;
}

Eigen::VectorXd distance_to_zero_set(const LatticeGeometry& g, const ZeroSetReport& report) {
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(g.sites(), std::numeric_limits<double>::infinity());
  const int n = g.size();
  auto half_delta = [n](double from, double to) {
    double d = std::fmod(to - from, double(n));
    if (d < 0) d += n;
    return std::min(d, n - d);
  };
  std::vector<std::array<double, 3>> centres;
  centres.reserve(report.cells.size());
  for (CellIndex c : report.cells) {
    const auto x = g.coords(c);
    centres.push_back({x[0] + 0.5, x[1] + 0.5, x[2] + 0.5});
  }
  for (Index s = 0; s < g.sites(); ++s) {
    const auto x = g.coords(s);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centres) {
      const double d0 = half_delta(x[0], c[0]);
      const double d1 = half_delta(x[1], c[1]);
      const double d2 = half_delta(x[2], c[2]);
      best = std::min(best, d0 * d0 + d1 * d1 + d2 * d2);
    }
    dist(s) = std::sqrt(best) * g.spacing();
  }
  return dist;
}

HolderFit holder_exponent(const LatticeGeometry& g, const Eigen::VectorXd& amplitude, const ZeroSetReport& report, const HolderOptions& options) {
  if (report.empty()) throw std::domain_error("Hölder fit needs a nonempty zero set");
  if (amplitude.size() != g.sites()) throw std::invalid_argument("amplitude size does not match geometry");
  const Eigen::VectorXd dist = distance_to_zero_set(g, report);
  const double slack = 1e-9 * g.spacing();
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index s = 0; s < g.sites(); ++s) {
    if (dist(s) < options.inner_radius - slack || dist(s) > options.outer_radius + slack) continue;
    if (!(amplitude(s) > 0.0)) continue;
    xs.push_back(std::log(dist(s)));
    ys.push_back(std::log(amplitude(s)));
  }
  const int m = static_cast<int>(xs.size());
  if (m < options.min_samples)
    throw std::domain_error("Hölder annulus holds " + std::to_string(m) + " samples, need " + std::to_string(options.min_samples));

  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), m);
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), m);
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  const double slope = sxx > 0.0 ? xc.dot(yc) / sxx : 0.0;
  const double ss_res = (yc - slope * xc).squaredNorm();
  const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
  return {slope, r2, m, r2 >= options.min_r_squared};
}

int z2_monodromy(const SpinorFieldd& psi, const std::vector<Index>& loop_in, const MonodromyOptions& options) {
  if (psi.rank() != 2) throw std::invalid_argument("Z/2 monodromy needs n = 2");
  std::vector<Index> loop = loop_in;
  if (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
  if (loop.size() < 2) throw std::invalid_argument("monodromy loop needs at least two sites");
  const auto& g = psi.geometry();
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Index s = loop[i];
    const Index t = loop[(i + 1) % loop.size()];
    if (s < 0 || s >= g.sites()) throw std::invalid_argument("loop site out of range");
    bool adjacent = false;
    for (int d = 0; d < 3 && !adjacent; ++d) adjacent = g.neighbor(s, d, +1) == t || g.neighbor(s, d, -1) == t;
    if (!adjacent) throw std::invalid_argument("loop sites " + std::to_string(s) + " and " + std::to_string(t) + " are not nearest neighbours");
  }

  auto representative = [&](Index s) {
    if (!(std::sqrt(squared_amplitude(psi.at(s))) > options.delta))
      throw std::domain_error("loop touches the zero set at site " + std::to_string(s));
    const auto q = quotient_representative(psi.at(s));
    if (!q) throw std::domain_error("quotient representative undefined at site " + std::to_string(s));
    return *q;
  };

  const Quaterniond start = representative(loop.front());
  Quaterniond lifted = start;
  for (std::size_t i = 1; i <= loop.size(); ++i) {
    const Quaterniond next = representative(loop[i % loop.size()]);
    const double overlap = real_inner(lifted, next);
    const double cosine = std::min(1.0, std::abs(overlap) / (lifted.norm() * next.norm()));
    if (!(std::acos(cosine) < options.max_step_angle))
      throw std::domain_error("monodromy step at loop position " + std::to_string(i) + " is not resolvable");
    lifted = overlap >= 0.0 ? next : -next;
  }
  return real_inner(lifted, start) > 0.0 ? +1 : -1;
}

std::array<int, 3> zero_set_class(const ZeroSetReport& report, const std::vector<ComponentOrientation>& orientation) {
  if (orientation.size() != report.components.size())
    throw std::invalid_argument("orientation data given for " + std::to_string(orientation.size()) + " components, zero set has " +
                                std::to_string(report.components.size()));
  std::array<int, 3> k{0, 0, 0};
  for (std::size_t i = 0; i < orientation.size(); ++i) {
    const auto& o = orientation[i];
    const auto& comp = report.components[i];
    if (o.orientation != 1 && o.orientation != -1) throw std::domain_error("component " + std::to_string(i) + " is unoriented");
    if (o.multiplicity < 1) throw std::invalid_argument("component multiplicity must be positive");
    if (comp.multiply_wrapping) throw std::domain_error("component " + std::to_string(i) + " wraps in more than one direction");
    for (int d = 0; d < 3; ++d) k[d] += o.multiplicity * o.orientation * comp.period[d];
  }
  return k;
}

}  // namespace gsw
