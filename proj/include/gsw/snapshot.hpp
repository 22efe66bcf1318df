#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gsw/lattice.hpp"

namespace gsw {

/// Binary field snapshot, all little-endian:
///
///   magic "GSW1" | version u32 | N u32 | L f64 | n u32 | alpha f64
///   links    f64[N^3 * 3]          site-major, direction-minor
///   spinors  f64[N^3 * n * 4]      site, component k, (w, x, y, z)
///   B        f64[N^3 * 3 * n*n*2]  per link (site-major, direction-minor),
///                                  row-major n x n, (re, im) per entry
///
/// Site index s = x1 + N x2 + N^2 x3.
struct Snapshot {
  double alpha;
  GaugeFieldd a;
  SpinorFieldd psi;
  BackgroundFieldd b;

  const LatticeGeometry& geometry() const { return a.geometry(); }
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);

/// Throws SnapshotError on unreadable, truncated or incompatible files. Background
/// links deviating from SU(n) by more than 1e-12 are re-unitarized.
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace gsw
