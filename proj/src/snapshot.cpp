#include "gsw/snapshot.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace gsw {
namespace {

constexpr std::array<char, 4> kMagic{'G', 'S', 'W', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8 + 4 + 8;
constexpr std::uint32_t kMaxSitesPerAxis = 1024;
constexpr std::uint32_t kMaxRank = 64;

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::vector<char>& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    v = to_little_endian(v);
    const char* p = reinterpret_cast<const char*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

 private:
  std::vector<char>& out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& in) : in_(in) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw SnapshotError("snapshot is truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little_endian(v);
  }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<char>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  const auto& g = snap.geometry();
  require_same_geometry(g, snap.psi.geometry());
  require_same_geometry(g, snap.b.geometry());
  const int n = snap.psi.rank();
  if (snap.b.rank() != n) throw std::invalid_argument("background rank does not match spinor rank");

  std::vector<char> bytes;
  Writer w(bytes);
  for (char c : kMagic) w.put(c);
  w.put<std::uint32_t>(kSnapshotVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.size()));
  w.put<double>(g.length());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  w.put<double>(snap.alpha);
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) w.put<double>(snap.a.angle(s, d));
  const auto& c = snap.psi.coeffs();
  for (Index col = 0; col < c.cols(); ++col)
    for (int r = 0; r < 4; ++r) w.put<double>(c(r, col));
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) {
      const auto& u = snap.b.link(s, d);
      for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col) {
          w.put<double>(u(row, col).real());
          w.put<double>(u(row, col).imag());
        }
    }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("failed writing " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) throw SnapshotError("snapshot is truncated (header)");

  Reader r(bytes);
  std::array<char, 4> magic{};
  for (char& c : magic) c = r.get<char>();
  if (magic != kMagic) throw SnapshotError("bad snapshot magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kSnapshotVersion) throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  const auto sites_per_axis = r.get<std::uint32_t>();
  const double length = r.get<double>();
  const auto rank = r.get<std::uint32_t>();
  const double alpha = r.get<double>();
  if (sites_per_axis > kMaxSitesPerAxis || rank == 0 || rank > kMaxRank) throw SnapshotError("snapshot header out of range");

  std::optional<LatticeGeometry> geometry;
  try {
    geometry.emplace(static_cast<int>(sites_per_axis), length);
  } catch (const std::invalid_argument& e) {
    throw SnapshotError(std::string("invalid snapshot geometry: ") + e.what());
  }
  const auto& g = *geometry;
  const int n = static_cast<int>(rank);
  const std::size_t sites = static_cast<std::size_t>(g.sites());
  const std::size_t expected = kHeaderBytes + 8 * (sites * 3 + sites * n * 4 + sites * 3 * n * n * 2);
  if (bytes.size() != expected)
    throw SnapshotError("snapshot size " + std::to_string(bytes.size()) + " does not match header (expected " + std::to_string(expected) + ")");

  GaugeFieldd::Angles angles(3, g.sites());
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) angles(d, s) = r.get<double>();
  SpinorFieldd::Coeffs coeffs(4, g.sites() * n);
  for (Index col = 0; col < coeffs.cols(); ++col)
    for (int row = 0; row < 4; ++row) coeffs(row, col) = r.get<double>();

  auto b = BackgroundFieldd::identity(g, n);
  bool all_identity = true;
  ComplexMatrix<double> u(n, n);
  const ComplexMatrix<double> id = ComplexMatrix<double>::Identity(n, n);
  for (Index s = 0; s < g.sites(); ++s)
    for (int d = 0; d < 3; ++d) {
      for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col) {
          const double re = r.get<double>();
          const double im = r.get<double>();
          u(row, col) = {re, im};
        }
      if (u != id) {
        all_identity = false;
        b.set_link(s, d, u);
      }
    }
  if (!all_identity && b.unitarity_defect() > 1e-12) b.reunitarize();

  // Stored angles are already wrapped; wrapping is idempotent on (-pi, pi].
  return {alpha, GaugeFieldd(g, std::move(angles)), SpinorFieldd(g, n, std::move(coeffs)), std::move(b)};
}

}  // namespace gsw
