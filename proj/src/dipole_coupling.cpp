#include "rydchiral/dipole_coupling.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "rydchiral/errors.hpp"

namespace rydchiral {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

CTensor3 greens_tensor(const Vector3& r, double k) {
  const double d = r.norm();
  if (!(d > 0.0)) throw ConfigError("greens_tensor: zero separation");
  const double kr = k * d;
  const cplx pref = std::exp(I * kr) / (4.0 * kPi * d);
  const cplx a = 1.0 + I / kr - 1.0 / (kr * kr);
  const cplx b = 1.0 + 3.0 * I / kr - 3.0 / (kr * kr);
  const Vector3 n = r / d;
  CTensor3 g = a * CTensor3::Identity();
  g -= b * (n * n.transpose()).cast<cplx>();
  return pref * g;
}

namespace polarization {
CVector3 circular_in_plane() { return CVector3(1.0, I, 0.0) / std::sqrt(2.0); }
CVector3 linear_x() { return CVector3(1.0, 0.0, 0.0); }
CVector3 linear_y() { return CVector3(0.0, 1.0, 0.0); }
}  // namespace polarization

CMatrix CouplingMatrix::complex_matrix() const {
  CMatrix m(J.rows(), J.cols());
  m.real() = J;
  m.imag() = 0.5 * Gam;
  return m;
}

CouplingMatrix coupling_matrix(const ArrayGeometry& geom, const CVector3& orientation) {
  if (geom.size() == 0) throw ConfigError("coupling_matrix: empty geometry");
  if (std::abs(orientation.norm() - 1.0) > 1e-12) throw ConfigError("dipole orientation must be a unit vector");
  const auto n = static_cast<Eigen::Index>(geom.size());
  CouplingMatrix c;
  c.orientation = orientation;
  c.k = kWavenumber;
  c.J = RMatrix::Zero(n, n);
  c.Gam = RMatrix::Identity(n, n);
  const double scale = 3.0 * kPi / c.k;
  const CVector3 dconj = orientation.conjugate();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = j + 1; l < n; ++l) {
      const auto& pj = geom.positions[static_cast<std::size_t>(j)];
      const auto& pl = geom.positions[static_cast<std::size_t>(l)];
      const CTensor3 g = greens_tensor(Vector3(pj.x - pl.x, pj.y - pl.y, 0.0), c.k);
      // Hermitian forms of the real and imaginary parts separately; each is
      // real for any complex orientation because G is symmetric.
      const double jr = scale * (dconj.transpose() * g.real().cast<cplx>() * orientation)(0).real();
      const double gi = 2.0 * scale * (dconj.transpose() * g.imag().cast<cplx>() * orientation)(0).real();
      c.J(j, l) = c.J(l, j) = jr;
      c.Gam(j, l) = c.Gam(l, j) = gi;
    }
  }
  return c;
}

CollectiveParams lattice_sum_parameters(const CouplingMatrix& coupling, const ArrayGeometry& geom) {
  if (coupling.size() != geom.size()) throw ConfigError("coupling/geometry size mismatch");
  const auto i0 = static_cast<Eigen::Index>(geom.central_site());
  CollectiveParams p;
  p.definition = CollectiveDefinition::lattice_sum;
  p.shift = coupling.J.row(i0).sum();  // J_ii = 0
  p.decay = coupling.Gam.row(i0).sum();
  return p;
}

CollectiveParams mode_weighted_parameters(const CouplingMatrix& coupling, const ModeVector& mode) {
  const auto& u = mode.amplitudes;
  if (static_cast<std::size_t>(u.size()) != coupling.size()) throw ConfigError("coupling/mode size mismatch");
  const double norm = u.squaredNorm();
  if (!(norm > 0.0)) throw ConfigError("mode has zero norm");
  CollectiveParams p;
  p.definition = CollectiveDefinition::mode_weighted;
  p.shift = (u.adjoint() * coupling.J.cast<cplx>() * u)(0).real() / norm;
  p.decay = (u.adjoint() * coupling.Gam.cast<cplx>() * u)(0).real() / norm;
  return p;
}

CollectivePair collective_parameters(const CouplingMatrix& coupling, const ArrayGeometry& geom,
                                     const ModeVector& mode) {
  return {lattice_sum_parameters(coupling, geom), mode_weighted_parameters(coupling, mode)};
}

namespace {
constexpr std::uint32_t kMagic = 0x4d434452;  // "RDCM" read as little-endian bytes

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("coupling dump truncated");
  return v;
}
}  // namespace

void write_coupling(std::ostream& out, const CouplingMatrix& c) {
  put(out, kMagic);
  put(out, static_cast<std::uint32_t>(c.size()));
  put(out, c.k);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> j = c.J, g = c.Gam;
  out.write(reinterpret_cast<const char*>(j.data()), static_cast<std::streamsize>(j.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
  if (!out) throw ConfigError("failed writing coupling dump");
}

CouplingMatrix read_coupling(std::istream& in) {
  if (get<std::uint32_t>(in) != kMagic) throw ConfigError("coupling dump: bad magic");
  const auto n = static_cast<Eigen::Index>(get<std::uint32_t>(in));
  CouplingMatrix c;
  c.k = get<double>(in);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> j(n, n), g(n, n);
  const auto bytes = static_cast<std::streamsize>(n * n * static_cast<Eigen::Index>(sizeof(double)));
  if (!in.read(reinterpret_cast<char*>(j.data()), bytes) || !in.read(reinterpret_cast<char*>(g.data()), bytes))
    throw ConfigError("coupling dump truncated");
  c.J = j;
  c.Gam = g;
  return c;
}

void write_coupling(const std::string& path, const CouplingMatrix& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path);
  write_coupling(out, c);
}

CouplingMatrix read_coupling(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_coupling(in);
}

double emission_factor(const CVector3& orientation, double theta) {
  const double n2 = orientation.squaredNorm();
  if (!(n2 > 0.0)) return 1.0;
  const Vector3 k(std::sin(theta), 0.0, std::cos(theta));
  const CVector3 perp = orientation - k.cast<cplx>() * k.cast<cplx>().dot(orientation);
  return perp.squaredNorm() / (n2 * std::cos(theta));
}

}  // namespace rydchiral
