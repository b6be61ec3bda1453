#include "rydchiral/two_photon.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "rydchiral/errors.hpp"

namespace rydchiral {

double InteractionModel::shift(double r) const {
  if (kind != InteractionKind::vdw) return 0.0;
  const double r2 = r * r;
  return sign * c6 / (r2 * r2 * r2);
}

std::string to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::none: return "none";
    case InteractionKind::vdw: return "vdw";
    case InteractionKind::hard_blockade: return "hard-blockade";
  }
  return "?";
}

InteractionKind interaction_kind_from_string(const std::string& s) {
  if (s == "none") return InteractionKind::none;
  if (s == "vdw") return InteractionKind::vdw;
  if (s == "hard-blockade" || s == "hard_blockade") return InteractionKind::hard_blockade;
  throw ConfigError("unknown interaction kind '" + s + "'");
}

std::size_t pair_index(std::size_t j, std::size_t k, std::size_t n) {
  if (j > k) std::swap(j, k);
  // Offset of row j in the packed strict upper triangle.
  return j * n - j * (j + 1) / 2 + (k - j - 1);
}

cplx PairAmplitudes::pair(std::size_t j, std::size_t k) const {
  if (j == k) return on_site.size() ? on_site[static_cast<Eigen::Index>(j)] : cplx(0.0);
  return pairs[static_cast<Eigen::Index>(pair_index(j, k, atom_count()))];
}

namespace {

constexpr double kMinRcond = 1e-14;

CVector lu_solve(const CMatrix& a, const CVector& b, const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc > kMinRcond)) {
    std::ostringstream os;
    os << what << ": conditioning failure (rcond " << rc << ")";
    throw NumericalError(os.str());
  }
  return lu.solve(b);
}

void check_memory(std::size_t unknowns, const char* what) {
  // Dense complex LU: one matrix plus workspace.
  constexpr std::size_t kMaxBytes = std::size_t{3} << 30;
  const double bytes = 16.0 * static_cast<double>(unknowns) * static_cast<double>(unknowns);
  if (bytes > static_cast<double>(kMaxBytes)) {
    std::ostringstream os;
    os << what << ": " << unknowns << " pair unknowns exceed the dense-solve memory cap; reduce problem size";
    throw ResourceError(os.str());
  }
}

}  // namespace

PairAmplitudes pair_steady_state(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                 const InteractionModel& interaction, double probe_rabi) {
  const std::size_t n = geom.size();
  if (eff.size() != n || static_cast<std::size_t>(mode.amplitudes.size()) != n)
    throw ConfigError("pair_steady_state: size mismatch");
  if (probe_rabi > 0.01) throw ConfigError("pair_steady_state: probe Rabi frequency above the weak-drive range");
  if (n > kMaxPairAtoms) {
    std::ostringstream os;
    os << "pair_steady_state: N = " << n << " exceeds the pair-solve cap " << kMaxPairAtoms << "; reduce problem size";
    throw ResourceError(os.str());
  }
  const CVector& u = mode.amplitudes;
  const CMatrix m = eff.generator();

  PairAmplitudes out;
  out.emission_coupling = kCouplingRate * eff.emission_factor * eff.scale();
  out.probe_scale = probe_rabi / mode_peak(mode.waist);
  out.singles = lu_solve(m, -u, "pair_steady_state singles");
  const CVector& x = out.singles;
  out.pairs = CVector::Zero(static_cast<Eigen::Index>(n * (n - 1) / 2));

  if (!interaction.hard_core()) {
    // Linear optics: the two-excitation amplitudes of a coherent state.
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        out.pairs[static_cast<Eigen::Index>(pair_index(j, k, n))] =
            x[static_cast<Eigen::Index>(j)] * x[static_cast<Eigen::Index>(k)];
    out.on_site = x.cwiseProduct(x);
    return out;
  }

  // Active pairs and their dense indices.
  std::vector<long> index(n * n, -1);
  std::vector<std::pair<std::size_t, std::size_t>> active;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k)
      if (!interaction.blocked(geom.distance(j, k))) {
        index[j * n + k] = index[k * n + j] = static_cast<long>(active.size());
        active.emplace_back(j, k);
      }
  const std::size_t np = active.size();
  if (np == 0) return out;
  check_memory(np, "pair_steady_state");

  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  CVector s(static_cast<Eigen::Index>(np));
  // Off-diagonal part of the reduced generator.
  auto g = [&](std::size_t p, std::size_t q) { return m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)); };
  for (std::size_t p = 0; p < np; ++p) {
    const auto [j, k] = active[p];
    const auto ip = static_cast<Eigen::Index>(p);
    // m(j,j) already includes Delta_bar + i gamma/2; add the second site.
    a(ip, ip) = g(j, j) + g(k, k) - interaction.shift(geom.distance(j, k));
    for (std::size_t l = 0; l < n; ++l) {
      if (l == j || l == k) continue;
      // Hop j -> l (other excitation stays on k), and k -> l.
      if (const long q = index[l * n + k]; q >= 0) a(ip, q) += g(j, l);
      if (const long q = index[j * n + l]; q >= 0) a(ip, q) += g(k, l);
    }
    s[ip] = u[static_cast<Eigen::Index>(j)] * x[static_cast<Eigen::Index>(k)] +
            u[static_cast<Eigen::Index>(k)] * x[static_cast<Eigen::Index>(j)];
  }
  const CVector y = lu_solve(a, -s, "pair_steady_state pairs");
  for (std::size_t p = 0; p < np; ++p)
    out.pairs[static_cast<Eigen::Index>(pair_index(active[p].first, active[p].second, n))] =
        y[static_cast<Eigen::Index>(p)];
  return out;
}

PairAmplitudes pair_steady_state_3level(const ArrayGeometry& geom, const CouplingMatrix& coupling,
                                        const DriveParams& drive, const ModeVector& mode,
                                        const InteractionModel& interaction) {
  const std::size_t n = geom.size();
  if (coupling.size() != n || static_cast<std::size_t>(mode.amplitudes.size()) != n)
    throw ConfigError("pair_steady_state_3level: size mismatch");
  if (n > kMaxOracleAtoms) {
    std::ostringstream os;
    os << "pair_steady_state_3level: N = " << n << " exceeds the oracle basis cap " << kMaxOracleAtoms
       << "; reduce problem size";
    throw ResourceError(os.str());
  }
  if (!drive.weak_drive()) throw ConfigError("pair_steady_state_3level: probe Rabi frequency above the weak-drive range");
  const CVector& u = mode.amplitudes;
  const CMatrix g = coupling.complex_matrix();
  const cplx er(drive.delta_e + drive.delta_r, 0.5 * drive.gamma);
  const double w = drive.omega;
  const bool dressed = w > 0.0;
  if (dressed && std::abs(er) < 1e-13)
    throw NumericalError("pair_steady_state_3level: conditioning failure at a lossless two-photon resonance");

  // Singles.
  CMatrix m1 = g;
  m1.diagonal().array() += dressed ? drive.delta_e - w * w / er : cplx(drive.delta_e);
  const CVector e = lu_solve(m1, -u, "pair_steady_state_3level singles");
  const CVector c = dressed ? CVector(-(w / er) * e) : CVector::Zero(static_cast<Eigen::Index>(n));

  PairAmplitudes out;
  out.emission_coupling = kCouplingRate * emission_factor(coupling.orientation, mode.angle);
  out.probe_scale = drive.probe_rabi / mode_peak(mode.waist);
  out.singles = e;
  out.pairs = CVector::Zero(static_cast<Eigen::Index>(n * (n - 1) / 2));
  if (n < 2) return out;

  // Unknowns: ee pairs (j<k) then er ordered pairs (e on j, r on k).
  const std::size_t nee = n * (n - 1) / 2;
  const std::size_t ner = dressed ? n * (n - 1) : 0;
  auto ee = [&](std::size_t j, std::size_t k) { return static_cast<Eigen::Index>(pair_index(j, k, n)); };
  auto erx = [&](std::size_t j, std::size_t k) {
    return static_cast<Eigen::Index>(nee + j * (n - 1) + (k < j ? k : k - 1));
  };
  const std::size_t dim = nee + ner;
  check_memory(dim, "pair_steady_state_3level");
  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  CVector s = CVector::Zero(static_cast<Eigen::Index>(dim));
  auto G = [&](std::size_t p, std::size_t q) { return g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)); };
  auto U = [&](std::size_t i) { return u[static_cast<Eigen::Index>(i)]; };

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const auto r = ee(j, k);
      a(r, r) = 2.0 * drive.delta_e + G(j, j) + G(k, k);
      for (std::size_t l = 0; l < n; ++l) {
        if (l == j || l == k) continue;
        a(r, ee(l, k)) += G(j, l);
        a(r, ee(j, l)) += G(k, l);
      }
      if (dressed) {
        a(r, erx(j, k)) += w;
        a(r, erx(k, j)) += w;
      }
      s[r] = U(j) * e[static_cast<Eigen::Index>(k)] + U(k) * e[static_cast<Eigen::Index>(j)];
    }
  }
  if (dressed) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        const auto r = erx(j, k);
        a(r, r) = drive.delta_e + G(j, j) + er;
        // Doubly Rydberg component, eliminated: (2 E_r - U) rr + w (er_jk + er_kj) = 0.
        const double dist = geom.distance(j, k);
        if (!interaction.blocked(dist)) {
          const cplx rr_den = 2.0 * er - interaction.shift(dist);
          if (std::abs(rr_den) < 1e-13)
            throw NumericalError("pair_steady_state_3level: conditioning failure on a lossless pair resonance");
          const cplx t = -w * w / rr_den;
          a(r, r) += t;
          a(r, erx(k, j)) += t;
        }
        for (std::size_t l = 0; l < n; ++l) {
          if (l == j || l == k) continue;
          a(r, erx(l, k)) += G(j, l);
        }
        a(r, ee(j, k)) += w;
        s[r] = U(j) * c[static_cast<Eigen::Index>(k)];
      }
    }
  }
  const CVector y = lu_solve(a, -s, "pair_steady_state_3level pairs");
  out.pairs = y.head(static_cast<Eigen::Index>(nee));
  return out;
}

PortAmplitudes port_amplitudes(const PairAmplitudes& pair, const ModeVector& mode, Port alpha, Port beta) {
  const std::size_t n = pair.atom_count();
  const CVector& u = mode.amplitudes;
  if (static_cast<std::size_t>(u.size()) != n) throw ConfigError("port_amplitudes: size mismatch");
  const cplx k = I * pair.emission_coupling;
  const cplx scat = k * u.dot(pair.singles);
  auto input = [](Port p) { return p == Port::forward ? 1.0 : 0.0; };
  const double ia = input(alpha), ib = input(beta);

  // sum_{j != k} u*_j u*_k c_jk + sum_j u*_j^2 c_jj
  cplx q = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx uj = std::conj(u[static_cast<Eigen::Index>(j)]);
    cplx row = 0.0;
    for (std::size_t l = j + 1; l < n; ++l)
      row += std::conj(u[static_cast<Eigen::Index>(l)]) * pair.pairs[static_cast<Eigen::Index>(pair_index(j, l, n))];
    q += 2.0 * uj * row;
  }
  if (pair.on_site.size()) q += (u.conjugate().array().square() * pair.on_site.array()).sum();

  PortAmplitudes p;
  p.one_alpha = ia + scat;
  p.one_beta = ib + scat;
  p.two = ia * ib + (ia + ib) * scat + k * k * q;
  return p;
}

double g2_equal_time(const PairAmplitudes& pair, const ModeVector& mode, Port alpha, Port beta) {
  const PortAmplitudes p = port_amplitudes(pair, mode, alpha, beta);
  const double denom = std::norm(p.one_alpha) * std::norm(p.one_beta);
  if (denom < 1e-20) throw NumericalError("port intensity underflow");
  return std::norm(p.two) / denom;
}

G2Triple g2_all(const PairAmplitudes& pair, const ModeVector& mode) {
  return {g2_equal_time(pair, mode, Port::backward, Port::backward),
          g2_equal_time(pair, mode, Port::forward, Port::forward),
          g2_equal_time(pair, mode, Port::backward, Port::forward)};
}

}  // namespace rydchiral
