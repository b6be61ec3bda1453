#include "rydchiral/pulse_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rydchiral/errors.hpp"
#include "rydchiral/etdrk4.hpp"
#include "rydchiral/parallel.hpp"

namespace rydchiral {

bool TimeGrid::matches(const TimeGrid& o) const {
  return count == o.count && std::abs(dt - o.dt) <= 1e-12 * std::abs(dt) &&
         std::abs(t0 - o.t0) <= 1e-9 * std::max(1.0, std::abs(dt));
}

TimeGrid make_grid(double t_begin, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > t_begin)) throw ConfigError("make_grid: need dt > 0 and t_end > t_begin");
  TimeGrid g;
  g.t0 = t_begin;
  g.dt = dt;
  g.count = static_cast<std::size_t>(std::ceil((t_end - t_begin) / dt - 1e-9)) + 1;
  return g;
}

double PulseSpec::envelope(double t) const {
  const double tau = duration;
  switch (shape) {
    case PulseShape::gaussian:
      return std::exp(-t * t / (2.0 * tau * tau)) / std::pow(kPi * tau * tau, 0.25);
    case PulseShape::square:
      return (t >= -0.5 * tau && t < 0.5 * tau) ? 1.0 / std::sqrt(tau) : 0.0;
  }
  return 0.0;
}

CVector PulseSpec::sample() const {
  CVector v(static_cast<Eigen::Index>(grid.count));
  for (std::size_t i = 0; i < grid.count; ++i) v[static_cast<Eigen::Index>(i)] = envelope(grid.at(i));
  return v;
}

std::string to_string(PulseShape s) { return s == PulseShape::gaussian ? "gaussian" : "square"; }

PulseShape pulse_shape_from_string(const std::string& s) {
  if (s == "gaussian") return PulseShape::gaussian;
  if (s == "square") return PulseShape::square;
  throw ConfigError("unknown pulse shape '" + s + "'");
}

TwoPhotonGrid propagate_weak_pulse(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                   const InteractionModel& interaction, const PulseSpec& pulse,
                                   const PulseOptions& options) {
  const std::size_t n = geom.size();
  const auto ni = static_cast<Eigen::Index>(n);
  if (eff.size() != n || static_cast<std::size_t>(mode.amplitudes.size()) != n)
    throw ConfigError("propagate_weak_pulse: size mismatch");
  if (pulse.amplitude > 0.01) throw ConfigError("propagate_weak_pulse: input amplitude above the weak-drive range");
  if (!(pulse.duration > 0.0)) throw ConfigError("propagate_weak_pulse: pulse duration must be positive");
  const TimeGrid& grid = pulse.grid;
  if (grid.count < 2 || !(grid.dt > 0.0)) throw ConfigError("propagate_weak_pulse: empty time grid");
  const double slow = eff.collective_decay > 0.0 ? 1.0 / eff.collective_decay : std::numeric_limits<double>::infinity();
  const double dt_max = std::min(pulse.duration, slow) / 50.0;
  if (grid.dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "propagate_weak_pulse: step-size violation, dt = " << grid.dt << " > " << dt_max;
    throw ConfigError(os.str());
  }
  if (options.substeps < 1) throw ConfigError("propagate_weak_pulse: substeps must be >= 1");
  const unsigned threads = options.threads ? options.threads : default_threads();

  CMatrix m = eff.generator();
  m.diagonal().array() += pulse.carrier_detuning;
  const CVector& u = mode.amplitudes;
  const cplx emit = 2.0 * I * kCouplingRate * eff.emission_factor * eff.scale();  // psi = phi + emit u^dag x
  CMatrix goff = m;
  goff.diagonal().setZero();

  const bool pairs = options.two_photon;
  const bool hard = interaction.hard_core();
  const Eigen::Index dim = pairs ? ni + ni * ni : ni;
  CVector lin(dim);
  lin.head(ni) = I * m.diagonal();
  Eigen::VectorXd mask;
  if (pairs) {
    mask = Eigen::VectorXd::Ones(ni * ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
      for (Eigen::Index j = 0; j < ni; ++j) {
        const Eigen::Index p = j + k * ni;
        const auto ju = static_cast<std::size_t>(j), ku = static_cast<std::size_t>(k);
        const bool off = hard && (j == k || interaction.blocked(geom.distance(ju, ku)));
        if (off) {
          mask[p] = 0.0;
          lin[ni + p] = 0.0;
          continue;
        }
        const double shift = j == k ? 0.0 : interaction.shift(geom.distance(ju, ku));
        lin[ni + p] = I * (m(j, j) + m(k, k) - shift);
      }
    }
  }

  const double h = grid.dt / options.substeps;
  Etdrk4 stepper(lin, h);
  auto rhs = [&](double t, const CVector& s, CVector& out) {
    const double phi = pulse.envelope(t);
    const auto x = s.head(ni);
    out.head(ni).noalias() = goff * x;
    out.head(ni) += phi * u;
    out.head(ni) *= I;
    if (!pairs) return;
    const Eigen::Map<const CMatrix> y(s.data() + ni, ni, ni);
    Eigen::Map<CMatrix> o(out.data() + ni, ni, ni);
    o.noalias() = goff * y;
    o += o.transpose().eval();
    o.noalias() += phi * (u * x.transpose() + x * u.transpose());
    o *= I;
    Eigen::Map<CVector>(out.data() + ni, ni * ni).array() *= mask.array().cast<cplx>();
  };

  const std::size_t nt = grid.count;
  const auto nti = static_cast<Eigen::Index>(nt);
  TwoPhotonGrid out;
  out.grid = grid;
  out.psi.resize(nti);
  CMatrix xs(ni, nti), ds;
  if (pairs) ds.resize(ni, nti);

  CVector state = CVector::Zero(dim);
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = grid.at(i);
    const auto ii = static_cast<Eigen::Index>(i);
    const double phi = pulse.envelope(t);
    const auto x = state.head(ni);
    xs.col(ii) = x;
    out.psi[ii] = phi + emit * u.dot(x);
    if (pairs) {
      const Eigen::Map<const CMatrix> y(state.data() + ni, ni, ni);
      const CVector z = phi * x + emit * (y.transpose() * u.conjugate());
      ds.col(ii) = z - out.psi[ii] * x;
    }
    if (i + 1 < nt)
      for (int s = 0; s < options.substeps; ++s) stepper.step(t + s * h, state, rhs);
    if (!state.allFinite()) throw NumericalError("propagate_weak_pulse: non-finite amplitudes");
  }
  const double p1 = out.P1();
  if (p1 > 1.0 + 1e-6) {
    std::ostringstream os;
    os << "propagate_weak_pulse: norm growth P1 = " << p1 << " signals instability";
    throw NumericalError(os.str());
  }
  if (!pairs) return out;

  // Free evolution of the conditional state in the eigenbasis of m.
  Eigen::ComplexEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("propagate_weak_pulse: eigendecomposition failed");
  const CMatrix& v = es.eigenvectors();
  const CVector& lam = es.eigenvalues();
  Eigen::PartialPivLU<CMatrix> vlu(v);
  if (!(vlu.rcond() > 1e-13)) throw NumericalError("propagate_weak_pulse: ill-conditioned eigenbasis");
  const CMatrix vinv = vlu.inverse();
  const double recon = (v * lam.asDiagonal() * vinv - m).norm() / m.norm();
  if (recon > 1e-9) throw NumericalError("propagate_weak_pulse: inaccurate eigendecomposition");

  const CVector a = (emit * (u.adjoint() * v)).transpose();
  const CMatrix b = vinv * ds;
  CMatrix e(ni, nti);
  for (Eigen::Index l = 0; l < nti; ++l)
    e.col(l) = (I * lam * (grid.dt * static_cast<double>(l))).array().exp();

  out.psi2 = out.psi * out.psi.transpose();
  parallel_for(nt, threads, [&](std::size_t j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const CVector w = a.cwiseProduct(b.col(jj));
    out.psi2.col(jj).tail(nti - jj) += e.leftCols(nti - jj).transpose() * w;
  });
  for (Eigen::Index j = 0; j < nti; ++j)
    for (Eigen::Index i = 0; i < j; ++i) out.psi2(i, j) = out.psi2(j, i);
  const double p2 = out.P2();
  if (p2 > 1.0 + 1e-6) {
    std::ostringstream os;
    os << "propagate_weak_pulse: norm growth P2 = " << p2 << " signals instability";
    throw NumericalError(os.str());
  }
  return out;
}

CMatrix extract_bound_state(const TwoPhotonGrid& grid) {
  if (grid.psi2.rows() != grid.psi.size() || grid.psi2.cols() != grid.psi.size())
    throw ConfigError("extract_bound_state: psi and psi2 are not on a common grid");
  return grid.psi2 - grid.psi * grid.psi.transpose();
}

double bound_state_decay_rate(const CMatrix& psi_b, const TimeGrid& grid, double t_anchor, double lag_min,
                              double lag_max) {
  const auto i0 = static_cast<long>(std::lround((t_anchor - grid.t0) / grid.dt));
  if (i0 < 0 || i0 >= psi_b.rows()) throw ConfigError("bound_state_decay_rate: anchor outside the grid");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (long l = 0; i0 + l < psi_b.rows(); ++l) {
    const double s = l * grid.dt;
    if (s < lag_min || s > lag_max) continue;
    const double v = std::abs(psi_b(i0 + l, i0));
    if (!(v > 0.0)) continue;
    const double y = std::log(v);
    sx += s;
    sy += y;
    sxx += s * s;
    sxy += s * y;
    ++count;
  }
  if (count < 3) throw ConfigError("bound_state_decay_rate: fewer than 3 samples in the lag window");
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return -slope;
}

Infidelity overlap_infidelity(const TwoPhotonGrid& a, const TwoPhotonGrid& b) {
  if (!a.grid.matches(b.grid)) throw ConfigError("overlap_infidelity: grids differ");
  Infidelity r;
  const double dt = a.grid.dt;
  const double pa = a.P1(), pb = b.P1();
  if (!(pa > 0.0) || !(pb > 0.0)) throw ConfigError("overlap_infidelity: zero-norm one-photon input");
  r.one_photon = 1.0 - std::norm(a.psi.dot(b.psi) * dt) / (pa * pb);
  if (a.psi2.size() && b.psi2.size()) {
    const double qa = a.P2(), qb = b.P2();
    if (!(qa > 0.0) || !(qb > 0.0)) throw ConfigError("overlap_infidelity: zero-norm two-photon input");
    const cplx ov = (a.psi2.conjugate().cwiseProduct(b.psi2)).sum() * dt * dt;
    r.two_photon = 1.0 - std::norm(ov) / (qa * qb);
  }
  return r;
}

}  // namespace rydchiral
