#include "rydchiral/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rydchiral/errors.hpp"
#include "rydchiral/parallel.hpp"

namespace rydchiral {

namespace {

constexpr double kMinRcond = 1e-14;

CVector solve_checked(const CMatrix& m, const CVector& rhs, const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc > kMinRcond)) {
    std::ostringstream os;
    os << what << ": conditioning failure (rcond " << rc << ")";
    throw NumericalError(os.str());
  }
  return lu.solve(rhs);
}

void check_sizes(const CouplingMatrix& c, const ModeVector& m) {
  if (static_cast<std::size_t>(m.amplitudes.size()) != c.size()) throw ConfigError("coupling/mode size mismatch");
}

double source_scale(const ModeVector& mode, double probe_rabi) { return probe_rabi / mode_peak(mode.waist); }

}  // namespace

CMatrix EffectiveParams::generator() const {
  const auto n = static_cast<Eigen::Index>(size());
  CMatrix m(n, n);
  m.real() = J_bar;
  m.imag() = 0.5 * Gam_bar;
  m.diagonal().array() += cplx(delta_bar, 0.5 * gamma);
  return m;
}

namespace {

EffectiveParams reduce_impl(const DriveParams& drive, const CouplingMatrix& coupling, const ModeVector& mode,
                            bool emit_warnings) {
  check_sizes(coupling, mode);
  if (drive.delta_e == 0.0) throw ConfigError("reduce_two_level: Delta_e = 0 is not allowed");
  if (drive.omega < 0.0 || drive.gamma < 0.0) throw ConfigError("reduce_two_level: negative Omega or gamma");
  const double de = drive.delta_e;
  if (emit_warnings && drive.omega > 0.0 && std::abs(de) < 3.0 * drive.omega) {
    std::ostringstream os;
    os << "elimination of |e> questionable: |De|/Omega = " << std::abs(de) / drive.omega << " < 3";
    warn(os.str());
  }
  const double jmax = coupling.J.cwiseAbs().maxCoeff();
  if (emit_warnings && std::abs(de) < 3.0 * jmax) warn("elimination of |e> questionable: |De| is not large against max|J|");

  EffectiveParams e;
  e.g_ratio = -drive.omega / de;
  const double x = e.g_ratio * e.g_ratio;
  e.delta_bar = de + drive.delta_r - drive.omega * drive.omega / de;
  e.gamma = drive.gamma;
  e.J_bar = x * coupling.J;
  e.Gam_bar = x * coupling.Gam;
  const CollectiveParams cp = mode_weighted_parameters(coupling, mode);
  e.collective_shift = x * cp.shift;
  e.collective_decay = x * cp.decay;
  e.emission_factor = rydchiral::emission_factor(coupling.orientation, mode.angle);
  e.epsilon = std::abs(epsilon_reflection(drive, mode));
  return e;
}

}  // namespace

EffectiveParams reduce_two_level(const DriveParams& drive, const CouplingMatrix& coupling, const ModeVector& mode) {
  return reduce_impl(drive, coupling, mode, true);
}

cplx epsilon_reflection(const DriveParams& drive, const ModeVector& mode) {
  // Off-resonant scattering by |e> at zeroth order in the dipole couplings.
  if (drive.delta_e == 0.0) throw ConfigError("epsilon_reflection: Delta_e = 0");
  return -I * kCouplingRate * mode.norm_sum() / drive.delta_e;
}

LinearResponse solve_single_excitation_3level(const CouplingMatrix& coupling, const ModeVector& mode,
                                              const ModeVector& forward_out, const ModeVector& backward_out,
                                              const DriveParams& drive) {
  check_sizes(coupling, mode);
  check_sizes(coupling, forward_out);
  check_sizes(coupling, backward_out);
  if (!drive.weak_drive()) warn("probe Rabi frequency above the weak-drive range");
  const cplx er(drive.delta_e + drive.delta_r, 0.5 * drive.gamma);
  const double w2 = drive.omega * drive.omega;
  if (w2 > 0.0 && std::abs(er) < 1e-13)
    throw NumericalError("solve_single_excitation_3level: conditioning failure at a lossless two-photon resonance");
  const cplx self = w2 > 0.0 ? drive.delta_e - w2 / er : cplx(drive.delta_e);

  CMatrix m = coupling.complex_matrix();
  m.diagonal().array() += self;
  const CVector& u = mode.amplitudes;
  const CVector x = solve_checked(m, -u, "solve_single_excitation_3level");

  LinearResponse out;
  const double s = source_scale(mode, drive.probe_rabi);
  out.excited = s * x;
  out.rydberg = w2 > 0.0 ? CVector(-(drive.omega / er) * out.excited) : CVector::Zero(x.size());
  const double kappa = kCouplingRate * emission_factor(coupling.orientation, forward_out.angle);
  out.reflection = I * kappa * backward_out.amplitudes.dot(x);
  out.transmission = 1.0 + I * kappa * forward_out.amplitudes.dot(x);
  out.R = std::norm(out.reflection);
  out.T = std::norm(out.transmission);
  out.L = 1.0 - out.R - out.T;
  return out;
}

LinearResponse solve_single_excitation_3level(const CouplingMatrix& coupling, const ModeVector& mode,
                                              const DriveParams& drive) {
  return solve_single_excitation_3level(coupling, mode, mode, mode, drive);
}

LinearResponse solve_single_excitation_2level(const EffectiveParams& eff, const ModeVector& mode, double probe_rabi) {
  if (static_cast<std::size_t>(mode.amplitudes.size()) != eff.size()) throw ConfigError("effective/mode size mismatch");
  const CVector& u = mode.amplitudes;
  const double x2 = eff.scale();
  LinearResponse out;
  const double s = source_scale(mode, probe_rabi);
  if (x2 == 0.0) {
    out.rydberg = CVector::Zero(u.size());
    out.excited = CVector::Zero(u.size());
    out.reflection = 0.0;
  } else {
    const CVector c = solve_checked(eff.generator(), -u, "solve_single_excitation_2level");
    // Rydberg amplitudes are driven through g_bar; c solves with unit source.
    out.rydberg = s * eff.g_ratio * c;
    out.excited = CVector::Zero(u.size());
    out.reflection = I * kCouplingRate * eff.emission_factor * x2 * u.dot(c);
  }
  out.transmission = 1.0 + out.reflection;
  out.R = std::norm(out.reflection);
  out.T = std::norm(out.transmission);
  out.L = 1.0 - out.R - out.T;
  return out;
}

std::vector<SpectrumPoint> spectrum_3level(const CouplingMatrix& coupling, const ModeVector& mode, DriveParams drive,
                                           std::span<const double> delta_e) {
  std::vector<SpectrumPoint> out(delta_e.size());
  parallel_for(delta_e.size(), default_threads(), [&](std::size_t i) {
    DriveParams d = drive;
    d.delta_e = delta_e[i];
    const LinearResponse r = solve_single_excitation_3level(coupling, mode, d);
    out[i] = {delta_e[i], r.R, r.T, r.L};
  });
  return out;
}

std::vector<SpectrumPoint> spectrum_2level(const CouplingMatrix& coupling, const ModeVector& mode, DriveParams drive,
                                           std::span<const double> delta_e) {
  std::vector<SpectrumPoint> out(delta_e.size());
  std::vector<double> eps_ratio(delta_e.size(), 0.0);
  // Reduction warnings would repeat at every grid point; only the
  // background-term check is aggregated and reported.
  parallel_for(delta_e.size(), default_threads(), [&](std::size_t i) {
    DriveParams d = drive;
    d.delta_e = delta_e[i];
    const EffectiveParams eff = reduce_impl(d, coupling, mode, false);
    const LinearResponse r = solve_single_excitation_2level(eff, mode, d.probe_rabi);
    out[i] = {eff.delta_bar, r.R, r.T, r.L};
    eps_ratio[i] = std::abs(r.reflection) > 0.0 ? eff.epsilon / std::abs(r.reflection) : 0.0;
  });
  const double worst = eps_ratio.empty() ? 0.0 : *std::max_element(eps_ratio.begin(), eps_ratio.end());
  if (worst > 1e-3) {
    std::ostringstream os;
    os << "dropped background term reaches " << worst << " of the reflected amplitude";
    warn(os.str());
  }
  return out;
}

std::pair<double, double> at_resonances(double delta_r, double delta_c, double omega) {
  const double root = std::sqrt((delta_r - delta_c) * (delta_r - delta_c) + 4.0 * omega * omega);
  return {(-(delta_r + delta_c) + root) / 2.0, (-(delta_r + delta_c) - root) / 2.0};
}

double closed_form_reflection_3level(const DriveParams& drive, double a, double delta_c, double gamma_c) {
  const cplx er(drive.delta_e + drive.delta_r, 0.5 * drive.gamma);
  const cplx denom = drive.delta_e + delta_c - drive.omega * drive.omega / er + I * (0.5 * gamma_c);
  return std::norm(kCouplingRate / (a * a) / denom);
}

double closed_form_reflection_2level(double delta_bar, double delta_bar_c, double gamma_bar_c, double gamma) {
  return std::norm(0.5 * gamma_bar_c / cplx(delta_bar + delta_bar_c, 0.5 * (gamma_bar_c + gamma)));
}

double blockaded_reflection(double delta_e, double a, double delta_c, double gamma_c) {
  return std::norm(kCouplingRate / (a * a) / cplx(delta_e + delta_c, 0.5 * gamma_c));
}

double blockade_radius(double c6, double gamma_bar_c) {
  if (!(c6 > 0.0) || !(gamma_bar_c > 0.0)) throw ConfigError("blockade_radius: C6 and Gamma_bar_c must be positive");
  return std::pow(c6 / gamma_bar_c, 1.0 / 6.0);
}

std::vector<double> default_spectrum_grid(const DriveParams& drive, double delta_c, double gamma_c) {
  const auto [plus, minus] = at_resonances(drive.delta_r, delta_c, drive.omega);
  std::vector<double> g;
  const double lo = minus - 5.0, hi = plus + 5.0;
  constexpr int kCoarse = 400, kFine = 100;
  for (int i = 0; i < kCoarse; ++i) g.push_back(lo + (hi - lo) * i / (kCoarse - 1));
  // The narrow line is the dressed state closest to the bare Rydberg resonance.
  const double narrow = std::abs(plus + drive.delta_r) < std::abs(minus + drive.delta_r) ? plus : minus;
  const double x = drive.omega > 0.0 ? drive.omega * drive.omega / (narrow * narrow) : 0.0;
  const double w = 5.0 * std::max(x * gamma_c, 1e-6);
  for (int i = 0; i < kFine; ++i) g.push_back(narrow - w + 2.0 * w * i / (kFine - 1));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

double raman_resonance_delta_e(double delta_r, double omega, double shift) {
  if (delta_r == 0.0) throw ConfigError("raman_resonance_delta_e: needs Delta_r != 0");
  const double w2 = omega * omega;
  // De^2 + Dr De - Omega^2 = 0, root with |De| > |Dr|, then Newton with the shift.
  double de = 0.5 * (-delta_r + std::copysign(std::sqrt(delta_r * delta_r + 4.0 * w2), -delta_r));
  for (int it = 0; it < 100; ++it) {
    const double f = de + delta_r - w2 / de + w2 * shift / (de * de);
    const double df = 1.0 + w2 / (de * de) - 2.0 * w2 * shift / (de * de * de);
    const double step = f / df;
    de -= step;
    if (std::abs(step) <= 1e-14 * std::abs(de)) return de;
  }
  throw NumericalError("raman_resonance_delta_e: Newton iteration did not converge");
}

}  // namespace rydchiral
