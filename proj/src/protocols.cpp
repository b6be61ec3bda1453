#include "rydchiral/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rydchiral/errors.hpp"

namespace rydchiral {

namespace {

// Classic RK4 step for y' = f(t, y).
template <class F>
CVector rk4_step(const F& f, double t, const CVector& y, double h) {
  const CVector k1 = f(t, y);
  const CVector k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const CVector k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const CVector k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double row_sum_norm(const CMatrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

void check_norm(double before, double after, double t, const char* where) {
  if (after > before * (1.0 + 1e-10) + 1e-15) {
    std::ostringstream os;
    os << where << ": norm increased from " << before << " to " << after << " at t = " << t;
    throw NumericalError(os.str());
  }
}

double coupling_constant(const EffectiveParams& eff) { return eff.g_ratio * std::sqrt(kCouplingRate); }

}  // namespace

double pi_pulse_amplitude(const EffectiveParams& eff, const ModeVector& mode, double tau) {
  if (!(tau > 0.0)) throw ConfigError("pi pulse: duration must be positive");
  const double g = std::abs(coupling_constant(eff));
  const double u = std::sqrt(mode.norm_sum());
  if (!(g > 0.0) || !(u > 0.0)) throw ConfigError("pi pulse: vanishing two-photon coupling");
  return 0.5 * kPi / (tau * g * u);
}

StorageState pi_pulse_storage(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                              const PulseSpec& pulse, std::size_t samples) {
  const auto n = static_cast<Eigen::Index>(geom.size());
  if (static_cast<Eigen::Index>(eff.size()) != n || mode.amplitudes.size() != n)
    throw ConfigError("pi_pulse_storage: geometry, couplings and mode differ in size");
  if (!(pulse.duration > 0.0)) throw ConfigError("pi_pulse_storage: pulse duration must be positive");
  if (pulse.shape != PulseShape::square) warn("pi_pulse_storage: pulse area calibration assumes a square pulse");
  if (samples < 2) samples = 2;

  const double tau = pulse.duration;
  // Unit-height profile; the square pulse fills the integration window exactly.
  const bool square = pulse.shape == PulseShape::square;
  auto profile = [&](double t) { return square ? 1.0 : std::sqrt(tau) * pulse.envelope(t); };
  const double t_begin = pulse.shape == PulseShape::square ? -0.5 * tau : -5.0 * tau;
  const double t_end = -t_begin;

  const CMatrix m = eff.generator();
  const CVector drive = coupling_constant(eff) * pulse.amplitude * mode.amplitudes;
  const CVector drive_conj = drive.conjugate();
  auto rhs = [&](double t, const CVector& y) {
    const double s = profile(t);
    CVector dy(n + 1);
    dy[0] = I * s * (drive_conj.transpose() * y.tail(n))(0);
    dy.tail(n) = I * (m * y.tail(n) + s * y[0] * drive);
    return dy;
  };

  const double rate = row_sum_norm(m) + drive.cwiseAbs().sum() + drive.norm();
  const double span = t_end - t_begin;
  const auto steps_per_sample =
      static_cast<std::size_t>(std::ceil(span / static_cast<double>(samples - 1) / std::min(0.05 / rate, tau / 400.0)));
  const std::size_t total = (samples - 1) * std::max<std::size_t>(1, steps_per_sample);
  const double h = span / static_cast<double>(total);
  const double u2 = mode.norm_sum();

  StorageState out;
  CVector y = CVector::Zero(n + 1);
  y[0] = 1.0;
  auto pu = [&](const CVector& v) { return std::norm(mode.amplitudes.dot(v.tail(n))) / u2; };
  out.times.push_back(0.0);
  out.P_u_history.push_back(0.0);
  double norm = 1.0;
  for (std::size_t i = 0; i < total; ++i) {
    const double t = t_begin + h * static_cast<double>(i);
    y = rk4_step(rhs, t, y, h);
    const double next = y.squaredNorm();
    check_norm(norm, next, t + h, "pi_pulse_storage");
    norm = next;
    if ((i + 1) % std::max<std::size_t>(1, steps_per_sample) == 0) {
      out.times.push_back(t + h - t_begin);
      out.P_u_history.push_back(pu(y));
    }
  }
  out.c0 = y[0];
  out.c = y.tail(n);
  out.P_u = pu(y);
  return out;
}

PiCalibration calibrate_pi_area(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                double tau) {
  PulseSpec pulse;
  pulse.shape = PulseShape::square;
  pulse.duration = tau;
  pulse.amplitude = pi_pulse_amplitude(eff, mode, tau);
  PiCalibration cal;
  cal.amplitude = pulse.amplitude;
  cal.P_u = pi_pulse_storage(geom, eff, mode, pulse).P_u;
  return cal;
}

double ControlRamp::omega(double t) const {
  if (profile) return profile(t);
  if (t < 0.0) return 0.0;
  if (rise_time <= 0.0) return omega_max;
  return omega_max * (1.0 - std::exp(-t / rise_time));
}

ControlRamp ControlRamp::readout(double collective_shift, double collective_decay, double omega_max) {
  if (!(collective_decay > 0.0)) throw ConfigError("readout ramp: collective decay must be positive");
  ControlRamp r;
  r.omega_max = omega_max;
  r.rise_time = 2.0 / collective_decay;
  r.delta_e = -collective_shift;
  r.delta_r = collective_shift;
  return r;
}

RetrievalResult eit_retrieval(const StorageState& stored, const CouplingMatrix& coupling, const ControlRamp& ramp,
                              const ModeVector& mode, double residual_target, double t_max) {
  const auto n = static_cast<Eigen::Index>(coupling.size());
  if (stored.c.size() != n || mode.amplitudes.size() != n)
    throw ConfigError("eit_retrieval: stored state, couplings and mode differ in size");
  const double stored_norm = stored.c.norm();
  if (!(stored_norm > 0.0)) throw ConfigError("eit_retrieval: no stored excitation");
  if (ramp.gamma < 0.0) throw ConfigError("eit_retrieval: negative Rydberg decay");
  if (t_max <= 0.0) t_max = 400.0;

  const CMatrix g = coupling.complex_matrix();
  const double gamma_c = mode.norm_sum() > 0.0
                             ? std::real(mode.amplitudes.dot(coupling.Gam * mode.amplitudes)) / mode.norm_sum()
                             : 0.0;
  if (!ramp.profile && gamma_c > 0.0 && ramp.rise_time * gamma_c < 1.0)
    warn("eit_retrieval: control ramp faster than the collective linewidth, readout may not be adiabatic");

  const cplx pe = I * ramp.delta_e;
  const cplx pc = I * (ramp.delta_e + ramp.delta_r) - 0.5 * ramp.gamma;
  // state = (e, c)
  auto rhs = [&](double t, const CVector& y) {
    const double om = ramp.omega(t);
    CVector dy(2 * n);
    dy.head(n) = pe * y.head(n) + I * om * y.tail(n) + I * (g * y.head(n));
    dy.tail(n) = pc * y.tail(n) + I * om * y.head(n);
    return dy;
  };

  const double rate = row_sum_norm(g) + std::abs(ramp.delta_e) + std::abs(pc) + std::max(ramp.omega_max, 0.0) +
                      (ramp.profile ? std::abs(ramp.profile(0.0)) : 0.0);
  const double h = 0.05 / std::max(rate, 1.0);
  const double flux_scale = 2.0 * kCouplingRate * emission_factor(coupling.orientation, mode.angle);
  const std::size_t sample_every = 10;

  RetrievalResult out;
  CVector y = CVector::Zero(2 * n);
  y.tail(n) = stored.c / stored_norm;
  auto flux = [&](const CVector& v) { return flux_scale * std::norm(mode.amplitudes.dot(v.head(n))); };
  double f_prev = flux(y);
  out.times.push_back(0.0);
  out.emission.push_back(f_prev);
  double norm = 1.0, t = 0.0;
  std::size_t step = 0;
  while (norm > residual_target && t < t_max) {
    y = rk4_step(rhs, t, y, h);
    t += h;
    ++step;
    const double next = y.squaredNorm();
    check_norm(norm, next, t, "eit_retrieval");
    norm = next;
    const double f = flux(y);
    out.eta += 0.5 * h * (f + f_prev);
    f_prev = f;
    if (step % sample_every == 0) {
      out.times.push_back(t);
      out.emission.push_back(f);
    }
  }
  if (norm > residual_target)
    warn("eit_retrieval: residual excitation above target at the end of the integration window");
  out.residual = norm;
  out.e_final = y.head(n);
  out.c_final = y.tail(n);
  return out;
}

}  // namespace rydchiral
