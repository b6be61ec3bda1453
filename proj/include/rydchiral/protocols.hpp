#pragma once

#include <functional>
#include <vector>

#include "rydchiral/dipole_coupling.hpp"
#include "rydchiral/lattice.hpp"
#include "rydchiral/pulse_dynamics.hpp"
#include "rydchiral/steady_state.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

struct StorageState {
  cplx c0 = 1.0;
  CVector c;         // Rydberg amplitude per atom
  double P_u = 0.0;  // population of the driven spin-wave mode
  std::vector<double> times;        // from the start of the pulse
  std::vector<double> P_u_history;  // sampled alongside times

  double norm() const { return std::norm(c0) + c.squaredNorm(); }
};

// Blockaded single-excitation dynamics driven by the two-photon Rabi
// frequency g_bar u_j a_in s(t), with s = 1 during a square pulse.
StorageState pi_pulse_storage(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                              const PulseSpec& pulse, std::size_t samples = 200);

struct PiCalibration {
  double amplitude = 0.0;  // a_in
  double P_u = 0.0;        // achieved in a verification run
};

// Square-pulse amplitude with collective area tau |g_bar| a_in ||u|| = pi/2,
// the full transfer |0> -> spin wave.
double pi_pulse_amplitude(const EffectiveParams& eff, const ModeVector& mode, double tau);
PiCalibration calibrate_pi_area(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                double tau);

struct ControlRamp {
  double omega_max = 4.0;
  double rise_time = 0.0;  // Omega(t) = omega_max (1 - exp(-t / rise_time)); 0 means a step
  double delta_e = 0.0;
  double delta_r = 0.0;
  double gamma = 0.0;  // Rydberg decay during readout
  std::function<double(double)> profile;  // overrides the exponential ramp when set

  double omega(double t) const;
  // Default readout: single-photon resonance with the collective shift,
  // two-photon resonance, rise time 2 / Gamma_c.
  static ControlRamp readout(double collective_shift, double collective_decay, double omega_max = 4.0);
};

struct RetrievalResult {
  std::vector<double> times;
  std::vector<double> emission;  // |E_out|^2, photon flux into the mode
  double eta = 0.0;
  double residual = 0.0;  // excitation left at the end
  CVector e_final, c_final;
};

// Full ladder single-excitation readout; the stored Rydberg amplitudes seed c_j.
RetrievalResult eit_retrieval(const StorageState& stored, const CouplingMatrix& coupling, const ControlRamp& ramp,
                              const ModeVector& mode, double residual_target = 1e-6, double t_max = 0.0);

}  // namespace rydchiral
