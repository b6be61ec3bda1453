#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rydchiral/dipole_coupling.hpp"
#include "rydchiral/lattice.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

struct DriveParams {
  double delta_e = 0.0;     // probe detuning from |e>
  double delta_r = 0.0;     // control detuning from |r>
  double omega = 0.0;       // control Rabi frequency
  double gamma = 0.0;       // Rydberg decay rate
  double probe_rabi = 1e-3; // peak probe Rabi frequency

  bool weak_drive() const { return probe_rabi <= 0.01; }
};

// Two-level image of the ladder after eliminating |e>.
struct EffectiveParams {
  double delta_bar = 0.0;   // De + Dr - Omega^2/De
  double g_ratio = 0.0;     // g_bar/g = -Omega/De
  double gamma = 0.0;
  RMatrix J_bar;            // (Omega/De)^2 J
  RMatrix Gam_bar;          // (Omega/De)^2 Gam
  double collective_shift = 0.0;  // mode-weighted
  double collective_decay = 0.0;
  double emission_factor = 1.0;  // tilt correction of g^2/c for the driven mode
  double epsilon = 0.0;     // |eps| of the dropped background term, relative to the input

  double scale() const { return g_ratio * g_ratio; }
  std::size_t size() const { return static_cast<std::size_t>(J_bar.rows()); }
  // (Delta_bar + i gamma/2) I + J_bar + i Gam_bar/2
  CMatrix generator() const;
};

EffectiveParams reduce_two_level(const DriveParams& drive, const CouplingMatrix& coupling,
                                 const ModeVector& mode);

struct LinearResponse {
  CVector excited;  // <sigma_ge>_j, linear in the probe Rabi frequency
  CVector rydberg;  // <sigma_gr>_j
  cplx reflection;
  cplx transmission;
  double R = 0.0, T = 0.0, L = 0.0;
};

struct SpectrumPoint {
  double detuning = 0.0;
  double R = 0.0, T = 0.0, L = 0.0;
};

// Full ladder. Amplitudes scale linearly with drive.probe_rabi.
LinearResponse solve_single_excitation_3level(const CouplingMatrix& coupling, const ModeVector& mode,
                                              const DriveParams& drive);
// Tilted or asymmetric illumination: project onto separate output modes.
LinearResponse solve_single_excitation_3level(const CouplingMatrix& coupling, const ModeVector& mode,
                                              const ModeVector& forward_out, const ModeVector& backward_out,
                                              const DriveParams& drive);

// Reduced model; collective quantities of the reduced generator only.
LinearResponse solve_single_excitation_2level(const EffectiveParams& eff, const ModeVector& mode,
                                              double probe_rabi = 1e-3);
// Same with the first-order background term kept (diagnostic).
cplx epsilon_reflection(const DriveParams& drive, const ModeVector& mode);

std::vector<SpectrumPoint> spectrum_3level(const CouplingMatrix& coupling, const ModeVector& mode,
                                           DriveParams drive, std::span<const double> delta_e);
// Reduced spectrum evaluated on a grid of Delta_e; the point's detuning is Delta_bar.
std::vector<SpectrumPoint> spectrum_2level(const CouplingMatrix& coupling, const ModeVector& mode,
                                           DriveParams drive, std::span<const double> delta_e);

// Dressed-state reflection maxima (De+, De-).
std::pair<double, double> at_resonances(double delta_r, double delta_c, double omega);

// Infinite-array reflection of the ladder (plane wave).
double closed_form_reflection_3level(const DriveParams& drive, double a, double delta_c, double gamma_c);
// Lorentzian of the reduced emitter around the narrow resonance.
double closed_form_reflection_2level(double delta_bar, double delta_bar_c, double gamma_bar_c, double gamma);
// Reflection with a single Rydberg excitation blocking the ladder.
double blockaded_reflection(double delta_e, double a, double delta_c, double gamma_c);

double blockade_radius(double c6, double gamma_bar_c);

// Probe detuning on the narrow branch with Delta_bar + Delta_bar_c = 0,
// where Delta_bar_c = (Omega/De)^2 shift and shift is the unscaled
// mode-weighted collective shift.
double raman_resonance_delta_e(double delta_r, double omega, double shift);

// Default CLI grid: 400 points on [De- - 5, De+ + 5] plus 100 within
// +-5 Gamma_bar_c of the narrow resonance, sorted.
std::vector<double> default_spectrum_grid(const DriveParams& drive, double delta_c, double gamma_c);

}  // namespace rydchiral
