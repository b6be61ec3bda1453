#pragma once

#include <span>
#include <vector>

#include "rydchiral/lattice.hpp"
#include "rydchiral/steady_state.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

struct PortPair {
  cplx a;  // symmetric superposition, carries the emitter field
  cplx b;  // antisymmetric superposition
};

// a = (fwd + bwd)/sqrt(2) + emitter, b = (fwd - bwd)/sqrt(2).
PortPair symmetric_port_transform(cplx forward, cplx backward, cplx emitter = 0.0);

// Output b-port intensity when the two arms differ in path by 2 dz
// (array displaced by dz along the axis), input intensity 1.
double displacement_signal(double dz);
// Leading small-displacement law 4 pi^2 dz^2.
double displacement_signal_quadratic(double dz);

struct ChiralPoint {
  double delta = 0.0;  // Delta_bar + Delta_bar_c
  cplx a_amplitude;    // a-port output per input amplitude
  double T = 0.0;      // |a_amplitude|^2
  double b_intensity = 0.0;
};

// Two-sided illumination, split symmetrically by a beam splitter.
std::vector<ChiralPoint> two_sided_spectrum(const EffectiveParams& eff, const ModeVector& mode_fwd,
                                            const ModeVector& mode_bwd, std::span<const double> delta);

// Transmission of a chiral emitter with loss gamma_t and waveguide rate Gamma_t.
double chiral_transmission(double delta, double gamma_t, double Gamma_t, double center = 0.0);

struct WaveguideFit {
  double gamma_tilde = 0.0;
  double Gamma_tilde = 0.0;
  double beta = 0.0;
  double center = 0.0;
  double residual = 0.0;  // RMS over the fitted window
  int evaluations = 0;
};

// Least squares on 1 - 4P/(4(d-c)^2 + Gt^2) with Gt = Gamma+gamma,
// P = Gamma*gamma; Gamma_tilde is taken as the larger root.
WaveguideFit effective_emitter_fit(std::span<const double> delta, std::span<const double> T);
// Same emitter fitted to the complex a-port amplitude
// (2d + i(gamma - Gamma))/(2d + i(gamma + Gamma)). The intensity is nearly
// flat when losses are small, so only the phase pins Gamma down.
WaveguideFit effective_emitter_fit(std::span<const double> delta, std::span<const cplx> amplitude);

double beta_opt(double gamma_bar_c, double gamma);

// Scans two_sided_spectrum over +-width around the collective resonance
// (width 0: 15 (Gamma_bar_c + gamma)) and fits the complex amplitude.
WaveguideFit fit_effective_emitter(const EffectiveParams& eff, const ModeVector& mode_fwd, const ModeVector& mode_bwd,
                                   std::size_t points = 801, double width = 0.0);

}  // namespace rydchiral
