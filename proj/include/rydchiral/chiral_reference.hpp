#pragma once

#include <functional>
#include <vector>

#include "rydchiral/pulse_dynamics.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

// Ideal two-level emitter coupled to a single chiral waveguide mode.
struct Emitter {
  double Gamma_tilde = 1.0;  // emission into the guided mode
  double gamma_tilde = 0.0;  // loss
  double detuning = 0.0;     // carrier minus emitter resonance
};

struct EmitterChain {
  std::vector<Emitter> emitters;  // cascaded, no back-action

  std::size_t size() const { return emitters.size(); }
};

// Cascaded scattering of one and two photons in the input envelope.
TwoPhotonGrid chain_scatter(const EmitterChain& chain, const PulseSpec& pulse, int substeps = 8);
// Arbitrary sampled input mode on a grid (cubic interpolation between samples).
TwoPhotonGrid chain_scatter(const EmitterChain& chain, const TimeGrid& grid, const CVector& input, int substeps = 8);

struct SortingResult {
  double F = 0.0;  // dominant Schmidt weight of the normalized two-photon output
  double P = 0.0;  // two-photon survival
  CVector psi_out;    // normalized one-photon output mode
  CVector theta_out;  // dominant two-photon mode, psi2 ~ lambda_1 theta theta
  double lambda1 = 0.0;
  double orthogonality = 0.0;          // |<psi_out|theta_out>|
  double time_reversal_overlap = 0.0;  // max_T |<theta_out|phi(T - t)>|
  double delay = 0.0;                  // the maximizing T
};

SortingResult sorting_metrics(const TwoPhotonGrid& grid, const PulseSpec& input);

// Grid wide enough for the pulse and the emitter response.
TimeGrid chain_grid(const EmitterChain& chain, double tau);

struct SortingOptimum {
  double tau = 0.0;
  SortingResult result;
};

// Golden-section search over [0.1, 20] / Gamma_tilde of the first emitter.
// The objective is F (1 - orthogonality^2): F alone climbs back toward one
// for long pulses, where the pair is uncorrelated and nothing is sorted.
SortingOptimum optimize_sorting_duration(const EmitterChain& chain, PulseShape shape = PulseShape::gaussian,
                                         double tolerance = 1e-3);

struct NsGateResult {
  cplx c0, c1, c2;  // output amplitudes in the target modes
  double gate_fidelity = 0.0;
  SortingResult sorting;
};

// Sorter, pi phase on the two-photon path, time reversal, second pass.
// Splitters, phase shifter and time reversal are ideal.
NsGateResult ns_gate_circuit(cplx c0, cplx c1, cplx c2, const EmitterChain& chain, const PulseSpec& pulse);

}  // namespace rydchiral
