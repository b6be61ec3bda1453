#pragma once

#include <cstddef>
#include <string>

#include "rydchiral/lattice.hpp"
#include "rydchiral/steady_state.hpp"
#include "rydchiral/two_photon.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t count = 0;

  double at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double back() const { return at(count - 1); }
  bool matches(const TimeGrid& o) const;
};

// Uniform grid covering [t_begin, t_end] with step dt.
TimeGrid make_grid(double t_begin, double t_end, double dt);

enum class PulseShape { gaussian, square };

struct PulseSpec {
  PulseShape shape = PulseShape::gaussian;
  double duration = 1.0;          // tau
  double carrier_detuning = 0.0;  // delta_0, shifts Delta_bar
  double amplitude = 1e-3;        // a_in
  TimeGrid grid;

  // Unit-norm envelope centered on t = 0.
  double envelope(double t) const;
  CVector sample() const;
};

std::string to_string(PulseShape s);
PulseShape pulse_shape_from_string(const std::string& s);

// Output one-photon amplitude psi(t) and two-photon amplitude psi2(t,t'),
// both normalized by the input amplitude.
struct TwoPhotonGrid {
  TimeGrid grid;
  CVector psi;
  CMatrix psi2;  // symmetric, full storage

  double P1() const { return psi.squaredNorm() * grid.dt; }
  double P2() const { return psi2.squaredNorm() * grid.dt * grid.dt; }
};

struct PulseOptions {
  int substeps = 4;          // internal steps per output interval
  bool two_photon = true;
  unsigned threads = 0;      // 0: hardware concurrency
};

// Unidirectional configuration: the array sees both arms with the same
// in-plane mode, the output is the symmetric port.
TwoPhotonGrid propagate_weak_pulse(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                   const InteractionModel& interaction, const PulseSpec& pulse,
                                   const PulseOptions& options = {});

CMatrix extract_bound_state(const TwoPhotonGrid& grid);

// Amplitude decay rate of |psi_b(t_anchor + s, t_anchor)| from a log-linear
// least-squares fit over s in [lag_min, lag_max].
double bound_state_decay_rate(const CMatrix& psi_b, const TimeGrid& grid, double t_anchor, double lag_min,
                              double lag_max);

struct Infidelity {
  double one_photon = 0.0;
  double two_photon = 0.0;
};

Infidelity overlap_infidelity(const TwoPhotonGrid& a, const TwoPhotonGrid& b);

}  // namespace rydchiral
