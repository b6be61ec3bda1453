#pragma once

#include <cstddef>
#include <string>

#include "rydchiral/dipole_coupling.hpp"
#include "rydchiral/lattice.hpp"
#include "rydchiral/steady_state.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

enum class InteractionKind { none, vdw, hard_blockade };

struct InteractionModel {
  InteractionKind kind = InteractionKind::none;
  double c6 = 0.0;               // Gamma lambda^6, vdw only
  double blockade_radius = 0.0;  // lambda, hard blockade only
  double sign = 1.0;             // +1 repulsive

  static InteractionModel none() { return {}; }
  static InteractionModel vdw(double c6, double sign = 1.0) { return {InteractionKind::vdw, c6, 0.0, sign}; }
  static InteractionModel hard(double rb) { return {InteractionKind::hard_blockade, 0.0, rb, 1.0}; }

  // Level shift of the doubly excited Rydberg pair at separation r.
  double shift(double r) const;
  bool blocked(double r) const { return kind == InteractionKind::hard_blockade && r < blockade_radius; }
  // Hard-core pairs; the linear limit keeps bosonic double occupation.
  bool hard_core() const { return kind != InteractionKind::none; }
};

std::string to_string(InteractionKind kind);
InteractionKind interaction_kind_from_string(const std::string& s);

// Weak-drive amplitudes per unit source, so results do not depend on the
// probe strength. Physical amplitudes are probe_scale^n times these.
struct PairAmplitudes {
  CVector singles;          // radiating coherence per site
  CVector pairs;            // packed upper triangle j<k, row-major
  CVector on_site;          // double occupation, linear limit only (else empty)
  double emission_coupling = 0.0;  // g^2/c of the radiating transition
  double probe_scale = 0.0;        // Omega_p / u_peak

  std::size_t atom_count() const { return static_cast<std::size_t>(singles.size()); }
  cplx pair(std::size_t j, std::size_t k) const;
};

std::size_t pair_index(std::size_t j, std::size_t k, std::size_t n);

// Reduced model. Dense pair solve over unblocked hard-core pairs.
PairAmplitudes pair_steady_state(const ArrayGeometry& geom, const EffectiveParams& eff, const ModeVector& mode,
                                 const InteractionModel& interaction, double probe_rabi = 1e-3);

// Full ladder in the {ee, er, rr} two-excitation manifold (rr eliminated
// algebraically). N <= 60.
PairAmplitudes pair_steady_state_3level(const ArrayGeometry& geom, const CouplingMatrix& coupling,
                                        const DriveParams& drive, const ModeVector& mode,
                                        const InteractionModel& interaction);

inline constexpr std::size_t kMaxPairAtoms = 150;
inline constexpr std::size_t kMaxOracleAtoms = 60;

enum class Port { forward, backward };

struct PortAmplitudes {
  cplx one_alpha, one_beta, two;
};

PortAmplitudes port_amplitudes(const PairAmplitudes& pair, const ModeVector& mode, Port alpha, Port beta);
double g2_equal_time(const PairAmplitudes& pair, const ModeVector& mode, Port alpha, Port beta);

struct G2Triple {
  double rr = 0.0;  // reflected, reflected
  double tt = 0.0;  // transmitted, transmitted
  double rt = 0.0;  // reflected, transmitted
};

G2Triple g2_all(const PairAmplitudes& pair, const ModeVector& mode);

}  // namespace rydchiral
