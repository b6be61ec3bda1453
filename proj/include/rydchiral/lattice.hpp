#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rydchiral/types.hpp"

namespace rydchiral {

struct Site {
  double x = 0.0;
  double y = 0.0;
};

// Square lattice patch in the z = 0 plane. Lengths in units of lambda.
struct ArrayGeometry {
  std::vector<Site> positions;
  double lattice_constant = 0.0;
  int nside = 0;
  bool rounded = true;  // corners beyond radius (nside-1)a/2 removed

  std::size_t size() const { return positions.size(); }
  double distance(std::size_t j, std::size_t k) const;
  // Index of the site closest to the origin.
  std::size_t central_site() const;
};

ArrayGeometry build_disc_array(int nside, double a);
ArrayGeometry build_square_array(int nside, double a);
// rounded unset: full square for nside <= 9, disc above.
ArrayGeometry build_array(int nside, double a, std::optional<bool> rounded = std::nullopt);

// Throws ConfigError when an invariant is violated.
void validate_geometry(const ArrayGeometry& geom);

enum class Direction { forward, backward };

struct ModeVector {
  CVector amplitudes;
  double waist = 0.0;
  double angle = 0.0;
  Direction direction = Direction::forward;
  double norm_area = 0.0;  // a^2 sum |u_j|^2

  double norm_sum() const { return amplitudes.squaredNorm(); }
};

ModeVector gaussian_mode(const ArrayGeometry& geom, double w0, double theta,
                         Direction direction = Direction::forward);

// Peak value sqrt(2/(pi w0^2)) of the continuum profile.
double mode_peak(double w0);

struct BraggCheck {
  bool satisfied = false;
  double margin = 0.0;  // 1/(1+sin theta) - a
};

BraggCheck validate_bragg(double a, double theta);

}  // namespace rydchiral
