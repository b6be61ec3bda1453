#include "rydchiral/lattice.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>

#include "rydchiral/errors.hpp"

namespace rydchiral {

double ArrayGeometry::distance(std::size_t j, std::size_t k) const {
  return std::hypot(positions[j].x - positions[k].x, positions[j].y - positions[k].y);
}

std::size_t ArrayGeometry::central_site() const {
  std::size_t best = 0;
  double best_r = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const double r = std::hypot(positions[j].x, positions[j].y);
    if (r < best_r) {
      best_r = r;
      best = j;
    }
  }
  return best;
}

namespace {

void check_side(int nside, double a) {
  if (nside < 1 || nside % 2 == 0)
    throw ConfigError("nside must be a positive odd integer, got " + std::to_string(nside));
  if (!(a > 0.0)) throw ConfigError("lattice constant must be positive");
}

ArrayGeometry enumerate(int nside, double a, bool rounded) {
  check_side(nside, a);
  const int h = (nside - 1) / 2;
  ArrayGeometry g;
  g.lattice_constant = a;
  g.nside = nside;
  g.rounded = rounded;
  // Row-major in y then x; integer test keeps the rule exact.
  for (int j = -h; j <= h; ++j) {
    for (int i = -h; i <= h; ++i) {
      if (rounded && i * i + j * j > h * h) continue;
      g.positions.push_back({a * i, a * j});
    }
  }
  return g;
}

}  // namespace

ArrayGeometry build_disc_array(int nside, double a) { return enumerate(nside, a, true); }

ArrayGeometry build_square_array(int nside, double a) { return enumerate(nside, a, false); }

ArrayGeometry build_array(int nside, double a, std::optional<bool> rounded) {
  return enumerate(nside, a, rounded.value_or(nside > 9));
}

void validate_geometry(const ArrayGeometry& geom) {
  const double a = geom.lattice_constant;
  check_side(geom.nside, a);
  if (geom.positions.empty()) throw ConfigError("geometry has no sites");
  const int h = (geom.nside - 1) / 2;
  std::set<std::pair<long, long>> seen;
  for (std::size_t n = 0; n < geom.positions.size(); ++n) {
    const auto [x, y] = geom.positions[n];
    const double fi = x / a, fj = y / a;
    const long i = std::lround(fi), j = std::lround(fj);
    if (std::abs(fi - i) > 1e-9 || std::abs(fj - j) > 1e-9)
      throw ConfigError("site " + std::to_string(n) + " is not on the lattice");
    if (std::abs(i) > h || std::abs(j) > h)
      throw ConfigError("site " + std::to_string(n) + " lies outside the nside window");
    if (geom.rounded && i * i + j * j > static_cast<long>(h) * h)
      throw ConfigError("site " + std::to_string(n) + " violates the disc rounding rule");
    if (!seen.emplace(i, j).second)
      throw ConfigError("duplicate site at index " + std::to_string(n));
  }
}

double mode_peak(double w0) { return std::sqrt(2.0 / (kPi * w0 * w0)); }

ModeVector gaussian_mode(const ArrayGeometry& geom, double w0, double theta, Direction direction) {
  if (!(w0 > 0.0)) throw ConfigError("beam waist must be positive");
  if (!(std::abs(theta) < kPi / 2)) throw ConfigError("incidence angle must satisfy |theta| < pi/2");
  ModeVector m;
  m.waist = w0;
  m.angle = theta;
  m.direction = direction;
  m.amplitudes.resize(static_cast<Eigen::Index>(geom.size()));
  const double peak = mode_peak(w0);
  const double kx = kWavenumber * std::sin(theta);
  for (std::size_t j = 0; j < geom.size(); ++j) {
    const auto [x, y] = geom.positions[j];
    const double r2 = x * x + y * y;
    m.amplitudes[static_cast<Eigen::Index>(j)] = peak * std::exp(-r2 / (w0 * w0)) * std::polar(1.0, kx * x);
  }
  const double a = geom.lattice_constant;
  m.norm_area = a * a * m.norm_sum();
  return m;
}

BraggCheck validate_bragg(double a, double theta) {
  if (!(a > 0.0)) throw ConfigError("lattice constant must be positive");
  // Tilt direction is irrelevant for the first diffraction order.
  const double bound = 1.0 / (1.0 + std::abs(std::sin(theta)));
  return {a <= bound, bound - a};
}

}  // namespace rydchiral
