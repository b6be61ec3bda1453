#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "rydchiral/lattice.hpp"
#include "rydchiral/types.hpp"

namespace rydchiral {

using Vector3 = Eigen::Vector3d;
using CVector3 = Eigen::Vector3cd;
using CTensor3 = Eigen::Matrix3cd;

// Free-space dyadic Green's tensor. Throws on zero separation.
CTensor3 greens_tensor(const Vector3& r, double k = kWavenumber);

namespace polarization {
CVector3 circular_in_plane();  // (x + i y)/sqrt(2)
CVector3 linear_x();
CVector3 linear_y();
}  // namespace polarization

// Dipole-dipole couplings in units of Gamma. Off-diagonal entries of
// J + i Gam/2 come from the Green's tensor; Gam_jj = 1 and J_jj = 0.
struct CouplingMatrix {
  RMatrix J;
  RMatrix Gam;
  CVector3 orientation = CVector3::Zero();
  double k = kWavenumber;

  std::size_t size() const { return static_cast<std::size_t>(J.rows()); }
  // J + i Gam / 2
  CMatrix complex_matrix() const;
};

CouplingMatrix coupling_matrix(const ArrayGeometry& geom, const CVector3& orientation);

enum class CollectiveDefinition { lattice_sum, mode_weighted };

struct CollectiveParams {
  double shift = 0.0;  // Delta_c
  double decay = 0.0;  // Gamma_c
  CollectiveDefinition definition = CollectiveDefinition::mode_weighted;
};

struct CollectivePair {
  CollectiveParams lattice_sum;
  CollectiveParams mode_weighted;
};

// Sum over the couplings of the site nearest the origin.
CollectiveParams lattice_sum_parameters(const CouplingMatrix& coupling, const ArrayGeometry& geom);
// u^dag J u / u^dag u and u^dag Gam u / u^dag u.
CollectiveParams mode_weighted_parameters(const CouplingMatrix& coupling, const ModeVector& mode);
// Mode emission coupling relative to normal incidence for a beam tilted by
// theta in the x-z plane: |d_perp|^2 / cos(theta), the transverse part of the
// dipole squared over the projected sheet area.
double emission_factor(const CVector3& orientation, double theta);

CollectivePair collective_parameters(const CouplingMatrix& coupling, const ArrayGeometry& geom,
                                     const ModeVector& mode);

// Binary cache: header {u32 magic 'RDCM', u32 N, f64 k}, then J and Gam
// as row-major little-endian doubles. Orientation is not stored.
void write_coupling(std::ostream& out, const CouplingMatrix& c);
CouplingMatrix read_coupling(std::istream& in);
void write_coupling(const std::string& path, const CouplingMatrix& c);
CouplingMatrix read_coupling(const std::string& path);

}  // namespace rydchiral
