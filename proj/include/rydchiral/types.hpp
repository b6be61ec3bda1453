#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace rydchiral {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

// Natural units: Gamma = 1, lambda = 1, c = 1.
inline constexpr double kWavenumber = 2.0 * kPi;
// g^2/c for a single atom on the D-line transition.
inline constexpr double kCouplingRate = 3.0 / (8.0 * kPi);

// Infinite-array collective decay rate 3/(4 pi a^2).
inline double closed_form_collective_decay(double a) { return 3.0 / (4.0 * kPi * a * a); }

}  // namespace rydchiral
