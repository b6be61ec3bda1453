#include "rydchiral/etdrk4.hpp"

#include <cmath>

#include "rydchiral/errors.hpp"

namespace rydchiral {

namespace {

struct Coefficients {
  cplx q, f1, f2, f3;
};

Coefficients direct(cplx z) {
  const cplx ez = std::exp(z), z3 = z * z * z;
  return {(std::exp(0.5 * z) - 1.0) / z, (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3,
          (2.0 + z + ez * (z - 2.0)) / z3, (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3};
}

Coefficients contour(cplx z) {
  constexpr int kPoints = 32;
  Coefficients acc{};
  for (int m = 0; m < kPoints; ++m) {
    const cplx r = z + std::polar(1.0, kPi * (m + 0.5) / kPoints * 2.0);
    const Coefficients c = direct(r);
    acc.q += c.q;
    acc.f1 += c.f1;
    acc.f2 += c.f2;
    acc.f3 += c.f3;
  }
  const double inv = 1.0 / kPoints;
  return {acc.q * inv, acc.f1 * inv, acc.f2 * inv, acc.f3 * inv};
}

}  // namespace

Etdrk4::Etdrk4(const CVector& linear, double h) : h_(h) {
  if (!(h > 0.0)) throw ConfigError("Etdrk4: step must be positive");
  const Eigen::Index n = linear.size();
  e_.resize(n);
  e2_.resize(n);
  q_.resize(n);
  f1_.resize(n);
  f2_.resize(n);
  f3_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx z = linear[i] * h;
    if (z.real() > 50.0) throw NumericalError("Etdrk4: growing linear mode");
    const Coefficients c = std::abs(z) < 1.0 ? contour(z) : direct(z);
    e_[i] = std::exp(z);
    e2_[i] = std::exp(0.5 * z);
    // q multiplies h/2 in the half step: (e^{z/2}-1)/L = h * (e^{z/2}-1)/z.
    q_[i] = h * c.q;
    f1_[i] = h * c.f1;
    f2_[i] = h * c.f2;
    f3_[i] = h * c.f3;
  }
  for (CVector* v : {&nu_, &na_, &nb_, &nc_, &a_, &b_, &c_}) v->setZero(n);
}

}  // namespace rydchiral
