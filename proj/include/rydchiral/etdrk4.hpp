#pragma once

#include "rydchiral/types.hpp"

namespace rydchiral {

// Fourth-order exponential time differencing (Cox-Matthews) for
// y' = L y + N(t, y) with constant diagonal L. Coefficients near z = 0 use
// contour averages to avoid cancellation.
class Etdrk4 {
 public:
  Etdrk4(const CVector& linear, double h);

  double step_size() const { return h_; }

  // nonlinear(t, y, out) writes N(t, y) into out.
  template <class Nonlinear>
  void step(double t, CVector& y, Nonlinear&& nonlinear) {
    const double h2 = 0.5 * h_;
    nonlinear(t, y, nu_);
    a_ = e2_.cwiseProduct(y) + q_.cwiseProduct(nu_);
    nonlinear(t + h2, a_, na_);
    b_ = e2_.cwiseProduct(y) + q_.cwiseProduct(na_);
    nonlinear(t + h2, b_, nb_);
    c_ = e2_.cwiseProduct(a_) + q_.cwiseProduct(2.0 * nb_ - nu_);
    nonlinear(t + h_, c_, nc_);
    y = e_.cwiseProduct(y) + f1_.cwiseProduct(nu_) + 2.0 * f2_.cwiseProduct(na_ + nb_) + f3_.cwiseProduct(nc_);
  }

 private:
  double h_;
  CVector e_, e2_, q_, f1_, f2_, f3_;
  CVector nu_, na_, nb_, nc_, a_, b_, c_;
};

}  // namespace rydchiral
