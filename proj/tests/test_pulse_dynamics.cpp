#include <doctest.h>

#include <cmath>

#include "rydchiral/errors.hpp"
#include "rydchiral/interferometer.hpp"
#include "rydchiral/pulse_dynamics.hpp"

using namespace rydchiral;

namespace {

struct Setup {
  ArrayGeometry geom;
  ModeVector mode;
  EffectiveParams eff;
};

Setup make() {
  Setup s;
  s.geom = build_array(3, 0.6);
  const CouplingMatrix c = coupling_matrix(s.geom, polarization::circular_in_plane());
  s.mode = gaussian_mode(s.geom, 0.8, 0.0);
  DriveParams d{0.0, -30.0, 6.0, 0.0, 1e-3};
  d.delta_e = raman_resonance_delta_e(d.delta_r, d.omega, mode_weighted_parameters(c, s.mode).shift);
  s.eff = reduce_two_level(d, c, s.mode);
  return s;
}

PulseSpec pulse_for(const Setup& s, double tau, double dt) {
  PulseSpec p;
  p.duration = tau;
  const double width = s.eff.collective_decay;
  p.grid = make_grid(-6.0 * tau, 6.0 * tau + 30.0 / width, dt);
  return p;
}

}  // namespace

TEST_SUITE("pulse_dynamics") {
  TEST_CASE("grids and envelopes") {
    const TimeGrid g = make_grid(-1.0, 1.0, 0.1);
    CHECK(g.count == 21);
    CHECK(g.back() == doctest::Approx(1.0));
    PulseSpec p;
    p.duration = 0.7;
    p.grid = make_grid(-10.0, 10.0, 0.001);
    CHECK(p.sample().squaredNorm() * p.grid.dt == doctest::Approx(1.0).epsilon(1e-9));
    p.shape = PulseShape::square;
    CHECK(p.sample().squaredNorm() * p.grid.dt == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(pulse_shape_from_string(to_string(PulseShape::square)) == PulseShape::square);
  }

  TEST_CASE("long pulses follow the steady-state transmission") {
    const Setup s = make();
    const double tau = 200.0 / s.eff.collective_decay;
    const PulseSpec p = pulse_for(s, tau, std::min(tau, 1.0 / s.eff.collective_decay) / 60.0);
    PulseOptions opt;
    opt.two_photon = false;
    const TwoPhotonGrid out = propagate_weak_pulse(s.geom, s.eff, s.mode, InteractionModel::none(), p, opt);
    std::vector<double> d{0.0};
    const cplx t = two_sided_spectrum(s.eff, s.mode, s.mode, d)[0].a_amplitude;
    const std::size_t mid = static_cast<std::size_t>(std::llround(-p.grid.t0 / p.grid.dt));
    const cplx ratio = out.psi[static_cast<Eigen::Index>(mid)] / p.envelope(p.grid.at(mid));
    CHECK(std::abs(ratio - t) < 1e-3);
  }

  TEST_CASE("without interaction the two-photon output factorizes") {
    const Setup s = make();
    const double tau = 2.0 / s.eff.collective_decay;
    const PulseSpec p = pulse_for(s, tau, std::min(tau, 1.0 / s.eff.collective_decay) / 60.0);
    const TwoPhotonGrid out = propagate_weak_pulse(s.geom, s.eff, s.mode, InteractionModel::none(), p);
    const CMatrix b = extract_bound_state(out);
    CHECK(b.squaredNorm() / out.psi2.squaredNorm() < 1e-8);
  }

  TEST_CASE("blockade creates a bound state and keeps the norm") {
    const Setup s = make();
    const double tau = 2.0 / s.eff.collective_decay;
    const PulseSpec p = pulse_for(s, tau, std::min(tau, 1.0 / s.eff.collective_decay) / 60.0);
    const TwoPhotonGrid out = propagate_weak_pulse(s.geom, s.eff, s.mode, InteractionModel::hard(10.0), p);
    CHECK(extract_bound_state(out).squaredNorm() / out.psi2.squaredNorm() > 1e-3);
    CHECK(out.P1() <= 1.0 + 1e-6);
    CHECK(out.P2() <= 1.0 + 1e-6);
  }

  TEST_CASE("halving the step leaves the output unchanged") {
    const Setup s = make();
    const double tau = 2.0 / s.eff.collective_decay;
    const PulseSpec coarse = pulse_for(s, tau, std::min(tau, 1.0 / s.eff.collective_decay) / 60.0);
    PulseSpec fine = coarse;
    fine.grid.dt = coarse.grid.dt / 2;
    fine.grid.count = 2 * coarse.grid.count - 1;
    const InteractionModel inter = InteractionModel::hard(10.0);
    const TwoPhotonGrid a = propagate_weak_pulse(s.geom, s.eff, s.mode, inter, coarse);
    const TwoPhotonGrid b = propagate_weak_pulse(s.geom, s.eff, s.mode, inter, fine);
    double err1 = 0.0, err2 = 0.0;
    for (Eigen::Index i = 0; i < a.psi.size(); ++i) {
      err1 = std::max(err1, std::abs(a.psi[i] - b.psi[2 * i]));
      for (Eigen::Index j = 0; j < a.psi.size(); j += 7) err2 = std::max(err2, std::abs(a.psi2(i, j) - b.psi2(2 * i, 2 * j)));
    }
    CHECK(err1 < 1e-6 * a.psi.cwiseAbs().maxCoeff());
    CHECK(err2 < 1e-6 * a.psi2.cwiseAbs().maxCoeff());
  }

  TEST_CASE("preconditions") {
    const Setup s = make();
    PulseSpec p = pulse_for(s, 1.0, 0.5);
    CHECK_THROWS_AS(propagate_weak_pulse(s.geom, s.eff, s.mode, InteractionModel::none(), p), ConfigError);
    p = pulse_for(s, 10.0, 0.01);
    p.amplitude = 0.1;
    CHECK_THROWS_AS(propagate_weak_pulse(s.geom, s.eff, s.mode, InteractionModel::none(), p), ConfigError);
  }

  TEST_CASE("bound-state decay fit on a synthetic exponential") {
    const TimeGrid g = make_grid(0.0, 10.0, 0.01);
    const auto n = static_cast<Eigen::Index>(g.count);
    CMatrix b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = std::exp(-0.35 * std::abs(g.at(i) - g.at(j)));
    CHECK(bound_state_decay_rate(b, g, 2.0, 0.5, 5.0) == doctest::Approx(0.35).epsilon(1e-9));
  }
}
