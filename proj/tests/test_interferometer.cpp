#include <doctest.h>

#include <cmath>
#include <vector>

#include "rydchiral/errors.hpp"
#include "rydchiral/interferometer.hpp"

using namespace rydchiral;

TEST_SUITE("interferometer") {
  TEST_CASE("port transform") {
    const PortPair p = symmetric_port_transform(1.0, 1.0, 0.0);
    CHECK(std::abs(p.a - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(p.b) < 1e-15);
    const PortPair q = symmetric_port_transform(1.0, -1.0, 0.0);
    CHECK(std::abs(q.a) < 1e-15);
  }

  TEST_CASE("b-port displacement law is quadratic at small shifts") {
    for (double dz : {1e-5, 3e-5, 1e-4}) {
      const double exact = displacement_signal(dz);
      CHECK(std::abs(exact - displacement_signal_quadratic(dz)) / exact < 1e-6);
    }
    CHECK(displacement_signal(0.25) == doctest::Approx(1.0));
  }

  TEST_CASE("chiral lineshape") {
    for (double d : {-1.0, 0.0, 0.4}) CHECK(chiral_transmission(d, 0.0, 0.7) == doctest::Approx(1.0));
    CHECK(chiral_transmission(0.0, 0.1, 0.5) == doctest::Approx(std::pow(0.4 / 0.6, 2)));
    CHECK(chiral_transmission(0.2, 0.1, 0.5, 0.2) == doctest::Approx(chiral_transmission(0.0, 0.1, 0.5)));
    CHECK(beta_opt(0.3, 0.1) == doctest::Approx(0.75));
  }

  TEST_CASE("fit recovers a noiseless lineshape") {
    const double gt = 0.01, Gt = 0.2, c = 0.013;
    std::vector<double> d, t;
    for (int i = 0; i <= 400; ++i) {
      d.push_back(-1.0 + 2.0 * i / 400.0);
      t.push_back(chiral_transmission(d.back(), gt, Gt, c));
    }
    const WaveguideFit f = effective_emitter_fit(d, t);
    CHECK(f.gamma_tilde == doctest::Approx(gt).epsilon(1e-6));
    CHECK(f.Gamma_tilde == doctest::Approx(Gt).epsilon(1e-6));
    CHECK(f.center == doctest::Approx(c).epsilon(1e-6));
    CHECK(f.beta == doctest::Approx(Gt / (Gt + gt)).epsilon(1e-6));
  }

  TEST_CASE("amplitude fit recovers a nearly lossless emitter") {
    const double gt = 2e-4, Gt = 0.13, c = -0.004;
    std::vector<double> d;
    std::vector<cplx> a;
    for (int i = 0; i <= 400; ++i) {
      d.push_back(-2.0 + 4.0 * i / 400.0);
      a.push_back(cplx(2.0 * (d.back() - c), gt - Gt) / cplx(2.0 * (d.back() - c), gt + Gt));
    }
    const WaveguideFit f = effective_emitter_fit(d, std::span<const cplx>(a));
    CHECK(f.gamma_tilde == doctest::Approx(gt).epsilon(1e-6));
    CHECK(f.Gamma_tilde == doctest::Approx(Gt).epsilon(1e-8));
    CHECK(f.center == doctest::Approx(c).epsilon(1e-8));
  }

  TEST_CASE("fit rejects too few samples") {
    std::vector<double> d{0, 1, 2}, t{1, 0.5, 1};
    CHECK_THROWS_AS(effective_emitter_fit(d, t), ConfigError);
  }

  TEST_CASE("two-sided drive of a lossless array transmits into the a port") {
    const ArrayGeometry g = build_array(7, 0.5);
    const CouplingMatrix c = coupling_matrix(g, polarization::circular_in_plane());
    const ModeVector m = gaussian_mode(g, 1.2, 0.0);
    DriveParams d{0.0, -30.0, 4.0, 0.0, 1e-3};
    d.delta_e = raman_resonance_delta_e(d.delta_r, d.omega, mode_weighted_parameters(c, m).shift);
    const EffectiveParams eff = reduce_two_level(d, c, m);
    std::vector<double> delta{-0.1, 0.0, 0.1};
    for (const ChiralPoint& p : two_sided_spectrum(eff, m, m, delta)) {
      CHECK(p.T <= 1.0 + 1e-12);
      CHECK(p.b_intensity < 1e-20);
    }
    ModeVector wide = gaussian_mode(g, 2.0, 0.0);
    CHECK_THROWS_AS(two_sided_spectrum(eff, m, wide, delta), ConfigError);
  }

  TEST_CASE("tilted incidence: no apparent loss or gain from the polarization") {
    const ArrayGeometry g = build_array(11, 0.5);
    const double th = 10.0 * kPi / 180.0;
    for (const auto& pol : {polarization::linear_x(), polarization::linear_y()}) {
      const CouplingMatrix c = coupling_matrix(g, pol);
      const ModeVector f = gaussian_mode(g, 1.5, th), b = gaussian_mode(g, 1.5, th, Direction::backward);
      DriveParams d{0.0, -30.0, 4.0, 0.0, 1e-3};
      d.delta_e = raman_resonance_delta_e(d.delta_r, d.omega, mode_weighted_parameters(c, f).shift);
      const WaveguideFit fit = fit_effective_emitter(reduce_two_level(d, c, f), f, b, 401);
      // Lossless atoms: only finite-size scattering out of the mode remains.
      CHECK(fit.gamma_tilde > 0.0);
      CHECK(fit.beta > 0.9);
    }
  }
}
