#include <doctest.h>

#include <cmath>
#include <set>

#include "rydchiral/errors.hpp"
#include "rydchiral/two_photon.hpp"

using namespace rydchiral;

namespace {

struct Setup {
  ArrayGeometry geom;
  CouplingMatrix coupling;
  ModeVector mode;
  DriveParams drive;
  EffectiveParams eff;
};

Setup make(int nside, double a, double w0, double delta_r, double omega) {
  Setup s;
  s.geom = build_array(nside, a);
  s.coupling = coupling_matrix(s.geom, polarization::circular_in_plane());
  s.mode = gaussian_mode(s.geom, w0, 0.0);
  s.drive = DriveParams{0.0, delta_r, omega, 0.0, 1e-3};
  s.drive.delta_e = raman_resonance_delta_e(delta_r, omega, mode_weighted_parameters(s.coupling, s.mode).shift);
  s.eff = reduce_two_level(s.drive, s.coupling, s.mode);
  return s;
}

}  // namespace

TEST_SUITE("two_photon") {
  TEST_CASE("pair index is a bijection onto the packed triangle") {
    const std::size_t n = 7;
    std::set<std::size_t> seen;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        CHECK(pair_index(j, k, n) == pair_index(k, j, n));
        seen.insert(pair_index(j, k, n));
      }
    CHECK(seen.size() == n * (n - 1) / 2);
    CHECK(*seen.rbegin() == n * (n - 1) / 2 - 1);
  }

  TEST_CASE("no interaction gives coherent statistics") {
    const Setup s = make(5, 0.6, 1.2, -30.0, 4.0);
    const PairAmplitudes p = pair_steady_state(s.geom, s.eff, s.mode, InteractionModel::none());
    const G2Triple g = g2_all(p, s.mode);
    CHECK(g.rr == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(g.tt == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(g.rt == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("a single atom reflects one photon at a time") {
    const Setup s = make(1, 0.6, 1.0, -30.0, 4.0);
    const PairAmplitudes p = pair_steady_state(s.geom, s.eff, s.mode, InteractionModel::hard(1.0));
    CHECK(g2_equal_time(p, s.mode, Port::backward, Port::backward) < 1e-20);
  }

  TEST_CASE("full blockade antibunches the reflection") {
    const Setup s = make(5, 0.6, 1.2, -30.0, 4.0);
    const PairAmplitudes p = pair_steady_state(s.geom, s.eff, s.mode, InteractionModel::hard(100.0));
    const G2Triple g = g2_all(p, s.mode);
    CHECK(g.rr < 1e-12);
    CHECK(p.pairs.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("ladder oracle agrees with the reduced pair model") {
    const Setup s = make(3, 0.6, 1.0, -40.0, 4.0);
    const InteractionModel inter = InteractionModel::vdw(5.0);
    const G2Triple two = g2_all(pair_steady_state(s.geom, s.eff, s.mode, inter), s.mode);
    const G2Triple three = g2_all(pair_steady_state_3level(s.geom, s.coupling, s.drive, s.mode, inter), s.mode);
    CHECK(three.tt == doctest::Approx(two.tt).epsilon(0.05));
    CHECK(three.rt == doctest::Approx(two.rt).epsilon(0.05));
  }

  TEST_CASE("pair solver enforces the atom cap") {
    const Setup s = make(17, 0.6, 2.0, -30.0, 4.0);
    REQUIRE(s.geom.size() > kMaxPairAtoms);
    CHECK_THROWS_AS(pair_steady_state(s.geom, s.eff, s.mode, InteractionModel::vdw(1.0)), ResourceError);
  }

  TEST_CASE("interaction model") {
    CHECK(InteractionModel::vdw(64.0).shift(2.0) == doctest::Approx(1.0));
    CHECK(InteractionModel::hard(1.5).blocked(1.0));
    CHECK_FALSE(InteractionModel::hard(1.5).blocked(2.0));
    CHECK(interaction_kind_from_string(to_string(InteractionKind::vdw)) == InteractionKind::vdw);
    CHECK_THROWS_AS(interaction_kind_from_string("bogus"), ConfigError);
  }
}
