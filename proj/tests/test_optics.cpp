#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fbc/lattice.hpp"
#include "fbc/optics.hpp"

using namespace fbc;

namespace {

const FrequencyLattice kLattice{193.4, 49.6, 2, 100};

// Independent power-series oracle: J_n(x) = sum_m (-1)^m (x/2)^{n+2m} / (m! (n+m)!),
// summed until terms vanish at machine precision.
double bessel_series(int n, double x) {
  const int an = std::abs(n);
  double term = std::pow(x / 2.0, an);
  for (int k = 1; k <= an; ++k) term /= k;
  double sum = term;
  for (int m = 1; m < 400; ++m) {
    term *= -(x / 2.0) * (x / 2.0) / (m * (m + an));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1.0)) break;
  }
  return (n < 0 && (n & 1)) ? -sum : sum;
}

}  // namespace

TEST_CASE("bessel_j matches the series oracle across the envelope") {
  CHECK(bessel_j(0, 0.0) == doctest::Approx(1.0));
  CHECK(bessel_j(1, 0.0) == doctest::Approx(0.0));
  CHECK(std::abs(bessel_j(0, 1.0) - 0.7651976865579666) < 1e-12);
  for (int n = 0; n <= 20; ++n)
    for (double x = 0.0; x <= 10.0; x += 0.5)
      CHECK(std::abs(bessel_j(n, x) - bessel_series(n, x)) < 1e-10);
  CHECK_THROWS_AS(bessel_j(61, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_j(0, -0.5), std::domain_error);
  CHECK_THROWS_AS(bessel_j(0, 25.0), std::domain_error);
}

TEST_CASE("bessel symmetry and recurrence") {
  for (int n = 1; n <= 12; ++n)
    for (double x = 0.25; x <= 10.0; x += 0.75) {
      CHECK(std::abs(bessel_j(-n, x) - (n % 2 ? -1.0 : 1.0) * bessel_j(n, x)) <
            1e-14);
      CHECK(std::abs(bessel_j(n - 1, x) + bessel_j(n + 1, x) -
                     2.0 * n / x * bessel_j(n, x)) < 1e-10);
    }
}

TEST_CASE("apply_mask multiplies both photons by the shared transmission") {
  const auto state = make_comb_state(kLattice, {0, 0, 0, 0, 0, 1.0, 1.0});
  SpectralMask mask = SpectralMask::phase_only();
  mask.set_phase(14, std::numbers::pi / 2).set_phase(-14, std::numbers::pi / 2);
  const auto after = apply_mask(state, mask);
  const double rel =
      std::arg(after.amplitude(14, -14)) - std::arg(after.amplitude(12, -12));
  CHECK(rel == doctest::Approx(std::numbers::pi));
}

TEST_CASE("all-ones mask is the identity") {
  const auto state = make_comb_state(kLattice, {1.0, cplx{0.0, 1.0}});
  const auto after = apply_mask(state, SpectralMask::phase_only());
  for (const auto& [bins, c] : state.amplitudes)
    CHECK(after.amplitude(bins.first, bins.second) == c);
}

TEST_CASE("blocking mask keeps only the listed pairs") {
  std::vector<cplx> alphas(40, 1.0);
  const auto state = make_comb_state(kLattice, alphas);
  SpectralMask keep = SpectralMask::blocking();
  for (int k : {5, 6, 7}) {
    keep.set(kLattice.signal_index(k), 1.0);
    keep.set(kLattice.idler_index(k), 1.0);
  }
  CHECK(state_norm(apply_mask(state, keep)) == doctest::Approx(3.0 / 40.0));
}

TEST_CASE("mask application commutes and composes") {
  const auto state = make_comb_state(kLattice, {1.0, 1.0, 1.0});
  SpectralMask a = SpectralMask::phase_only(), b = SpectralMask::phase_only();
  a.set_phase(2, 0.3).set_phase(-4, -0.7);
  b.set(2, cplx{0.5, 0.0}).set_phase(6, 1.1);
  const auto seq = apply_mask(apply_mask(state, a), b);
  const auto composed = apply_mask(state, a.composed_with(b));
  for (const auto& [bins, c] : seq.amplitudes)
    CHECK(std::abs(composed.amplitude(bins.first, bins.second) - c) == 0.0);
}

TEST_CASE("modulator with zero index is the identity") {
  const auto state = make_comb_state(kLattice, {1.0, 1.0});
  const auto after = apply_modulator(state, ModulatorDrive{1, 0.0, 0.0, 0});
  for (const auto& [bins, c] : state.amplitudes)
    CHECK(std::abs(after.amplitude(bins.first, bins.second) - c) < 1e-15);
}

TEST_CASE("first sideband ratio follows J1/J0") {
  const double mu = 0.2;
  const auto state = make_comb_state(kLattice, {0, 0, 1.0});
  const auto after = apply_modulator(state, ModulatorDrive{1, mu, 0.0, 0});
  // signal upshifted by one step, idler untouched
  const cplx carrier = after.amplitude(6, -6);
  const cplx upper = after.amplitude(7, -6);
  CHECK(std::abs(upper / carrier - bessel_j(1, mu) / bessel_j(0, mu)) < 1e-12);
  CHECK(std::abs(upper / carrier) == doctest::Approx(mu / 2).epsilon(0.01));
}

TEST_CASE("pi-phased pairs interfere destructively at the midpoint") {
  const auto state = make_comb_state(kLattice, {0, 0, 0, 0, 0, 1.0, 1.0});
  SpectralMask mask = SpectralMask::phase_only();
  mask.set_phase(12, std::numbers::pi / 2).set_phase(-12, std::numbers::pi / 2);
  const auto after =
      apply_modulator(apply_mask(state, mask), ModulatorDrive{1, 1.2, 0.0, 0});
  CHECK(std::abs(after.amplitude(13, -13)) < 1e-12);
  // and constructively without the phase
  const auto bright = apply_modulator(state, ModulatorDrive{1, 1.2, 0.0, 0});
  CHECK(std::abs(bright.amplitude(13, -13)) > 0.1);
}

TEST_CASE("modulator is unitary inside the lattice interior") {
  FrequencyLattice wide{193.4, 49.6, 2, 400};
  std::vector<cplx> alphas(32, cplx{0.0, 0.0});
  alphas[29] = 1.0;
  alphas[30] = cplx{0.0, 1.0};
  alphas[31] = -1.0;
  const auto state = make_comb_state(wide, alphas);
  for (double mu : {0.5, 2.0, 5.0, 10.0}) {
    const auto after = apply_modulator(state, ModulatorDrive{1, mu, 0.4, 0});
    CHECK(std::abs(state_norm(after) - 1.0) < 1e-9);
  }
}

TEST_CASE("clipping at the lattice edge shows up as a norm deficit") {
  FrequencyLattice tight{193.4, 49.6, 2, 4};
  const auto state = make_comb_state(tight, {0, 1.0});
  const auto after = apply_modulator(state, ModulatorDrive{1, 2.0, 0.0, 0});
  CHECK(state_norm(after) < 1.0 - 1e-6);
}

TEST_CASE("equalize_sidebands finds the first |Ja|=|Jb| crossing") {
  const double mu13 = equalize_sidebands({1, 3});
  CHECK(mu13 > 2.9);
  CHECK(mu13 < 3.3);
  CHECK(std::abs(std::abs(bessel_j(1, mu13)) - std::abs(bessel_j(3, mu13))) < 1e-9);

  const double mu12 = equalize_sidebands({1, 2});
  CHECK(std::abs(std::abs(bessel_j(1, mu12)) - std::abs(bessel_j(2, mu12))) < 1e-9);

  CHECK_THROWS_AS(equalize_sidebands({1, 1}), std::runtime_error);
}

TEST_CASE("dispersion mask: zero length is identity, compensation inverts") {
  DispersionSpec zero;
  zero.fiber_length_m = 0.0;
  const auto mask = dispersion_mask(kLattice, zero);
  for (int j : {-10, -3, 4, 40}) CHECK(std::abs(mask.value(j) - cplx{1.0, 0.0}) == 0.0);

  DispersionSpec fiber;
  fiber.fiber_length_m = 35.0;
  auto comp = fiber;
  comp.compensate = true;
  const auto fwd = dispersion_mask(kLattice, fiber);
  const auto bwd = dispersion_mask(kLattice, comp);
  for (int j : {-14, -2, 6, 30})
    CHECK(std::abs(fwd.value(j) * bwd.value(j) - cplx{1.0, 0.0}) < 1e-12);
}

TEST_CASE("dispersion phases are even in lattice index") {
  DispersionSpec fiber;
  fiber.fiber_length_m = 35.0;
  const auto mask = dispersion_mask(kLattice, fiber);
  for (int j = 1; j <= kLattice.max_index; ++j)
    CHECK(std::abs(mask.value(j) - mask.value(-j)) < 1e-14);
}

TEST_CASE("35 m of fiber shifts the pair-6/7 fringe by about a quarter pi") {
  DispersionSpec fiber;
  fiber.fiber_length_m = 35.0;
  const auto mask = dispersion_mask(kLattice, fiber);
  auto pair_phase = [&](int k) {
    return std::arg(mask.value(kLattice.signal_index(k)) *
                    mask.value(kLattice.idler_index(k)));
  };
  const double shift =
      std::abs(std::remainder(pair_phase(7) - pair_phase(6), 2 * std::numbers::pi));
  CHECK(shift > std::numbers::pi / 4 / 1.3);
  CHECK(shift < std::numbers::pi / 4 * 1.3);
}

TEST_CASE("overlap kernel of a lorentzian lineshape") {
  const Lineshape line = Lineshape::lorentzian(100.0);
  CHECK(overlap_kernel(line, 0.0) == cplx{1.0, 0.0});
  CHECK(std::abs(overlap_kernel(line, 100.0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(overlap_kernel(line, 1e7)) < 1e-4);
  const Lineshape delta = Lineshape::delta();
  CHECK(overlap_kernel(delta, 0.0) == cplx{1.0, 0.0});
  CHECK(overlap_kernel(delta, 0.001) == cplx{0.0, 0.0});
}

TEST_CASE("dip scan hits zero at perfect overlap with a pi phase") {
  const Lineshape line = Lineshape::lorentzian(100.0);
  const double half_fsr = kLattice.fsr_ghz / 2.0;
  const auto scan = dip_scan(kLattice, line, {half_fsr}, std::numbers::pi);
  CHECK(scan[0].second == doctest::Approx(0.0));
  const auto bright = dip_scan(kLattice, line, {half_fsr}, 0.0);
  CHECK(bright[0].second == doctest::Approx(1.0));
}

TEST_CASE("dip scan with a delta lineshape is all-or-nothing") {
  const auto scan = dip_scan(kLattice, Lineshape::delta(),
                             {kLattice.fsr_ghz / 2.0, kLattice.fsr_ghz / 2.0 + 0.01},
                             std::numbers::pi);
  CHECK(scan[0].second == doctest::Approx(0.0));
  CHECK(scan[1].second == doctest::Approx(0.25));
}
