// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "fbc/cglmp.hpp"
#include "fbc/detection.hpp"
#include "fbc/fixtures.hpp"
#include "fbc/lattice.hpp"
#include "fbc/optics.hpp"
#include "fbc/tomography.hpp"

using namespace fbc;

#ifndef FBC_DATA_DIR
#define FBC_DATA_DIR "."
#endif

namespace {

int failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  (%s)\n", criterion, name,
              pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

DensityMatrix reference_rho() {
  DensityMatrix rho(4, 4);
  const cplx i = cplx_i();
  rho << cplx(0.4388), cplx(-0.0115) - 0.0699 * i, cplx(-0.0721) - 0.0193 * i,
      cplx(0.3745) + 0.0166 * i,  //
      cplx(-0.0115) + 0.0699 * i, cplx(0.0574), cplx(0.0279) - 0.0244 * i,
      cplx(0.0084) - 0.0227 * i,  //
      cplx(-0.0721) + 0.0193 * i, cplx(0.0279) + 0.0244 * i, cplx(0.0281),
      cplx(-0.0280) - 0.0211 * i,  //
      cplx(0.3745) - 0.0166 * i, cplx(0.0084) + 0.0227 * i,
      cplx(-0.0280) + 0.0211 * i, cplx(0.4757);
  return rho;
}

DensityMatrix bell_state() {
  Eigen::Vector4cd psi;
  psi << 1.0, 0.0, 0.0, 1.0;
  psi /= std::sqrt(2.0);
  return psi * psi.adjoint();
}

TomographyData fixture_data() {
  return tally_projection_counts(
      parse_table1_fixture(std::string(FBC_DATA_DIR) + "/table1.csv"));
}

// ---- criteria ---------------------------------------------------------------

void criterion_1_tomography() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto set = build_projection_set();
  const DensityMatrix rho = mle_estimate(fixture_data(), set);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const DensityMatrix ref = reference_rho();
  double maxdiff = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      maxdiff = std::max(maxdiff, std::abs(rho(r, c) - ref(r, c)));
  const double fid = fidelity(rho, ref);
  report(1, "tomography reproduction",
         maxdiff <= 0.05 && fid >= 0.98 && seconds < 60.0,
         fmt("maxdiff=%.4f fidelity=%.4f runtime=%.1fs", maxdiff, fid, seconds));
}

void criterion_2_negativity() {
  const double n_ref = negativity(reference_rho(), 2, 2);
  const double n_bell = negativity(bell_state(), 2, 2);
  double worst_product = 0.0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector2cd a, b;
    for (int k = 0; k < 2; ++k) {
      a[k] = cplx{gauss(rng), gauss(rng)};
      b[k] = cplx{gauss(rng), gauss(rng)};
    }
    a.normalize();
    b.normalize();
    Eigen::Vector4cd psi;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) psi[2 * j + k] = a[j] * b[k];
    worst_product =
        std::max(worst_product, negativity(DensityMatrix(psi * psi.adjoint()), 2, 2));
  }
  report(2, "negativity",
         std::abs(n_ref - 0.34) <= 0.01 && std::abs(n_bell - 0.5) <= 1e-9 &&
             worst_product <= 1e-9,
         fmt("N(ref)=%.4f N(bell)=%.9f N(product)max=%.2e", n_ref, n_bell,
             worst_product));
}

void criterion_3_i3_from_counts() {
  const auto counts =
      parse_table2_fixture(std::string(FBC_DATA_DIR) + "/table2.csv");
  const auto est = i3_from_counts(counts);
  report(3, "bell score from counts",
         std::abs(est.i3 - 2.631) <= 0.005 && est.sigma >= 0.1 && est.sigma <= 0.3,
         fmt("i3=%.5f sigma=%.3f", est.i3, est.sigma));
}

void criterion_4_model_maximum() {
  const CGLMPBasis basis;
  auto score = [&](double lambda) {
    const NoiseMixture noise(lambda);
    std::array<double, 8> p{};
    for (std::size_t i = 0; i < cglmp_terms().size(); ++i) {
      const auto& t = cglmp_terms()[i];
      const auto ph = basis_phases(basis, t.x, t.y, t.a, t.b);
      p[i] = model_probability(noise, ph.phi_signal, ph.phi_idler);
    }
    return i3_from_probabilities(p);
  };
  const double full = score(1.0);
  const double zero = score(0.0);
  double linearity = 0.0;
  for (double lambda : {0.25, 0.5, 0.7})
    linearity = std::max(linearity, std::abs(score(lambda) - lambda * full));
  report(4, "bell model maximum",
         std::abs(full - 2.872) <= 0.001 && std::abs(zero) <= 1e-12 &&
             linearity <= 1e-9,
         fmt("i3(1)=%.5f i3(0)=%.1e linearity=%.1e", full, zero, linearity));
}

void criterion_5_classical_bound() {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const CGLMPBasis basis;
  double worst = -10.0;
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::Vector3cd a, b;
    for (int k = 0; k < 3; ++k) {
      a[k] = cplx{gauss(rng), gauss(rng)};
      b[k] = cplx{gauss(rng), gauss(rng)};
    }
    a.normalize();
    b.normalize();
    Eigen::VectorXcd psi(9);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) psi[3 * j + k] = a[j] * b[k];
    worst = std::max(worst, i3_for_state(psi, basis));
  }
  report(5, "classical bound", worst <= 2.0 + 1e-9,
         fmt("max i3 over 10^4 product states = %.4f", worst));
}

void criterion_6_chain_equivalence() {
  CGLMPChain chain;
  const NoiseMixture noise(1.0);
  std::vector<double> chain_p, model_p;
  for (const auto& t : cglmp_terms()) {
    const auto ph = basis_phases(chain.basis, t.x, t.y, t.a, t.b);
    chain_p.push_back(chain.probability(noise, ph));
    model_p.push_back(model_probability(noise, ph.phi_signal, ph.phi_idler));
  }
  // one global constant fitted by least squares over the 8 terms
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < chain_p.size(); ++i) {
    num += chain_p[i] * model_p[i];
    den += model_p[i] * model_p[i];
  }
  const double scale = num / den;
  double worst = 0.0;
  for (std::size_t i = 0; i < chain_p.size(); ++i) {
    const double ref = scale * model_p[i];
    const double rel = std::abs(chain_p[i] - ref) / std::max(std::abs(ref), 1e-12);
    worst = std::max(worst, rel);
  }
  report(6, "chain equivalence", worst <= 1e-6,
         fmt("scale=%.6f max rel err=%.2e", scale, worst));
}

void criterion_7_dip_physics() {
  const FrequencyLattice lattice;
  const double gamma = lattice.pump_freq_thz * 1e6 / 2e6;  // MHz
  const Lineshape shape = Lineshape::lorentzian(gamma);

  // scan the sideband offset around FSR/2 and locate the minimum
  std::vector<double> offsets;
  const double half = lattice.fsr_ghz / 2.0;
  for (int i = 0; i <= 4000; ++i) offsets.push_back(half - 0.4 + 0.8 * i / 4000.0);
  const auto scan = dip_scan(lattice, shape, offsets, std::numbers::pi);
  double min_val = 1e300, min_off = 0.0, max_val = -1e300;
  for (const auto& [f, p] : scan) {
    if (p < min_val) {
      min_val = p;
      min_off = f;
    }
    max_val = std::max(max_val, p);
  }

  // full width at half depth, measured in the detuning eps = FSR - 2f that
  // the overlap kernel actually sees (eps moves twice as fast as f)
  const double half_depth = min_val + 0.5 * (max_val - min_val);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const bool below_now = scan[i].second <= half_depth;
    const bool below_prev = scan[i - 1].second <= half_depth;
    if (below_now && !below_prev) lo = scan[i].first;
    if (!below_now && below_prev) hi = scan[i - 1].first;
  }
  const double width_eps_mhz = 2.0 * (hi - lo) * 1e3;
  const bool width_ok =
      width_eps_mhz >= 75.0 && width_eps_mhz <= 125.0;  // within 25% of 100 MHz
  const bool min_ok = std::abs(min_off - half) <= 1e-3 && min_val <= 1e-12;
  report(7, "dip physics", width_ok && min_ok,
         fmt("min at %.4f GHz depth=%.1e width=%.1f MHz", min_off, min_val,
             width_eps_mhz));
}

void criterion_8_fringe_behavior() {
  const FrequencyLattice lattice;
  DetectionConfig det;
  det.eta_signal = det.eta_idler = 1.0;
  det.pair_flux = 1000.0;
  det.integration_time = 1.0;
  det.accidental_rate = 0.0;

  auto builder = [&](const SpectralMask& static_mask) {
    return [&lattice, static_mask](double phi) {
      BiphotonState state = make_comb_state(lattice, {0, 0, 0, 0, 0, 1.0, 1.0});
      SpectralMask sweep_mask = SpectralMask::phase_only();
      sweep_mask.set_phase(14, phi / 2.0).set_phase(-14, phi / 2.0);
      state = apply_mask(state, sweep_mask.composed_with(static_mask));
      return apply_modulator(state, ModulatorDrive{1, 1.0, 0.0, 0});
    };
  };
  std::vector<double> phases;
  for (int i = 0; i < 36; ++i) phases.push_back(2 * std::numbers::pi * i / 36);

  // noiseless fringe
  const auto clean =
      fringe_scan(builder(SpectralMask::phase_only()), phases, 13, -13, det);
  const double v_clean = fit_fringe(clean, 0.0).visibility;

  // 2:1 coincidence-to-accidental floor, then background subtraction
  double peak = 0.0;
  for (const auto& pt : clean) peak = std::max(peak, pt.second);
  const double floor = peak / 2.0;
  auto noisy = clean;
  for (auto& pt : noisy) pt.second += floor;
  const double v_raw = fit_fringe(noisy, 0.0).visibility;
  for (auto& pt : noisy) pt.second -= floor;
  const double v_sub = fit_fringe(noisy, 0.0).visibility;

  // 35 m of uncompensated fiber shifts the fringe
  DispersionSpec fiber;
  fiber.fiber_length_m = 35.0;
  const auto shifted =
      fringe_scan(builder(dispersion_mask(lattice, fiber)), phases, 13, -13, det);
  const double shift = std::abs(fit_fringe(shifted, 0.0).phase_offset);

  report(8, "fringe behavior",
         std::abs(v_clean - 1.0) <= 1e-3 && v_sub >= 0.99 && v_raw < 0.9 &&
             shift >= 0.7 && shift <= 1.1,
         fmt("V=%.4f V(subtracted)=%.4f shift=%.3f rad", v_clean, v_sub, shift));
}

void criterion_9_schmidt_bound() {
  const double k_equal = schmidt_bound(Eigen::MatrixXd::Identity(38, 38));
  Eigen::VectorXd u(6), v(6);
  u << 1, 2, 3, 4, 5, 6;
  v << 2, 3, 5, 7, 11, 13;
  const double k_rank1 = schmidt_bound(Eigen::MatrixXd(u * v.transpose()));
  Eigen::VectorXd p(7);
  p << 0.4, 1.9, 0.02, 3.3, 0.7, 0.11, 2.2;
  const double k_diag = schmidt_bound(Eigen::MatrixXd(p.asDiagonal()));
  const double k_closed = p.sum() * p.sum() / p.squaredNorm();
  report(9, "schmidt bound",
         std::abs(k_equal - 38.0) <= 1e-9 && std::abs(k_rank1 - 1.0) <= 1e-9 &&
             std::abs(k_diag - k_closed) <= 1e-9,
         fmt("K(equal)=%.9f K(rank1)=%.9f |K-closed|=%.1e", k_equal, k_rank1,
             std::abs(k_diag - k_closed)));
}

void criterion_10_numerics() {
  // series oracle for J_n(x)
  auto series = [](int n, double x) {
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= x / (2.0 * k);
    double sum = term;
    for (int m = 1; m <= 60; ++m) {
      term *= -(x * x / 4.0) / (m * (m + n));
      sum += term;
    }
    return sum;
  };
  double bessel_err = 0.0;
  for (int n = 0; n <= 20; ++n)
    for (double x = 0.0; x <= 10.0; x += 0.25)
      bessel_err = std::max(bessel_err, std::abs(bessel_j(n, x) - series(n, x)));

  // modulator unitarity on a lattice wide enough that nothing clips
  const FrequencyLattice wide{193.4, 49.6, 2, 400};
  std::vector<cplx> alphas(32, cplx{0.0, 0.0});
  alphas[29] = alphas[30] = alphas[31] = 1.0;
  double norm_err = 0.0;
  for (double mu : {0.5, 1.5, 3.0, 6.0}) {
    const auto out =
        apply_modulator(make_comb_state(wide, alphas), ModulatorDrive{1, mu, 0.3, 0});
    norm_err = std::max(norm_err, std::abs(state_norm(out) - 1.0));
  }

  // forward-inverse tomography consistency on synthetic counts
  const auto set = build_projection_set();
  double worst_fid = 1.0;
  for (const DensityMatrix& ref :
       {bell_state(), DensityMatrix(DensityMatrix::Identity(4, 4) / 4.0)}) {
    TomographyData data;
    for (const auto& spec : set)
      data.counts[spec.label - 1] = 1e6 * projection_probability(spec, ref);
    data.normalization =
        data.counts[0] + data.counts[1] + data.counts[2] + data.counts[3];
    worst_fid = std::min(worst_fid, fidelity(mle_estimate(data, set), ref));
  }

  report(10, "numerics",
         bessel_err <= 1e-10 && norm_err <= 1e-9 && worst_fid >= 0.999,
         fmt("bessel err=%.1e norm err=%.1e round-trip fidelity=%.5f", bessel_err,
             norm_err, worst_fid));
}

}  // namespace

int main() {
  criterion_1_tomography();
  criterion_2_negativity();
  criterion_3_i3_from_counts();
  criterion_4_model_maximum();
  criterion_5_classical_bound();
  criterion_6_chain_equivalence();
  criterion_7_dip_physics();
  criterion_8_fringe_behavior();
  criterion_9_schmidt_bound();
  criterion_10_numerics();
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
