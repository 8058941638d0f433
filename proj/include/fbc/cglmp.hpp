#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbc/detection.hpp"
#include "fbc/lattice.hpp"
#include "fbc/optics.hpp"

namespace fbc {

// Measurement-basis parameters of the qutrit Bell test; the defaults are
// the settings giving the maximal violation for a maximally entangled state.
struct CGLMPBasis {
  std::array<double, 2> alpha = {0.0, 0.5};    // signal bases x = 1, 2
  std::array<double, 2> beta = {0.25, -0.25};  // idler bases y = 1, 2
  std::array<int, 3> comb_triplet = {5, 6, 7};
};

struct NoiseMixture {
  double lambda = 1.0;  // weight of the entangled state vs white noise
  explicit NoiseMixture(double l = 1.0) : lambda(l) {
    if (lambda < 0.0 || lambda > 1.0)
      throw std::invalid_argument("mixture weight must lie in [0, 1]");
  }
};

// The eight Eq.-8 terms in evaluation order: four positive, four negative.
struct CGLMPTerm {
  std::string label;
  int x, y, a, b;
  bool positive;
};

inline const std::array<CGLMPTerm, 8>& cglmp_terms() {
  static const std::array<CGLMPTerm, 8> terms = {{
      {"P11(0,0)", 1, 1, 0, 0, true},
      {"P21(0,1)", 2, 1, 0, 1, true},
      {"P22(0,0)", 2, 2, 0, 0, true},
      {"P12(0,0)", 1, 2, 0, 0, true},
      {"P11(0,1)", 1, 1, 0, 1, false},
      {"P21(0,0)", 2, 1, 0, 0, false},
      {"P22(0,1)", 2, 2, 0, 1, false},
      {"P12(1,0)", 1, 2, 1, 0, false},
  }};
  return terms;
}

struct CGLMPCounts {
  std::array<double, 8> counts{};  // ordered as cglmp_terms()
  double n_max = 0.0;
  double n_min = 0.0;
  std::optional<std::array<double, 8>> stds;
  std::optional<double> std_max;
  std::optional<double> std_min;
  int repeats = 1;  // measurements averaged into each count
};

struct BasisPhases {
  double phi_signal = 0.0;
  double phi_idler = 0.0;
  std::array<double, 3> signal_line_phases{};  // per comb line of the triplet
  std::array<double, 3> idler_line_phases{};
};

inline double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  phi = std::fmod(phi, two_pi);
  if (phi <= -std::numbers::pi) phi += two_pi;
  if (phi > std::numbers::pi) phi -= two_pi;
  return phi;
}

// phi_S = (2pi/3)(a + alpha_x), phi_I = (2pi/3)(-b + beta_y); comb line k
// of the triplet carries (k - k0) times the fundamental phase.
inline BasisPhases basis_phases(const CGLMPBasis& basis, int x, int y, int a, int b) {
  if (x < 1 || x > 2 || y < 1 || y > 2 || a < 0 || a > 2 || b < 0 || b > 2)
    throw std::invalid_argument("basis indices out of range");
  const double third = 2.0 * std::numbers::pi / 3.0;
  BasisPhases out;
  out.phi_signal = wrap_phase(third * (a + basis.alpha[x - 1]));
  out.phi_idler = wrap_phase(third * (-b + basis.beta[y - 1]));
  for (int i = 0; i < 3; ++i) {
    const int k = basis.comb_triplet[i] - basis.comb_triplet[0];
    out.signal_line_phases[i] = wrap_phase(k * out.phi_signal);
    out.idler_line_phases[i] = wrap_phase(k * out.phi_idler);
  }
  return out;
}

// P = lambda (1/27)|1 + e^{iD} + e^{i2D}|^2 + (1 - lambda)/9, D = phi_S + phi_I.
inline double model_probability(const NoiseMixture& noise, double phi_signal,
                                double phi_idler) {
  const double delta = phi_signal + phi_idler;
  const cplx sum = 1.0 + std::polar(1.0, delta) + std::polar(1.0, 2.0 * delta);
  return noise.lambda * std::norm(sum) / 27.0 + (1.0 - noise.lambda) / 9.0;
}

// Rank-1 projector v v^dag with v = (1, e^{i phi}, e^{i 2 phi}) / sqrt(3).
inline Eigen::Matrix3cd projector(double phi) {
  Eigen::Vector3cd v;
  for (int k = 0; k < 3; ++k) v[k] = std::polar(1.0 / std::sqrt(3.0), k * phi);
  return v * v.adjoint();
}

inline double i3_from_probabilities(const std::array<double, 8>& p) {
  for (double v : p)
    if (v < -1e-12 || v > 1.0 + 1e-12)
      throw std::invalid_argument("probabilities must lie in [0, 1]");
  const double plus = p[0] + p[1] + p[2] + p[3];
  const double minus = p[4] + p[5] + p[6] + p[7];
  return 3.0 * (plus - minus);
}

// Full Bell combination for an arbitrary pure two-qutrit state (signal-major
// 9-vector). Each of the eight terms is summed over all outcome pairs with
// the same (a - b) mod 3, which is required for states without the diagonal
// symmetry that lets the single-outcome form stand in for the whole relation.
inline double i3_for_state(const Eigen::VectorXcd& psi, const CGLMPBasis& basis) {
  if (psi.size() != 9) throw std::invalid_argument("state must be a 9-vector");
  const double third = 2.0 * std::numbers::pi / 3.0;
  auto line = [](double phi) {
    Eigen::Vector3cd v;
    for (int k = 0; k < 3; ++k) v[k] = std::polar(1.0 / std::sqrt(3.0), k * phi);
    return v;
  };
  double i3 = 0.0;
  for (const auto& t : cglmp_terms()) {
    const int c = ((t.a - t.b) % 3 + 3) % 3;
    double relation = 0.0;
    for (int b = 0; b < 3; ++b) {
      const int a = (b + c) % 3;
      const Eigen::Vector3cd vs = line(third * (a + basis.alpha[t.x - 1]));
      const Eigen::Vector3cd vi = line(third * (-b + basis.beta[t.y - 1]));
      cplx amp = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          amp += std::conj(vs[j] * vi[k]) * psi[3 * j + k];
      relation += std::norm(amp);
    }
    i3 += (t.positive ? 1.0 : -1.0) * relation;
  }
  return i3;
}

struct I3Estimate {
  double i3 = 0.0;
  double sigma = 0.0;
};

// P_hat = n / (3 n_max), so I3 = (sum n_+ - sum n_-) / n_max. Sigma by
// first-order propagation over the independent count values, including the
// n_max term; per-count sigmas are standard errors of the mean when the
// counts are repeat averages (std / sqrt(repeats)), Poisson sqrt(n) otherwise.
inline I3Estimate i3_from_counts(const CGLMPCounts& counts) {
  if (counts.n_max <= 0.0) throw std::invalid_argument("n_max must be positive");
  std::array<double, 8> p{};
  for (int i = 0; i < 8; ++i) {
    if (counts.counts[i] < 0.0) throw std::invalid_argument("negative count");
    p[i] = counts.counts[i] / (3.0 * counts.n_max);
  }
  I3Estimate est;
  est.i3 = i3_from_probabilities(p);

  const double rep = std::sqrt(static_cast<double>(std::max(1, counts.repeats)));
  auto term_sigma = [&](int i) {
    return counts.stds ? (*counts.stds)[i] / rep : std::sqrt(counts.counts[i]);
  };
  const double max_sigma =
      counts.std_max ? *counts.std_max / rep : std::sqrt(counts.n_max);
  double var = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double s = term_sigma(i) / counts.n_max;
    var += s * s;
  }
  const double dmax = est.i3 / counts.n_max * max_sigma;
  var += dmax * dmax;
  est.sigma = std::sqrt(var);
  return est;
}

// Full optics-chain evaluation of one Bell term: qutrit comb state, per-line
// phase mask, modulator with |J1| = |J3| equalized, midpoint channels.
struct CGLMPChain {
  FrequencyLattice lattice{193.4, 49.6, 2, 40};
  CGLMPBasis basis;
  double mu = 0.0;  // 0 = solve |J1| = |J3| on demand

  double equalized_mu() const {
    return mu > 0.0 ? mu : equalize_sidebands({1, 3});
  }

  int signal_midpoint() const {
    // first sidebands of lines k0, k0+1 and third sideband of k0+2 meet here
    return basis.comb_triplet[0] * lattice.subdivision + 1;
  }
  int idler_midpoint() const { return -signal_midpoint(); }

  // Coincidence probability at the midpoint channels for the lambda-mixture
  // state under the (x, y, a, b) projection phases.
  double probability(const NoiseMixture& noise, const BasisPhases& phases) const {
    const double mu_star = equalized_mu();
    BiphotonState state = make_comb_state(
        lattice, triplet_alphas());
    SpectralMask mask = SpectralMask::phase_only();
    for (int i = 0; i < 3; ++i) {
      const int k = basis.comb_triplet[i];
      mask.set_phase(lattice.signal_index(k), phases.signal_line_phases[i]);
      mask.set_phase(lattice.idler_index(k), phases.idler_line_phases[i]);
    }
    ModulatorDrive drive{1, mu_star, 0.0, 0};
    const BiphotonState mixed = apply_modulator(apply_mask(state, mask), drive);
    const double pure =
        coincidence_probability(mixed, signal_midpoint(), idler_midpoint());
    // white-noise part: each |mn> contributes |J1|^4 at the midpoints
    const double j1 = bessel_j(1, mu_star);
    const double noise_prob = j1 * j1 * j1 * j1;
    return noise.lambda * pure + (1.0 - noise.lambda) * noise_prob;
  }

 private:
  std::vector<cplx> triplet_alphas() const {
    const int pairs = basis.comb_triplet[2];
    std::vector<cplx> alphas(pairs, cplx{0.0, 0.0});
    for (int k : basis.comb_triplet) alphas[k - 1] = 1.0;
    return alphas;
  }
};

// Simulated Table-2 run: eight Bell terms plus the max/min reference rows,
// Poisson-sampled through the detection model.
inline CGLMPCounts simulate_cglmp_run(const NoiseMixture& noise,
                                      const CGLMPBasis& basis,
                                      const DetectionConfig& cfg,
                                      const FrequencyLattice& lattice =
                                          FrequencyLattice{193.4, 49.6, 2, 40}) {
  cfg.validate();
  CGLMPChain chain{lattice, basis, equalize_sidebands({1, 3})};
  std::mt19937_64 rng(cfg.rng_seed);
  CGLMPCounts out;
  for (std::size_t i = 0; i < cglmp_terms().size(); ++i) {
    const auto& t = cglmp_terms()[i];
    const BasisPhases phases = basis_phases(basis, t.x, t.y, t.a, t.b);
    const double expected = expected_counts(chain.probability(noise, phases), cfg);
    out.counts[i] = static_cast<double>(sample_counts(expected, rng));
  }
  // reference rows: all-zero phases (max) and phi_S = phi_I = pi/3 (min)
  BasisPhases max_phases{};
  const double third = std::numbers::pi / 3.0;
  BasisPhases min_phases;
  min_phases.phi_signal = third;
  min_phases.phi_idler = third;
  for (int i = 0; i < 3; ++i) {
    min_phases.signal_line_phases[i] = wrap_phase(i * third);
    min_phases.idler_line_phases[i] = wrap_phase(i * third);
  }
  out.n_max = static_cast<double>(
      sample_counts(expected_counts(chain.probability(noise, max_phases), cfg), rng));
  out.n_min = static_cast<double>(
      sample_counts(expected_counts(chain.probability(noise, min_phases), cfg), rng));
  return out;
}

}  // namespace fbc
