#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fbc/lattice.hpp"

namespace fbc {

// Programmable pulse-shaper mask: per-index complex transmission.
// Unlisted indices carry t=0 (Blocking) or t=1 (PhaseOnly).
struct SpectralMask {
  enum class Mode { Blocking, PhaseOnly };
  Mode mode = Mode::PhaseOnly;
  std::map<int, cplx> transmission;

  static SpectralMask blocking() { return {Mode::Blocking, {}}; }
  static SpectralMask phase_only() { return {Mode::PhaseOnly, {}}; }

  SpectralMask& set(int index, cplx t) {
    if (std::abs(t) > 1.0 + 1e-12)
      throw std::invalid_argument("mask transmission above unity");
    transmission[index] = t;
    return *this;
  }
  SpectralMask& set_phase(int index, double phase) {
    return set(index, std::polar(1.0, phase));
  }

  cplx value(int index) const {
    auto it = transmission.find(index);
    if (it != transmission.end()) return it->second;
    return mode == Mode::Blocking ? cplx{0.0, 0.0} : cplx{1.0, 0.0};
  }

  // Elementwise product; blocking wins if either side blocks by default.
  SpectralMask composed_with(const SpectralMask& other) const {
    SpectralMask out;
    out.mode = (mode == Mode::Blocking || other.mode == Mode::Blocking)
                   ? Mode::Blocking
                   : Mode::PhaseOnly;
    for (const auto& [j, t] : transmission) out.transmission[j] = t * other.value(j);
    for (const auto& [j, t] : other.transmission)
      if (!transmission.count(j)) out.transmission[j] = t * value(j);
    return out;
  }
};

// Single-tone RF drive of the electro-optic phase modulator.
// Sideband n of a parent line carries weight J_n(mod_index) e^{i n rf_phase}.
struct ModulatorDrive {
  int rf_steps = 1;          // RF frequency in lattice steps
  double mod_index = 0.0;    // mu, radians
  double rf_phase = 0.0;     // theta, radians
  int truncation_order = 0;  // 0 = choose automatically
};

struct DispersionSpec {
  double fiber_length_m = 0.0;
  double dispersion_ps_nm_km = 17.0;
  double ref_wavelength_nm = 1550.0;
  bool compensate = false;  // negate the phase (shaper-programmed offset)
};

inline double bessel_j(int n, double x) {
  if (std::abs(n) > 60 || x < 0.0 || x > 20.0)
    throw std::domain_error("bessel_j outside supported envelope");
  double value = std::cyl_bessel_j(static_cast<double>(std::abs(n)), x);
  if (n < 0 && (n & 1)) value = -value;
  return value;
}

// Smallest n_max with 1 - sum_{|n|<=n_max} J_n(mu)^2 < 1e-9.
inline int modulator_truncation_order(double mu) {
  double captured = bessel_j(0, mu) * bessel_j(0, mu);
  for (int n = 1; n <= 60; ++n) {
    if (1.0 - captured < 1e-9) return n - 1;
    const double jn = bessel_j(n, mu);
    captured += 2.0 * jn * jn;
  }
  throw std::domain_error("modulation index too large to truncate");
}

inline BiphotonState apply_mask(const BiphotonState& state, const SpectralMask& mask) {
  BiphotonState out;
  out.lattice = state.lattice;
  for (const auto& [bins, c] : state.amplitudes) {
    const cplx t = mask.value(bins.first) * mask.value(bins.second);
    if (t != cplx{0.0, 0.0}) out.amplitudes[bins] = t * c;
  }
  return out;
}

// Each photon index j maps to sum_n J_n(mu) e^{i n theta} |j + n*p>.
// Sidebands leaving the lattice (or crossing the pump) are clipped; the
// lost weight shows up as a norm deficit.
inline BiphotonState apply_modulator(const BiphotonState& state,
                                     const ModulatorDrive& drive) {
  if (drive.mod_index < 0.0) throw std::invalid_argument("mod_index must be >= 0");
  const int n_max = drive.truncation_order > 0
                        ? drive.truncation_order
                        : modulator_truncation_order(drive.mod_index);
  std::vector<cplx> weight(2 * n_max + 1);
  for (int n = -n_max; n <= n_max; ++n)
    weight[n + n_max] =
        bessel_j(n, drive.mod_index) * std::polar(1.0, n * drive.rf_phase);

  BiphotonState out;
  out.lattice = state.lattice;
  const int p = drive.rf_steps;
  for (const auto& [bins, c] : state.amplitudes) {
    for (int a = -n_max; a <= n_max; ++a) {
      const int m = bins.first + a * p;
      if (m <= 0 || !state.lattice.contains(m)) continue;
      for (int b = -n_max; b <= n_max; ++b) {
        const int n = bins.second + b * p;
        if (n >= 0 || !state.lattice.contains(n)) continue;
        const cplx add = c * weight[a + n_max] * weight[b + n_max];
        if (add != cplx{0.0, 0.0}) out.amplitudes[{m, n}] += add;
      }
    }
  }
  return out;
}

// Smallest mu > 0 with |J_a(mu)| = |J_b(mu)|; for more than two orders,
// the mu minimizing the largest pairwise |J| mismatch.
inline double equalize_sidebands(const std::vector<int>& orders) {
  if (orders.size() < 2) throw std::invalid_argument("need at least two orders");
  for (int n : orders)
    if (n < 1) throw std::invalid_argument("orders must be >= 1");
  for (std::size_t i = 0; i < orders.size(); ++i)
    for (std::size_t j = i + 1; j < orders.size(); ++j)
      if (orders[i] == orders[j])
        throw std::runtime_error("no crossing: identical sideband orders");

  const double hi = 20.0;
  const int grid = 20000;
  auto mismatch = [&](double mu) {
    double lo_w = 1.0, hi_w = -1.0;
    for (int n : orders) {
      const double w = std::abs(bessel_j(n, mu));
      lo_w = std::min(lo_w, w);
      hi_w = std::max(hi_w, w);
    }
    return hi_w - lo_w;
  };

  if (orders.size() == 2) {
    auto f = [&](double mu) {
      return std::abs(bessel_j(orders[0], mu)) - std::abs(bessel_j(orders[1], mu));
    };
    double prev_mu = hi / grid, prev = f(prev_mu);
    for (int i = 2; i <= grid; ++i) {
      const double mu = hi * i / grid;
      const double cur = f(mu);
      if (prev == 0.0) return prev_mu;
      if (prev * cur < 0.0) {
        double a = prev_mu, b = mu;
        while (b - a > 1e-12) {
          const double mid = 0.5 * (a + b);
          (f(a) * f(mid) <= 0.0 ? b : a) = mid;
        }
        return 0.5 * (a + b);
      }
      prev_mu = mu;
      prev = cur;
    }
    throw std::runtime_error("no |J_a|=|J_b| crossing in the supported envelope");
  }

  // >2 orders: coarse scan plus golden-section refinement of the mismatch.
  double best_mu = 0.0, best = 1e9;
  for (int i = 1; i <= grid; ++i) {
    const double mu = hi * i / grid;
    const double m = mismatch(mu);
    if (m < best) {
      best = m;
      best_mu = mu;
    }
  }
  double a = std::max(1e-6, best_mu - hi / grid), b = std::min(hi, best_mu + hi / grid);
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) * 0.381966, m2 = b - (b - a) * 0.381966;
    (mismatch(m1) < mismatch(m2) ? b : a) = (mismatch(m1) < mismatch(m2) ? m2 : m1);
  }
  return 0.5 * (a + b);
}

// Quadratic spectral phase of a fiber span, as a phase-only mask:
// t(j) = exp(i (beta2 L / 2) (2 pi f_j)^2), optionally negated to compensate.
inline SpectralMask dispersion_mask(const FrequencyLattice& lattice,
                                    const DispersionSpec& spec) {
  if (spec.fiber_length_m < 0.0)
    throw std::invalid_argument("fiber length must be >= 0");
  constexpr double c_m_per_s = 299792458.0;
  const double lambda_m = spec.ref_wavelength_nm * 1e-9;
  const double d_s_per_m2 = spec.dispersion_ps_nm_km * 1e-6;
  const double beta2 = -d_s_per_m2 * lambda_m * lambda_m /
                       (2.0 * std::numbers::pi * c_m_per_s);
  SpectralMask mask = SpectralMask::phase_only();
  for (int j = -lattice.max_index; j <= lattice.max_index; ++j) {
    if (j == 0) continue;
    const double omega = 2.0 * std::numbers::pi * lattice.offset_ghz(j) * 1e9;
    double phase = 0.5 * beta2 * spec.fiber_length_m * omega * omega;
    if (spec.compensate) phase = -phase;
    mask.set_phase(j, phase);
  }
  return mask;
}

// Normalized amplitude overlap of a lineshape with its detuned copy.
// Lorentzian: 1 / (1 - i eps/gamma).
inline cplx overlap_kernel(const Lineshape& lineshape, double detune_mhz) {
  if (lineshape.kind == Lineshape::Kind::Delta)
    return detune_mhz == 0.0 ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
  return 1.0 / cplx{1.0, -detune_mhz / lineshape.fwhm_mhz};
}

// Coincidence probability of the two-sideband overlap vs RF offset:
// P(f) = |1 + e^{i phi} K(eps)^2|^2 / 4 with eps = FSR - 2f (one overlap
// factor per photon). Offsets and FSR in GHz.
inline std::vector<std::pair<double, double>> dip_scan(
    const FrequencyLattice& lattice, const Lineshape& lineshape,
    const std::vector<double>& offsets_ghz, double relative_phase) {
  std::vector<std::pair<double, double>> out;
  out.reserve(offsets_ghz.size());
  for (double f : offsets_ghz) {
    const double eps_mhz = (lattice.fsr_ghz - 2.0 * f) * 1e3;
    const cplx k = overlap_kernel(lineshape, eps_mhz);
    const cplx amp = 1.0 + std::polar(1.0, relative_phase) * k * k;
    out.emplace_back(f, std::norm(amp) / 4.0);
  }
  return out;
}

}  // namespace fbc
