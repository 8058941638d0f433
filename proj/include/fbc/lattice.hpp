#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fbc {

using cplx = std::complex<double>;

// Discrete grid of frequency bins, symmetric about the pump (index 0).
// Comb line pair k lives at lattice indices (+k*subdivision, -k*subdivision).
struct FrequencyLattice {
  double pump_freq_thz = 193.4;
  double fsr_ghz = 49.6;
  int subdivision = 2;  // lattice spacing = fsr / subdivision
  int max_index = 100;  // indices run over [-max_index, max_index]

  FrequencyLattice() = default;
  FrequencyLattice(double pump_thz, double fsr, int s, int m)
      : pump_freq_thz(pump_thz), fsr_ghz(fsr), subdivision(s), max_index(m) {
    if (fsr_ghz <= 0.0) throw std::invalid_argument("fsr must be positive");
    if (subdivision < 1) throw std::invalid_argument("subdivision must be >= 1");
    if (max_index < subdivision)
      throw std::invalid_argument("lattice must hold at least one comb pair");
  }

  bool contains(int j) const { return j >= -max_index && j <= max_index; }

  // frequency offset of lattice index j from the pump, in GHz
  double offset_ghz(int j) const {
    return static_cast<double>(j) * fsr_ghz / subdivision;
  }

  int signal_index(int comb_pair) const {
    int j = comb_pair * subdivision;
    if (comb_pair < 1 || j > max_index)
      throw std::out_of_range("comb pair outside lattice range");
    return j;
  }
  int idler_index(int comb_pair) const { return -signal_index(comb_pair); }

  int representable_pairs() const { return max_index / subdivision; }
};

// Resonance lineshape; only the RF-dip calculation looks inside a bin.
struct Lineshape {
  enum class Kind { Delta, Lorentzian };
  Kind kind = Kind::Delta;
  double fwhm_mhz = 0.0;

  static Lineshape delta() { return {Kind::Delta, 0.0}; }
  static Lineshape lorentzian(double fwhm) {
    if (fwhm <= 0.0) throw std::invalid_argument("lorentzian fwhm must be > 0");
    return {Kind::Lorentzian, fwhm};
  }
};

// Joint two-photon amplitude over (signal index m > 0, idler index n < 0).
// Sparse: only occupied bins are stored.
struct BiphotonState {
  FrequencyLattice lattice;
  std::map<std::pair<int, int>, cplx> amplitudes;

  cplx amplitude(int signal, int idler) const {
    auto it = amplitudes.find({signal, idler});
    return it == amplitudes.end() ? cplx{0.0, 0.0} : it->second;
  }
};

inline double state_norm(const BiphotonState& state) {
  double sum = 0.0;
  for (const auto& [bins, c] : state.amplitudes) sum += std::norm(c);
  return sum;
}

// Places alphas on the energy-matched diagonal (k*s, -k*s), renormalized.
inline BiphotonState make_comb_state(const FrequencyLattice& lattice,
                                     const std::vector<cplx>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("comb state needs amplitudes");
  if (static_cast<int>(alphas.size()) > lattice.representable_pairs())
    throw std::out_of_range("more comb pairs than the lattice can hold");
  double norm2 = 0.0;
  for (const auto& a : alphas) norm2 += std::norm(a);
  if (norm2 <= 0.0) throw std::invalid_argument("all comb amplitudes are zero");

  BiphotonState state;
  state.lattice = lattice;
  const double scale = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (alphas[i] == cplx{0.0, 0.0}) continue;
    const int k = static_cast<int>(i) + 1;
    state.amplitudes[{lattice.signal_index(k), lattice.idler_index(k)}] =
        alphas[i] * scale;
  }
  return state;
}

// Amplitude block over the requested bins; no renormalization.
inline Eigen::MatrixXcd reduce_to_subspace(const BiphotonState& state,
                                           const std::vector<int>& signal_bins,
                                           const std::vector<int>& idler_bins) {
  for (int b : signal_bins)
    if (!state.lattice.contains(b)) throw std::out_of_range("signal bin outside lattice");
  for (int b : idler_bins)
    if (!state.lattice.contains(b)) throw std::out_of_range("idler bin outside lattice");

  Eigen::MatrixXcd block(signal_bins.size(), idler_bins.size());
  for (std::size_t r = 0; r < signal_bins.size(); ++r)
    for (std::size_t c = 0; c < idler_bins.size(); ++c)
      block(r, c) = state.amplitude(signal_bins[r], idler_bins[c]);
  return block;
}

}  // namespace fbc
