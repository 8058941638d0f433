#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fbc/lattice.hpp"

namespace fbc {

struct DetectionConfig {
  double eta_signal = 0.25;
  double eta_idler = 0.25;
  double pair_flux = 1000.0;        // generated pairs / s
  double integration_time = 600.0;  // s
  double accidental_rate = 0.0;     // accidentals / s per channel pair
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (eta_signal <= 0.0 || eta_signal > 1.0 || eta_idler <= 0.0 || eta_idler > 1.0)
      throw std::invalid_argument("detection efficiencies must lie in (0, 1]");
    if (pair_flux < 0.0 || integration_time < 0.0 || accidental_rate < 0.0)
      throw std::invalid_argument("rates and times must be >= 0");
  }
};

struct CoincidenceRecord {
  std::string signal_channel;
  std::string idler_channel;
  double counts = 0.0;
  double accidentals = 0.0;
  bool clipped = false;
};

struct CoincidenceTable {
  std::vector<CoincidenceRecord> records;
  double integration_time = 0.0;
};

inline double coincidence_probability(const BiphotonState& state, int signal_bin,
                                      int idler_bin) {
  if (!state.lattice.contains(signal_bin) || !state.lattice.contains(idler_bin))
    throw std::out_of_range("coincidence bin outside lattice");
  return std::norm(state.amplitude(signal_bin, idler_bin));
}

inline double expected_counts(double probability, const DetectionConfig& cfg) {
  return cfg.pair_flux * cfg.integration_time * cfg.eta_signal * cfg.eta_idler *
             probability +
         cfg.accidental_rate * cfg.integration_time;
}

inline double expected_counts(const BiphotonState& state, int signal_bin,
                              int idler_bin, const DetectionConfig& cfg) {
  return expected_counts(coincidence_probability(state, signal_bin, idler_bin), cfg);
}

// Poisson shot noise; generator owned by the caller so that a table build
// consumes one seeded stream in record order.
inline std::uint64_t sample_counts(double expected, std::mt19937_64& rng) {
  if (expected < 0.0) throw std::invalid_argument("expected counts must be >= 0");
  if (expected == 0.0) return 0;
  std::poisson_distribution<std::uint64_t> poisson(expected);
  return poisson(rng);
}

inline std::uint64_t sample_counts(double expected, const DetectionConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  return sample_counts(expected, rng);
}

inline CoincidenceTable subtract_background(const CoincidenceTable& table) {
  CoincidenceTable out;
  out.integration_time = table.integration_time;
  out.records.reserve(table.records.size());
  for (const auto& rec : table.records) {
    CoincidenceRecord r = rec;
    const double net = rec.counts - rec.accidentals;
    r.counts = std::max(0.0, net);
    r.accidentals = 0.0;
    r.clipped = net < 0.0;
    out.records.push_back(r);
  }
  return out;
}

inline Eigen::MatrixXd compute_jsi(const BiphotonState& state,
                                   const std::vector<int>& signal_bins,
                                   const std::vector<int>& idler_bins,
                                   const DetectionConfig& cfg) {
  if (signal_bins.empty() || idler_bins.empty())
    throw std::invalid_argument("jsi needs non-empty bin lists");
  Eigen::MatrixXd jsi(signal_bins.size(), idler_bins.size());
  for (std::size_t r = 0; r < signal_bins.size(); ++r)
    for (std::size_t c = 0; c < idler_bins.size(); ++c)
      jsi(r, c) = expected_counts(state, signal_bins[r], idler_bins[c], cfg);
  return jsi;
}

// Schmidt-number lower bound K = 1/sum sigma^4 from the singular values of
// the entrywise square root of the JSI, normalized to sum sigma^2 = 1.
inline double schmidt_bound(const Eigen::MatrixXd& jsi) {
  if (jsi.size() == 0 || jsi.minCoeff() < 0.0)
    throw std::invalid_argument("jsi must be entrywise non-negative");
  const Eigen::MatrixXd amp = jsi.array().sqrt();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(amp);
  const Eigen::VectorXd s = svd.singularValues();
  const double total = s.squaredNorm();
  if (total <= 0.0) throw std::invalid_argument("jsi is identically zero");
  double quartic = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double w = s[i] * s[i] / total;
    quartic += w * w;
  }
  return 1.0 / quartic;
}

inline double visibility(double c_max, double c_min) {
  if (c_max + c_min <= 0.0)
    throw std::invalid_argument("visibility undefined for zero counts");
  return (c_max - c_min) / (c_max + c_min);
}

struct FringeFit {
  double amplitude = 0.0;  // A in A(1 + V cos(phi + phi0))/2 + B
  double visibility = 0.0;
  double phase_offset = 0.0;
  double floor = 0.0;  // B, fixed by the caller
};

// Least-squares fit of A(1 + V cos(phi + phi0))/2 + B with B fixed.
// Linear in (c0, c1, c2) against the basis (1, cos phi, sin phi).
inline FringeFit fit_fringe(const std::vector<std::pair<double, double>>& points,
                            double fixed_floor = 0.0) {
  if (points.size() < 3) throw std::invalid_argument("fringe fit needs >= 3 points");
  Eigen::MatrixXd basis(points.size(), 3);
  Eigen::VectorXd y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    basis(i, 0) = 1.0;
    basis(i, 1) = std::cos(points[i].first);
    basis(i, 2) = std::sin(points[i].first);
    y[i] = points[i].second - fixed_floor;
  }
  const Eigen::Vector3d c =
      basis.colPivHouseholderQr().solve(y);
  FringeFit fit;
  fit.floor = fixed_floor;
  fit.amplitude = 2.0 * c[0];
  const double modulation = std::hypot(c[1], c[2]);
  fit.visibility = c[0] > 0.0 ? modulation / c[0] : 0.0;
  fit.phase_offset = std::atan2(-c[2], c[1]);
  return fit;
}

// Expected coincidences on one channel pair as a spectral phase is swept.
inline std::vector<std::pair<double, double>> fringe_scan(
    const std::function<BiphotonState(double)>& state_builder,
    const std::vector<double>& phases, int signal_channel, int idler_channel,
    const DetectionConfig& cfg) {
  if (phases.empty()) throw std::invalid_argument("fringe scan needs phases");
  std::vector<std::pair<double, double>> out;
  out.reserve(phases.size());
  for (double phi : phases) {
    const BiphotonState state = state_builder(phi);
    out.emplace_back(phi, expected_counts(state, signal_channel, idler_channel, cfg));
  }
  return out;
}

}  // namespace fbc
