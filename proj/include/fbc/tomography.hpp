#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbc/simplex.hpp"

namespace fbc {

using DensityMatrix = Eigen::MatrixXcd;

inline void check_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("density matrix not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9)
    throw std::invalid_argument("density matrix trace != 1");
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 || es.eigenvalues().maxCoeff() > 1.0 + 1e-9)
    throw std::invalid_argument("density matrix eigenvalues outside [0, 1]");
}

inline std::complex<double> cplx_i() { return {0.0, 1.0}; }

// Single-photon measurement settings of the Table-1 protocol.
enum class Setting { One, Two, Plus, L };

inline Eigen::Vector2cd setting_vector(Setting s) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (s) {
    case Setting::One: return {1.0, 0.0};
    case Setting::Two: return {0.0, 1.0};
    case Setting::Plus: return {r, r};
    case Setting::L: return {r, cplx_i() * r};
  }
  throw std::logic_error("unreachable");
}

inline std::string setting_name(Setting s) {
  switch (s) {
    case Setting::One: return "1";
    case Setting::Two: return "2";
    case Setting::Plus: return "+";
    case Setting::L: return "L";
  }
  return "?";
}

// One projection row: |Psi_nu> = |signal setting> (x) |idler setting>,
// plus the (phi_S, phi_I) configurations under which its counts are taken.
struct ProjectionSpec {
  int label = 0;  // nu in 1..16
  Setting signal = Setting::One;
  Setting idler = Setting::One;
  Eigen::Vector4cd coefficients;
  std::vector<std::pair<double, double>> phase_configs;
};

struct TomographyData {
  std::array<double, 16> counts{};  // n_nu, nu = 1..16
  double normalization = 0.0;       // C = n_1 + n_2 + n_3 + n_4
};

namespace detail {
// phi values a setting contributes: basis settings are measured at both
// phases, |+> only at 0, |L> only at pi/2.
inline std::vector<double> setting_phases(Setting s) {
  const double half_pi = std::acos(0.0);
  switch (s) {
    case Setting::One:
    case Setting::Two: return {0.0, half_pi};
    case Setting::Plus: return {0.0};
    case Setting::L: return {half_pi};
  }
  return {};
}
}  // namespace detail

// The 16 projections of Table 1, in row order; 36 (nu, config) slots total.
inline std::vector<ProjectionSpec> build_projection_set() {
  static const std::array<std::pair<Setting, Setting>, 16> rows = {{
      {Setting::One, Setting::One},   {Setting::One, Setting::Two},
      {Setting::Two, Setting::One},   {Setting::Two, Setting::Two},
      {Setting::Two, Setting::Plus},  {Setting::One, Setting::Plus},
      {Setting::Plus, Setting::Plus}, {Setting::L, Setting::Plus},
      {Setting::L, Setting::One},     {Setting::L, Setting::Two},
      {Setting::L, Setting::L},       {Setting::One, Setting::L},
      {Setting::Two, Setting::L},     {Setting::Plus, Setting::L},
      {Setting::Plus, Setting::One},  {Setting::Plus, Setting::Two},
  }};
  std::vector<ProjectionSpec> out;
  out.reserve(16);
  for (int nu = 1; nu <= 16; ++nu) {
    const auto [s, i] = rows[nu - 1];
    ProjectionSpec spec;
    spec.label = nu;
    spec.signal = s;
    spec.idler = i;
    const Eigen::Vector2cd vs = setting_vector(s), vi = setting_vector(i);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) spec.coefficients[2 * a + b] = vs[a] * vi[b];
    for (double ps : detail::setting_phases(s))
      for (double pi_ : detail::setting_phases(i))
        spec.phase_configs.emplace_back(ps, pi_);
    out.push_back(std::move(spec));
  }
  return out;
}

// Raw cell counts keyed by (nu, config index 0..3) where the configs are
// (0,0), (0,pi/2), (pi/2,0), (pi/2,pi/2) in that order.
using RawProjectionCounts = std::map<std::pair<int, int>, double>;

inline int config_index(double phi_s, double phi_i) {
  const auto bit = [](double p) { return p > 0.5 ? 1 : 0; };
  return 2 * bit(phi_s) + bit(phi_i);
}

inline TomographyData tally_projection_counts(
    const RawProjectionCounts& raw,
    const std::vector<ProjectionSpec>& projections = build_projection_set()) {
  std::size_t expected_cells = 0;
  TomographyData data;
  for (const auto& spec : projections) {
    double total = 0.0;
    for (const auto& [ps, pi_] : spec.phase_configs) {
      auto it = raw.find({spec.label, config_index(ps, pi_)});
      if (it == raw.end())
        throw std::runtime_error("incomplete tomography data: missing cell nu=" +
                                 std::to_string(spec.label));
      if (it->second < 0.0) throw std::invalid_argument("negative count");
      total += it->second;
      ++expected_cells;
    }
    data.counts[spec.label - 1] = total;
  }
  if (raw.size() != expected_cells)
    throw std::runtime_error("tomography data has cells outside the dash pattern");
  data.normalization =
      data.counts[0] + data.counts[1] + data.counts[2] + data.counts[3];
  return data;
}

// Predicted coincidence probability of one projection. The coefficient
// tuples are the bra-side components (<11|Psi>, ...) exactly as tabulated;
// contracting them without a further conjugation on the left is the
// convention that reproduces the published reconstruction.
inline double projection_probability(const ProjectionSpec& spec,
                                     const DensityMatrix& rho) {
  return (spec.coefficients.transpose() * rho * spec.coefficients.conjugate())(0)
      .real();
}

inline double likelihood(const DensityMatrix& rho, const TomographyData& data,
                         const std::vector<ProjectionSpec>& projections) {
  const double c = data.normalization;
  double total = 0.0;
  for (const auto& spec : projections) {
    const double n = data.counts[spec.label - 1];
    double pred = projection_probability(spec, rho);
    if (pred < 1e-12) {
      if (n == 0.0) continue;
      pred = 1e-12;
    }
    const double resid = c * pred - n;
    total += resid * resid / (2.0 * c * pred);
  }
  return total;
}

namespace detail {

// rho = T^dag T / tr(T^dag T), T lower-triangular: 4 real diagonal entries
// followed by 6 complex sub-diagonal entries (16 real parameters).
inline DensityMatrix rho_from_cholesky(const std::vector<double>& p) {
  Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
  int idx = 0;
  for (int i = 0; i < 4; ++i) t(i, i) = p[idx++];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      t(i, j) = std::complex<double>(p[idx], p[idx + 1]);
      idx += 2;
    }
  Eigen::Matrix4cd rho = t.adjoint() * t;
  const double tr = rho.trace().real();
  if (tr <= 0.0) return Eigen::Matrix4cd::Identity() * 0.25;
  return rho / tr;
}

// Inverse map for seeding: lower-triangular T with T^dag T = rho, obtained
// from a Cholesky factorization of the index-reversed matrix.
inline std::vector<double> cholesky_params(const DensityMatrix& rho_in) {
  Eigen::Matrix4cd rho = rho_in + 1e-8 * Eigen::Matrix4cd::Identity();
  rho /= rho.trace().real();
  Eigen::Matrix4cd rev = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rev(i, j) = rho(3 - i, 3 - j);
  Eigen::LLT<Eigen::Matrix4cd> llt(rev);
  Eigen::Matrix4cd m = llt.matrixL();
  Eigen::Matrix4cd t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = std::conj(m(3 - j, 3 - i));
  std::vector<double> p(16, 0.0);
  int idx = 0;
  for (int i = 0; i < 4; ++i) p[idx++] = t(i, i).real();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      p[idx++] = t(i, j).real();
      p[idx++] = t(i, j).imag();
    }
  return p;
}

// Unconstrained linear inversion of the 16 projection probabilities,
// clipped to the physical cone. Used only as an optimizer seed.
inline DensityMatrix linear_inversion(const TomographyData& data,
                                      const std::vector<ProjectionSpec>& projections) {
  std::vector<Eigen::Matrix4cd> basis;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix4cd b = Eigen::Matrix4cd::Zero();
    b(i, i) = 1.0;
    basis.push_back(b);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      Eigen::Matrix4cd br = Eigen::Matrix4cd::Zero(), bi = Eigen::Matrix4cd::Zero();
      br(i, j) = br(j, i) = 1.0;
      bi(i, j) = std::complex<double>(0.0, -1.0);
      bi(j, i) = std::complex<double>(0.0, 1.0);
      basis.push_back(br);
      basis.push_back(bi);
    }
  Eigen::MatrixXd a(16, 16);
  Eigen::VectorXd p(16);
  for (const auto& spec : projections) {
    const int r = spec.label - 1;
    p[r] = data.counts[r] / data.normalization;
    for (int m = 0; m < 16; ++m)
      a(r, m) = (spec.coefficients.transpose() * basis[m] *
                 spec.coefficients.conjugate())(0)
                    .real();
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(p);
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  for (int m = 0; m < 16; ++m) rho += x[m] * basis[m];
  rho = 0.5 * (rho + rho.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(1e-6);
  rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  return rho / rho.trace().real();
}

}  // namespace detail

struct MleOptions {
  int restarts = 8;
  std::uint64_t seed = 12345;
  double tolerance = 1e-10;
  long max_evaluations = 200000;
};

struct MleNotConverged : std::runtime_error {
  DensityMatrix best;
  explicit MleNotConverged(DensityMatrix rho)
      : std::runtime_error("mle optimizer did not converge"), best(std::move(rho)) {}
};

// Maximum-likelihood density-matrix estimate over the Cholesky cone:
// simplex descent from a clipped linear-inversion seed plus random restarts.
inline DensityMatrix mle_estimate(const TomographyData& data,
                                  const std::vector<ProjectionSpec>& projections,
                                  const MleOptions& options = {}) {
  if (data.normalization <= 0.0)
    throw std::invalid_argument("tomography normalization C must be positive");

  auto objective = [&](const std::vector<double>& p) {
    return likelihood(detail::rho_from_cholesky(p), data, projections);
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool any_converged = false;

  std::vector<std::vector<double>> starts;
  starts.push_back(
      detail::cholesky_params(detail::linear_inversion(data, projections)));
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> p(16);
    for (double& v : p) v = gauss(rng);
    starts.push_back(std::move(p));
  }

  for (const auto& start : starts) {
    SimplexResult res = nelder_mead(objective, start, 0.1, options.tolerance,
                                    options.max_evaluations);
    // polish: restart the simplex at the found point with a smaller step
    res = nelder_mead(objective, res.x, 0.01, options.tolerance,
                      options.max_evaluations);
    any_converged = any_converged || res.converged;
    if (res.value < best.value) best = res;
  }
  if (!any_converged) throw MleNotConverged(detail::rho_from_cholesky(best.x));
  return detail::rho_from_cholesky(best.x);
}

// Partial transpose on the idler subsystem of a (d_S x d_I) bipartite matrix.
inline DensityMatrix partial_transpose(const DensityMatrix& rho, int d_signal,
                                       int d_idler) {
  if (d_signal * d_idler != rho.rows() || rho.rows() != rho.cols())
    throw std::invalid_argument("dimensions do not factor the matrix");
  DensityMatrix out(rho.rows(), rho.cols());
  for (int s = 0; s < d_signal; ++s)
    for (int sp = 0; sp < d_signal; ++sp)
      for (int i = 0; i < d_idler; ++i)
        for (int ip = 0; ip < d_idler; ++ip)
          out(s * d_idler + ip, sp * d_idler + i) =
              rho(s * d_idler + i, sp * d_idler + ip);
  return out;
}

inline double negativity(const DensityMatrix& rho, int d_signal, int d_idler) {
  const DensityMatrix pt = partial_transpose(rho, d_signal, d_idler);
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(pt, Eigen::EigenvaluesOnly);
  double n = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()[i];
    n += (std::abs(l) - l) / 2.0;
  }
  return n;
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const DensityMatrix& rho_a, const DensityMatrix& rho_b) {
  if (rho_a.rows() != rho_b.rows() || rho_a.cols() != rho_b.cols())
    throw std::invalid_argument("fidelity dimension mismatch");
  Eigen::SelfAdjointEigenSolver<DensityMatrix> ea(rho_a);
  const DensityMatrix sqrt_a = ea.eigenvectors() *
                               ea.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               ea.eigenvectors().adjoint();
  DensityMatrix inner = sqrt_a * rho_b * sqrt_a;
  inner = 0.5 * (inner + inner.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> ei(inner, Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (int i = 0; i < ei.eigenvalues().size(); ++i)
    trace_sqrt += std::sqrt(std::max(0.0, ei.eigenvalues()[i]));
  const double f = trace_sqrt * trace_sqrt;
  return std::min(1.0, std::max(0.0, f));
}

}  // namespace fbc
