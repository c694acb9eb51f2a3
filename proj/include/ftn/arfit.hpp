#pragma once

// Autoregressive model of the colored matched-filter noise: Yule-Walker fit,
// implied autocorrelation, and sample-path generation.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "ftn/error.hpp"
#include "ftn/rng.hpp"

namespace ftn {

/// n_k = sum_{i=1..p} coeffs[i-1] * n_{k-i} + innovation, innovation ~ CN(0, innovation_var).
struct ArModel {
  int order = 0;
  std::vector<double> coeffs;
  double innovation_var = 1.0;

  double psi(int i) const { return coeffs[static_cast<std::size_t>(i - 1)]; }
};

struct ArFitOptions {
  double max_condition = 1e12;
  double stability_margin = 1e-9;
};

namespace detail {

inline Eigen::MatrixXd toeplitz(std::span<const double> gamma, int p) {
  Eigen::MatrixXd t(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) t(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
  return t;
}

// Returns false when a reflection coefficient leaves (-1, 1).
inline bool levinson_durbin(std::span<const double> gamma, int p, std::vector<double>& a) {
  a.assign(static_cast<std::size_t>(p), 0.0);
  std::vector<double> prev(static_cast<std::size_t>(p), 0.0);
  double err = gamma[0];
  for (int m = 1; m <= p; ++m) {
    double acc = gamma[static_cast<std::size_t>(m)];
    for (int i = 1; i < m; ++i) acc -= a[static_cast<std::size_t>(i - 1)] * gamma[static_cast<std::size_t>(m - i)];
    const double k = acc / err;
    if (!std::isfinite(k) || std::abs(k) >= 1.0) return false;
    prev = a;
    for (int i = 1; i < m; ++i)
      a[static_cast<std::size_t>(i - 1)] = prev[static_cast<std::size_t>(i - 1)] - k * prev[static_cast<std::size_t>(m - i - 1)];
    a[static_cast<std::size_t>(m - 1)] = k;
    err *= (1.0 - k * k);
  }
  return true;
}

inline double max_root_modulus(const std::vector<double>& psi) {
  const auto p = static_cast<Eigen::Index>(psi.size());
  if (p == 0) return 0.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = psi[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Condition number of the p x p Toeplitz matrix built from gamma[0..p-1].
inline double toeplitz_condition(std::span<const double> gamma, int p) {
  if (p == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::toeplitz(gamma, p), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

/// Fits an AR(p) model with p = gamma.size() - 1 by solving the Yule-Walker
/// equations. Levinson-Durbin is tried first; a dense solve takes over if a
/// reflection coefficient leaves the unit interval. One step of iterative
/// refinement is applied to the coefficients.
inline ArModel fit_yule_walker(std::span<const double> gamma, const ArFitOptions& opt = {}) {
  if (gamma.empty()) throw ConfigError("fit_yule_walker: need at least gamma(0)");
  if (!(gamma[0] > 0.0)) throw ConfigError("fit_yule_walker: gamma(0) must be positive");
  const int p = static_cast<int>(gamma.size()) - 1;

  ArModel model;
  model.order = p;
  if (p > 0) {
    const double cond = toeplitz_condition(gamma, p);
    if (!(cond <= opt.max_condition))
      throw IllConditioned(cond, "fit_yule_walker: Toeplitz condition " + std::to_string(cond) +
                                     " exceeds limit; reduce the AR order");

    const Eigen::MatrixXd t = detail::toeplitz(gamma, p);
    Eigen::VectorXd rhs(p);
    for (int j = 0; j < p; ++j) rhs(j) = gamma[static_cast<std::size_t>(j + 1)];

    std::vector<double> a;
    Eigen::VectorXd psi(p);
    if (detail::levinson_durbin(gamma, p, a)) {
      for (int i = 0; i < p; ++i) psi(i) = a[static_cast<std::size_t>(i)];
    } else {
      psi = t.ldlt().solve(rhs);
    }
    const Eigen::VectorXd residual = rhs - t * psi;
    psi += t.ldlt().solve(residual);
    model.coeffs.assign(psi.data(), psi.data() + p);
  }

  double var = gamma[0];
  for (int i = 1; i <= p; ++i) var -= model.psi(i) * gamma[static_cast<std::size_t>(i)];
  if (!(var > 0.0))
    throw NonPositiveInnovation("fit_yule_walker: innovation variance " + std::to_string(var) +
                                " is not positive");
  model.innovation_var = var;

  const double rho = detail::max_root_modulus(model.coeffs);
  if (rho >= 1.0 - opt.stability_margin)
    throw UnstableModel("fit_yule_walker: characteristic root modulus " + std::to_string(rho) +
                        " is not inside the unit circle");
  return model;
}

inline ArModel fit_yule_walker(std::span<const double> gamma, int order, const ArFitOptions& opt = {}) {
  if (order < 0 || static_cast<std::size_t>(order) + 1 > gamma.size())
    throw ConfigError("fit_yule_walker: need gamma(0..p) for order p=" + std::to_string(order));
  return fit_yule_walker(gamma.first(static_cast<std::size_t>(order) + 1), opt);
}

/// Stationary autocorrelation gamma(0..max_lag) implied by the model.
inline std::vector<double> ar_autocorrelation(const ArModel& model, int max_lag) {
  const int p = model.order;
  const int n = p + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j <= p; ++j)
    for (int i = 1; i <= p; ++i) a(j, std::abs(j - i)) -= model.psi(i);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = model.innovation_var;
  const auto lu = a.fullPivLu();
  Eigen::VectorXd g = lu.solve(rhs);
  g += lu.solve(rhs - a * g);

  std::vector<double> out(static_cast<std::size_t>(std::max(max_lag, p)) + 1, 0.0);
  for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(j)] = g(j);
  for (int j = p + 1; j <= max_lag; ++j) {
    double acc = 0.0;
    for (int i = 1; i <= p; ++i) acc += model.psi(i) * out[static_cast<std::size_t>(j - i)];
    out[static_cast<std::size_t>(j)] = acc;
  }
  out.resize(static_cast<std::size_t>(max_lag) + 1);
  return out;
}

inline std::vector<std::complex<double>> generate_ar_noise(const ArModel& model, std::size_t length, Rng& rng) {
  if (length == 0) throw ConfigError("generate_ar_noise: length must be positive");
  const auto p = static_cast<std::size_t>(model.order);
  const std::size_t burn = 100 * p;
  std::vector<std::complex<double>> buf(burn + length);
  for (std::size_t k = 0; k < buf.size(); ++k) {
    std::complex<double> v = complex_gaussian(rng, model.innovation_var);
    for (std::size_t i = 1; i <= p && i <= k; ++i) v += model.coeffs[i - 1] * buf[k - i];
    buf[k] = v;
  }
  return {buf.begin() + static_cast<std::ptrdiff_t>(burn), buf.end()};
}

inline void to_json(nlohmann::json& j, const ArModel& m) {
  j = nlohmann::json{{"p", m.order}, {"coeffs", m.coeffs}, {"innovation_var", m.innovation_var}};
}

inline void from_json(const nlohmann::json& j, ArModel& m) {
  m.order = j.at("p").get<int>();
  m.coeffs = j.at("coeffs").get<std::vector<double>>();
  m.innovation_var = j.at("innovation_var").get<double>();
  if (m.coeffs.size() != static_cast<std::size_t>(m.order))
    throw ConfigError("ArModel JSON: coeffs must have p entries");
}

}  // namespace ftn
