#pragma once

// Soft-input soft-output LMMSE equalizers for r = H x + n with colored n.
//
// IlmmseEqualizer works on the whole block: it factors the banded matrix
// H V_prior H^T + R_n once and then forms one outgoing message per symbol
// by a triangular solve against that symbol's column of H, which costs
// O(N^2) per block.
//
// RiLmmseEqualizer runs Gaussian message passing on a chain of augmented
// states x_k = [x_{k-L} .. x_{k+L}, n_{k-p} .. n_{k-1}] in which the AR(p)
// noise model makes the colored-noise system Markov. Forward messages are
// kept in covariance form, backward messages in weight form, and each step
// touches O(D^2) numbers with D = 2L+1+p.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftn/arfit.hpp"
#include "ftn/banded.hpp"
#include "ftn/channel.hpp"
#include "ftn/error.hpp"
#include "ftn/pulse.hpp"
#include "ftn/softmap.hpp"

namespace ftn {

struct EqualizerStats {
  std::size_t symbols = 0;
  std::size_t floored = 0;  // variances raised to the floor
  std::size_t ridge = 0;    // regularized combinations / factorizations

  EqualizerStats& operator+=(const EqualizerStats& o) {
    symbols += o.symbols;
    floored += o.floored;
    ridge += o.ridge;
    return *this;
  }
  double floored_fraction() const { return symbols ? static_cast<double>(floored) / static_cast<double>(symbols) : 0.0; }
};

struct EqualizerOptions {
  double es = 1.0;
  double variance_floor = 1e-10;  // relative to es
};

inline void check_priors(std::size_t n, std::span<const SymbolPrior> priors) {
  if (priors.size() != n)
    throw LengthMismatch("equalizer: " + std::to_string(priors.size()) + " priors for " + std::to_string(n) + " samples");
  for (const auto& p : priors)
    if (!(p.variance > 0.0)) throw ConfigError("equalizer: prior variances must be positive");
}

// ---------------------------------------------------------------------------
// Block I-LMMSE

/// Convolution matrix and noise covariance of one block, both Toeplitz.
/// Noise lags beyond the stored range are zero.
struct BlockModel {
  IsiProfile isi;
  std::vector<double> noise_lags;

  Eigen::MatrixXd H(int n) const { return build_convolution_matrix(isi, n); }

  Eigen::MatrixXd Rn(int n) const {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto d = static_cast<std::size_t>(std::abs(i - j));
        if (d < noise_lags.size()) r(i, j) = noise_lags[d];
      }
    return r;
  }
};

class IlmmseEqualizer {
 public:
  explicit IlmmseEqualizer(BlockModel model, EqualizerOptions opt = {}) : model_(std::move(model)), opt_(opt) {
    if (model_.noise_lags.empty() || !(model_.noise_lags[0] > 0.0))
      throw ConfigError("I-LMMSE: noise covariance must have positive variance");
  }

  const BlockModel& model() const { return model_; }

  std::vector<SymbolPosterior> equalize(std::span<const cdouble> r, std::span<const SymbolPrior> priors,
                                        EqualizerStats* stats = nullptr) const {
    const std::size_t n = r.size();
    check_priors(n, priors);
    const int L = model_.isi.L;
    const auto& h = model_.isi;
    const int ni = static_cast<int>(n);
    const std::size_t band = std::min<std::size_t>(
        n ? n - 1 : 0, std::max<std::size_t>(2 * static_cast<std::size_t>(L), model_.noise_lags.size() - 1));

    // S = H V_prior H^T + R_n, banded.
    BandedCholesky s(n, band);
    for (int i = 0; i < ni; ++i) {
      const int j0 = std::max(0, i - static_cast<int>(s.bandwidth()));
      for (int j = j0; j <= i; ++j) {
        double acc = 0.0;
        for (int m = std::max(0, i - L); m <= std::min(ni - 1, j + L); ++m)
          acc += h.h(m - i) * h.h(m - j) * priors[static_cast<std::size_t>(m)].variance;
        const auto d = static_cast<std::size_t>(i - j);
        if (d < model_.noise_lags.size()) acc += model_.noise_lags[d];
        s.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
      }
    }
    EqualizerStats local;
    local.ridge += s.factor(1e-14 * model_.noise_lags[0], 1e-9 * (model_.noise_lags[0] + opt_.es));

    // u = S^{-1} (r - H m_prior)
    std::vector<cdouble> u(n);
    for (int k = 0; k < ni; ++k) {
      cdouble acc = r[static_cast<std::size_t>(k)];
      for (int m = std::max(0, k - L); m <= std::min(ni - 1, k + L); ++m)
        acc -= h.h(m - k) * priors[static_cast<std::size_t>(m)].mean;
      u[static_cast<std::size_t>(k)] = acc;
    }
    s.solve<cdouble>(u);

    const double floor = opt_.variance_floor * opt_.es;
    std::vector<SymbolPosterior> out(n);
    std::vector<double> y(n);
    for (int i = 0; i < ni; ++i) {
      const int k0 = std::max(0, i - L);
      const int k1 = std::min(ni - 1, i + L);
      std::fill(y.begin() + k0, y.end(), 0.0);
      cdouble t{};
      for (int k = k0; k <= k1; ++k) {
        y[static_cast<std::size_t>(k)] = h.h(i - k);
        t += h.h(i - k) * u[static_cast<std::size_t>(k)];
      }
      s.solve_lower<double>(y, static_cast<std::size_t>(k0));
      double w = 0.0;
      for (int k = k0; k < ni; ++k) w += y[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];

      const auto& pr = priors[static_cast<std::size_t>(i)];
      auto& po = out[static_cast<std::size_t>(i)];
      if (!(w > 0.0)) {
        // Symbol does not reach the observation; nothing to learn.
        po = {pr.mean, pr.variance};
        continue;
      }
      double v_out = 1.0 / w - pr.variance;
      const cdouble m_out = pr.mean + t / w;
      if (!(v_out > floor)) {
        v_out = floor;
        ++local.floored;
      }
      const double v_post = 1.0 / (1.0 / pr.variance + 1.0 / v_out);
      po.mean = v_post * (pr.mean / pr.variance + m_out / v_out);
      po.variance = v_post;
      if (!(v_post > 0.0)) {
        po.variance = floor;
        ++local.floored;
      }
    }
    local.symbols += n;
    if (stats) *stats += local;
    return out;
  }

 private:
  BlockModel model_;
  EqualizerOptions opt_;
};

inline std::vector<SymbolPosterior> ilmmse_equalize(std::span<const cdouble> r, const BlockModel& model,
                                                    std::span<const SymbolPrior> priors, EqualizerStats* stats = nullptr,
                                                    EqualizerOptions opt = {}) {
  return IlmmseEqualizer(model, opt).equalize(r, priors, stats);
}

// ---------------------------------------------------------------------------
// Augmented-state graph

/// Layout of x_k = [x_{k-L} .. x_{k+L}, n_{k-p} .. n_{k-1}].
struct AugmentedState {
  int L = 0;
  int p = 0;

  int symbols() const { return 2 * L + 1; }
  int dim() const { return 2 * L + 1 + p; }
  bool is_symbol(int i) const { return i >= 0 && i < symbols(); }
  int center() const { return L; }
  int newest_symbol() const { return 2 * L; }
  int newest_noise() const { return dim() - 1; }
};

/// Dense transition and observation quantities of the augmented chain:
///   x_{k+1} = G x_k + F [x_{k+L+1}, innovation_k]^T,  r_k = hbar x_k + innovation_k.
struct StateMatrices {
  AugmentedState layout;
  Eigen::MatrixXd G;
  Eigen::MatrixXd F;
  Eigen::RowVectorXd hbar;
};

inline StateMatrices make_state_matrices(const IsiProfile& isi, const ArModel& ar) {
  StateMatrices sm;
  sm.layout = {isi.L, ar.order};
  const int d = sm.layout.dim();
  const int ls = sm.layout.symbols();
  const int p = ar.order;
  sm.G = Eigen::MatrixXd::Zero(d, d);
  sm.F = Eigen::MatrixXd::Zero(d, 2);
  sm.hbar = Eigen::RowVectorXd::Zero(d);
  for (int i = 0; i < 2 * isi.L; ++i) sm.G(i, i + 1) = 1.0;
  for (int i = ls; i < d - 1; ++i) sm.G(i, i + 1) = 1.0;
  for (int a = 0; a < p; ++a) {
    sm.G(d - 1, ls + a) = ar.psi(p - a);
    sm.hbar(ls + a) = ar.psi(p - a);
  }
  sm.F(2 * isi.L, 0) = 1.0;
  if (p > 0) sm.F(d - 1, 1) = 1.0;
  for (int j = 0; j < ls; ++j) sm.hbar(j) = isi.h(j - isi.L);
  return sm;
}

/// Mean and either covariance or weight (inverse covariance).
struct GaussianMessage {
  enum class Form { Covariance, Weight };
  Form form = Form::Covariance;
  Eigen::VectorXcd mean;       // weight form stores W m here
  Eigen::MatrixXd matrix;
};

enum class Readout {
  Center,  // combine at every state and read its center symbol
  Block,   // combine every 2L+1 states and read the whole symbol window
};

struct RiLmmseOptions : EqualizerOptions {
  Readout readout = Readout::Block;
  bool keep_messages = false;
};

class RiLmmseEqualizer {
 public:
  RiLmmseEqualizer(IsiProfile isi, ArModel ar, RiLmmseOptions opt = {})
      : isi_(std::move(isi)), ar_(std::move(ar)), opt_(opt), layout_{isi_.L, ar_.order} {
    if (!(ar_.innovation_var > 0.0)) throw ConfigError("RI-LMMSE: innovation variance must be positive");
    if (static_cast<int>(ar_.coeffs.size()) != ar_.order) throw ConfigError("RI-LMMSE: AR coefficient count mismatch");
    const int d = layout_.dim();
    const int ls = layout_.symbols();
    c_.assign(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < ls; ++j) c_[static_cast<std::size_t>(j)] = isi_.h(j - isi_.L);
    for (int a = 0; a < ar_.order; ++a) c_[static_cast<std::size_t>(ls + a)] = ar_.psi(ar_.order - a);
    // Index of each state entry of x_{k+1} inside (x_k, x_new).
    src_.assign(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) src_[static_cast<std::size_t>(i)] = i + 1;
    src_[static_cast<std::size_t>(2 * isi_.L)] = kNew;
    if (ar_.order > 0) src_[static_cast<std::size_t>(d - 1)] = kLast;
    if (ar_.order > 0) stationary_ = ar_autocorrelation(ar_, ar_.order);
  }

  const AugmentedState& layout() const { return layout_; }
  const std::vector<GaussianMessage>& forward_messages() const { return fwd_log_; }
  const std::vector<GaussianMessage>& backward_messages() const { return bwd_log_; }

  std::vector<SymbolPosterior> equalize(std::span<const cdouble> r, std::span<const SymbolPrior> priors,
                                        EqualizerStats* stats = nullptr) {
    const std::size_t n = r.size();
    check_priors(n, priors);
    const int d = layout_.dim();
    const int ls = layout_.symbols();
    const int L = isi_.L;
    const int p = ar_.order;
    const int ni = static_cast<int>(n);
    const double s2 = ar_.innovation_var;
    EqualizerStats local;
    fwd_log_.clear();
    bwd_log_.clear();

    auto prior_of = [&](int s, cdouble& m, double& v) {
      if (s < 0 || s >= ni) {
        m = 0.0;
        v = 0.0;  // outside the block: known zero
      } else {
        m = priors[static_cast<std::size_t>(s)].mean;
        v = priors[static_cast<std::size_t>(s)].variance;
      }
    };

    // Readout schedule.
    readout_.assign(n, 0);
    std::vector<int> slots;
    if (opt_.readout == Readout::Center) {
      for (int k = 0; k < ni; ++k) slots.push_back(k);
    } else {
      for (int k = L; k - L < ni; k += ls) slots.push_back(std::min(k, ni - 1));
      if (!slots.empty() && slots.back() + L < ni - 1) slots.push_back(ni - 1);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) readout_[static_cast<std::size_t>(slots[i])] = static_cast<int>(i) + 1;
    stored_m_.resize(slots.size());
    stored_v_.resize(slots.size());

    // Forward pass.
    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(d);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < ls; ++j) {
      double var;
      prior_of(j - L, m(j), var);
      v(j, j) = var;
    }
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) v(ls + a, ls + b) = stationary_[static_cast<std::size_t>(std::abs(a - b))];

    Eigen::VectorXcd m_next(d);
    Eigen::MatrixXd v_next(d, d);
    Eigen::VectorXd vc(d), t(d);
    for (int k = 0; k < ni; ++k) {
      if (const int slot = readout_[static_cast<std::size_t>(k)]) {
        stored_m_[static_cast<std::size_t>(slot - 1)] = m;
        stored_v_[static_cast<std::size_t>(slot - 1)] = v;
      }
      if (opt_.keep_messages) fwd_log_.push_back({GaussianMessage::Form::Covariance, m, v});
      const cdouble rk = r[static_cast<std::size_t>(k)];

      // Condition on r_k = c x_k + innovation_k.
      cdouble pred{};
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += v(i, j) * c_[static_cast<std::size_t>(j)];
        vc(i) = acc;
        pred += c_[static_cast<std::size_t>(i)] * m(i);
      }
      double sv = s2;
      for (int i = 0; i < d; ++i) sv += c_[static_cast<std::size_t>(i)] * vc(i);
      const cdouble gain = (rk - pred) / sv;
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) v(i, j) -= vc(i) * vc(j) / sv;
      for (int i = 0; i < d; ++i) m(i) += vc(i) * gain;

      // Shift in x_{k+L+1}; the newest noise entry n_k = r_k - h x is a
      // deterministic function of x_k once r_k is known.
      cdouble new_m;
      double new_v;
      prior_of(k + L + 1, new_m, new_v);
      cdouble last_m = rk;
      if (p > 0) {
        for (int y = 0; y < d; ++y) {
          double acc = 0.0;
          for (int j = 0; j < ls; ++j) acc -= c_[static_cast<std::size_t>(j)] * v(y, j);
          t(y) = acc;
        }
        for (int j = 0; j < ls; ++j) last_m -= c_[static_cast<std::size_t>(j)] * m(j);
      }
      for (int jj = 0; jj < d; ++jj) {
        const int sj = src_[static_cast<std::size_t>(jj)];
        for (int ii = 0; ii < d; ++ii) {
          const int si = src_[static_cast<std::size_t>(ii)];
          double val;
          if (si >= 0 && sj >= 0) val = v(si, sj);
          else if (si == kNew || sj == kNew) val = (si == kNew && sj == kNew) ? new_v : 0.0;
          else if (si == kLast && sj == kLast) {
            val = 0.0;
            for (int j = 0; j < ls; ++j) val -= c_[static_cast<std::size_t>(j)] * t(j);
          } else {
            val = t(si == kLast ? sj : si);
          }
          v_next(ii, jj) = val;
        }
        m_next(jj) = sj >= 0 ? m(sj) : (sj == kNew ? new_m : last_m);
      }
      m.swap(m_next);
      v.swap(v_next);
      symmetrize(v);
    }

    // Backward pass, combining with stored forward messages on the way.
    std::vector<SymbolPosterior> out(n);
    std::vector<char> done(n, 0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(d);
    Eigen::MatrixXd wz(d + 1, d + 1);
    Eigen::VectorXcd xz(d + 1);
    Eigen::VectorXd wl(d + 1), g(d + 1);
    g.setZero();
    for (int j = 0; j < ls; ++j) g(j) = -c_[static_cast<std::size_t>(j)];
    const double floor = opt_.variance_floor * opt_.es;

    if (opt_.keep_messages) bwd_log_.assign(n, GaussianMessage{});
    for (int k = ni - 1; k >= 0; --k) {
      const cdouble rk = r[static_cast<std::size_t>(k)];
      wz.setZero();
      xz.setZero();
      for (int jj = 0; jj < d; ++jj) {
        const int zj = zindex(jj, d);
        if (zj < 0) continue;
        for (int ii = 0; ii < d; ++ii) {
          const int zi = zindex(ii, d);
          if (zi >= 0) wz(zi, zj) = w(ii, jj);
        }
      }
      if (p > 0) {
        const int last = d - 1;
        wl.setZero();
        for (int ii = 0; ii < d; ++ii) {
          const int zi = zindex(ii, d);
          if (zi >= 0) wl(zi) = w(ii, last);
        }
        const double wll = w(last, last);
        for (int jj = 0; jj <= d; ++jj)
          for (int ii = 0; ii <= d; ++ii) wz(ii, jj) += wl(ii) * g(jj) + g(ii) * wl(jj) + wll * g(ii) * g(jj);
        const cdouble xlast = xi(last) - w(last, last) * rk;
        for (int ii = 0; ii < d; ++ii) {
          const int zi = zindex(ii, d);
          if (zi >= 0) xz(zi) = xi(ii) - w(ii, last) * rk;
        }
        for (int ii = 0; ii <= d; ++ii) xz(ii) += g(ii) * xlast;
      } else {
        for (int ii = 0; ii < d; ++ii) xz(zindex(ii, d)) = xi(ii);
      }

      // Absorb the prior of the symbol entering at this step.
      cdouble new_m;
      double new_v;
      prior_of(k + L + 1, new_m, new_v);
      if (new_v > 0.0) {
        const double wnn = wz(d, d) + 1.0 / new_v;
        const cdouble xn = xz(d) + new_m / new_v;
        for (int jj = 0; jj < d; ++jj) {
          for (int ii = 0; ii < d; ++ii) w(ii, jj) = wz(ii, jj) - wz(ii, d) * wz(d, jj) / wnn;
          xi(jj) = xz(jj) - wz(jj, d) * xn / wnn;
        }
      } else {
        for (int jj = 0; jj < d; ++jj) {
          for (int ii = 0; ii < d; ++ii) w(ii, jj) = wz(ii, jj);
          xi(jj) = xz(jj) - wz(jj, d) * new_m;
        }
      }
      // Observation r_k = c x_k + innovation_k.
      for (int jj = 0; jj < d; ++jj) {
        const double cj = c_[static_cast<std::size_t>(jj)];
        for (int ii = 0; ii < d; ++ii) w(ii, jj) += c_[static_cast<std::size_t>(ii)] * cj / s2;
        xi(jj) += cj * rk / s2;
      }
      symmetrize(w);
      if (opt_.keep_messages) bwd_log_[static_cast<std::size_t>(k)] = {GaussianMessage::Form::Weight, xi, w};

      if (const int slot = readout_[static_cast<std::size_t>(k)]) {
        combine(stored_m_[static_cast<std::size_t>(slot - 1)], stored_v_[static_cast<std::size_t>(slot - 1)], w, xi,
                local);
        for (int j = 0; j < ls; ++j) {
          const int s = k - L + j;
          if (s < 0 || s >= ni || done[static_cast<std::size_t>(s)]) continue;
          if (opt_.readout == Readout::Center && j != L) continue;
          double var = post_v_(j, j);
          if (!(var > 0.0)) {
            var = floor;
            ++local.floored;
          }
          out[static_cast<std::size_t>(s)] = {post_m_(j), var};
          done[static_cast<std::size_t>(s)] = 1;
        }
      }
    }
    local.symbols += n;
    if (stats) *stats += local;
    return out;
  }

 private:
  static constexpr int kNew = -1;
  static constexpr int kLast = -2;

  // Position of x_{k+1} entry i inside z = (x_k, x_new); -1 for the
  // newest-noise entry, which is expressed through g instead.
  int zindex(int i, int d) const {
    const int s = src_[static_cast<std::size_t>(i)];
    if (s >= 0) return s;
    return s == kNew ? d : -1;
  }

  static void symmetrize(Eigen::MatrixXd& a) {
    const auto d = a.rows();
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = j + 1; i < d; ++i) {
        const double avg = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = avg;
        a(j, i) = avg;
      }
  }

  // V_post = (I + V W)^{-1} V,  m_post = m + V_post (xi - W m).
  void combine(const Eigen::VectorXcd& m, const Eigen::MatrixXd& v, const Eigen::MatrixXd& w,
               const Eigen::VectorXcd& xi, EqualizerStats& stats) {
    const auto d = v.rows();
    Eigen::MatrixXd vv = v;
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(d, d) + vv * w;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    if (!(lu.rcond() > 1e-14)) {
      vv.diagonal().array() += 1e-10 * opt_.es;
      k = Eigen::MatrixXd::Identity(d, d) + vv * w;
      lu.compute(k);
      ++stats.ridge;
    }
    post_v_ = lu.solve(vv);
    symmetrize(post_v_);
    const Eigen::VectorXcd resid = xi - w.cast<cdouble>() * m;
    post_m_ = m + post_v_.cast<cdouble>() * resid;
  }

  IsiProfile isi_;
  ArModel ar_;
  RiLmmseOptions opt_;
  AugmentedState layout_;
  std::vector<double> c_;
  std::vector<int> src_;
  std::vector<double> stationary_;
  std::vector<int> readout_;
  std::vector<Eigen::VectorXcd> stored_m_;
  std::vector<Eigen::MatrixXd> stored_v_;
  Eigen::MatrixXd post_v_;
  Eigen::VectorXcd post_m_;
  std::vector<GaussianMessage> fwd_log_, bwd_log_;
};

inline std::vector<SymbolPosterior> rilmmse_equalize(std::span<const cdouble> r, const IsiProfile& isi, const ArModel& ar,
                                                     std::span<const SymbolPrior> priors, EqualizerStats* stats = nullptr,
                                                     RiLmmseOptions opt = {}) {
  RiLmmseEqualizer eq(isi, ar, opt);
  return eq.equalize(r, priors, stats);
}

}  // namespace ftn
