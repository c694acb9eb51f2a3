#pragma once

// Discrete matched-filter-output channel r = H x + n.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "ftn/arfit.hpp"
#include "ftn/banded.hpp"
#include "ftn/constellation.hpp"
#include "ftn/error.hpp"
#include "ftn/pulse.hpp"
#include "ftn/rng.hpp"

namespace ftn {

/// Dense N x N convolution matrix with H(i, j) = h[j - i]; symbols outside
/// the block are taken as zero.
inline Eigen::MatrixXd build_convolution_matrix(const IsiProfile& profile, int n) {
  if (n < profile.size())
    throw ConfigError("build_convolution_matrix: n must be >= 2L+1");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - profile.L); j <= std::min(n - 1, i + profile.L); ++j) h(i, j) = profile.h(j - i);
  return h;
}

/// Banded product H x without forming H.
inline std::vector<cdouble> apply_isi(const IsiProfile& profile, std::span<const cdouble> x) {
  const int n = static_cast<int>(x.size());
  std::vector<cdouble> r(x.size());
  for (int k = 0; k < n; ++k) {
    cdouble acc{};
    for (int m = std::max(0, k - profile.L); m <= std::min(n - 1, k + profile.L); ++m)
      acc += profile.h(m - k) * x[static_cast<std::size_t>(m)];
    r[static_cast<std::size_t>(k)] = acc;
  }
  return r;
}

enum class NoiseMode { Exact, Ar, White };

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::Exact: return "exact";
    case NoiseMode::Ar: return "ar";
    case NoiseMode::White: return "white";
  }
  return "exact";
}

inline NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "exact") return NoiseMode::Exact;
  if (s == "ar") return NoiseMode::Ar;
  if (s == "white") return NoiseMode::White;
  throw ConfigError("unknown noise mode '" + s + "' (exact|ar|white)");
}

struct NoiseSpec {
  NoiseMode mode = NoiseMode::Exact;
  ArModel ar;  // used in Ar mode; must be fitted for unit N0
};

struct ReceivedBlock {
  std::vector<cdouble> samples;
  IsiProfile profile;
  NoiseAutocorr noise;

  std::size_t size() const { return samples.size(); }
};

/// Colored Gaussian noise with covariance Toeplitz(n0 * lags), generated as
/// C w with C the banded Cholesky factor of the unit-N0 covariance. Pivots
/// that rounding pushes to or below zero are floored at 1e-12 (relative).
class ColoredNoiseSource {
 public:
  explicit ColoredNoiseSource(std::vector<double> unit_lags, double floor = 1e-12, double negative_tolerance = 1e-9)
      : lags_(std::move(unit_lags)), floor_(floor), tol_(negative_tolerance) {
    if (lags_.empty() || !(lags_[0] > 0.0)) throw ConfigError("noise lags must start with a positive variance");
  }

  std::vector<cdouble> draw(std::size_t n, double n0, Rng& rng) const {
    const BandedCholesky& c = factor_for(n);
    std::vector<cdouble> w(n), out(n);
    for (auto& v : w) v = complex_gaussian(rng, 1.0);
    c.multiply_lower<cdouble>(w, out);
    const double s = std::sqrt(n0);
    for (auto& v : out) v *= s;
    return out;
  }

  std::size_t floored_pivots(std::size_t n) const {
    factor_for(n);
    std::lock_guard lock(mu_);
    return floored_.at(n);
  }

 private:
  const BandedCholesky& factor_for(std::size_t n) const {
    std::lock_guard lock(mu_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return *it->second;
    auto c = std::make_unique<BandedCholesky>(toeplitz_band(lags_, n));
    floored_[n] = c->factor(floor_ * lags_[0], tol_ * lags_[0]);
    return *cache_.emplace(n, std::move(c)).first->second;
  }

  std::vector<double> lags_;
  double floor_;
  double tol_;
  mutable std::mutex mu_;
  mutable std::map<std::size_t, std::unique_ptr<BandedCholesky>> cache_;
  mutable std::map<std::size_t, std::size_t> floored_;
};

/// A channel realization source for fixed ISI profile and noise model. The
/// noise covariance factor is cached per block length, so one instance may
/// serve many frames (and threads).
class FtnChannel {
 public:
  FtnChannel(IsiProfile profile, NoiseSpec noise)
      : profile_(std::move(profile)), noise_(std::move(noise)) {
    if (noise_.mode == NoiseMode::Exact) {
      std::vector<double> lags(static_cast<std::size_t>(profile_.L) + 1);
      for (int k = 0; k <= profile_.L; ++k) lags[static_cast<std::size_t>(k)] = profile_.h(k);
      exact_ = std::make_unique<ColoredNoiseSource>(std::move(lags));
    }
  }

  const IsiProfile& profile() const { return profile_; }
  const NoiseSpec& noise_spec() const { return noise_; }

  /// Autocorrelation of the noise this channel adds at the given N0.
  NoiseAutocorr noise_autocorr_at(double n0) const {
    switch (noise_.mode) {
      case NoiseMode::Exact: return noise_autocorr(profile_, n0);
      case NoiseMode::White: return white_noise_autocorr(n0);
      case NoiseMode::Ar: {
        NoiseAutocorr out;
        out.n0 = n0;
        out.lags = ar_autocorrelation(noise_.ar, std::max(noise_.ar.order, profile_.L));
        for (auto& g : out.lags) g *= n0;
        return out;
      }
    }
    return white_noise_autocorr(n0);
  }

  std::vector<cdouble> draw_noise(std::size_t n, double n0, Rng& rng) const {
    switch (noise_.mode) {
      case NoiseMode::Exact: return exact_->draw(n, n0, rng);
      case NoiseMode::White: {
        std::vector<cdouble> out(n);
        for (auto& v : out) v = complex_gaussian(rng, n0);
        return out;
      }
      case NoiseMode::Ar: {
        auto out = generate_ar_noise(noise_.ar, n, rng);
        const double s = std::sqrt(n0);
        for (auto& v : out) v *= s;
        return out;
      }
    }
    return {};
  }

  ReceivedBlock simulate(std::span<const cdouble> symbols, double n0, Rng& rng) const {
    if (n0 < 0.0) throw ConfigError("simulate_block: n0 must be nonnegative");
    ReceivedBlock block;
    block.profile = profile_;
    block.samples = apply_isi(profile_, symbols);
    if (n0 > 0.0) {
      const auto n = draw_noise(symbols.size(), n0, rng);
      for (std::size_t k = 0; k < n.size(); ++k) block.samples[k] += n[k];
      block.noise = noise_autocorr_at(n0);
    } else {
      block.noise = NoiseAutocorr{0.0, {0.0}};
    }
    return block;
  }

 private:
  IsiProfile profile_;
  NoiseSpec noise_;
  std::unique_ptr<ColoredNoiseSource> exact_;
};

/// r = H x + n for one block. In Ar mode the AR model describes unit-N0 noise
/// and is scaled by n0.
inline ReceivedBlock simulate_block(std::span<const cdouble> symbols, const IsiProfile& profile, double n0, Rng& rng,
                                    const NoiseSpec& noise = {}) {
  return FtnChannel(profile, noise).simulate(symbols, n0, rng);
}

inline void to_json(nlohmann::json& j, const ReceivedBlock& b) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : b.samples) samples.push_back({s.real(), s.imag()});
  j = nlohmann::json{{"N", b.samples.size()}, {"samples", samples}, {"profile", b.profile}, {"noise", b.noise}};
}

inline void from_json(const nlohmann::json& j, ReceivedBlock& b) {
  const auto n = j.at("N").get<std::size_t>();
  const auto& s = j.at("samples");
  if (s.size() != n) throw LengthMismatch("ReceivedBlock JSON: N does not match sample count");
  b.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) b.samples[k] = {s[k].at(0).get<double>(), s[k].at(1).get<double>()};
  b.profile = j.at("profile").get<IsiProfile>();
  b.noise = j.at("noise").get<NoiseAutocorr>();
}

}  // namespace ftn
