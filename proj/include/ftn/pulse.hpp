#pragma once

// Root-raised-cosine pulse, the FTN-induced ISI tap profile, and the
// matched-filter noise autocorrelation. Time is normalized so that T = 1.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftn/error.hpp"

namespace ftn {

struct PulseSpec {
  double alpha = 0.3;    // roll-off
  int half_span = 8;     // truncation half width, in T
  int oversampling = 16; // quadrature samples per T

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw ConfigError("pulse: alpha must lie in [0,1], got " + std::to_string(alpha));
    if (half_span < 1)
      throw ConfigError("pulse: half_span must be >= 1, got " + std::to_string(half_span));
    if (oversampling < 8)
      throw ConfigError("pulse: oversampling must be >= 8, got " + std::to_string(oversampling));
  }
};

/// Unit-energy rRC amplitude at time t (in units of T). The removable
/// singularities at t = 0 and |t| = 1/(4 alpha) are evaluated by their limits.
inline double rrc_amplitude(const PulseSpec& spec, double t) {
  using std::numbers::pi;
  const double a = spec.alpha;
  constexpr double eps = 1e-10;
  if (std::abs(t) < eps) return 1.0 - a + 4.0 * a / pi;
  if (a == 0.0) return std::sin(pi * t) / (pi * t);
  if (std::abs(std::abs(4.0 * a * t) - 1.0) < eps) {
    const double x = pi / (4.0 * a);
    return a / std::numbers::sqrt2 *
           ((1.0 + 2.0 / pi) * std::sin(x) + (1.0 - 2.0 / pi) * std::cos(x));
  }
  const double num = std::sin(pi * t * (1.0 - a)) + 4.0 * a * t * std::cos(pi * t * (1.0 + a));
  const double den = pi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t));
  return num / den;
}

/// Discrete ISI taps h[-L..L] stored centered: taps[k + L] = h[k].
struct IsiProfile {
  double tau = 1.0;
  int L = 0;
  std::vector<double> taps{1.0};
  // Number of requested taps whose shift lies entirely outside the pulse
  // support; those taps are exactly zero.
  int zero_tail = 0;

  double h(int k) const {
    if (k < -L || k > L) return 0.0;
    return taps[static_cast<std::size_t>(k + L)];
  }
  int size() const { return 2 * L + 1; }

  bool symmetric() const {
    for (int k = 1; k <= L; ++k)
      if (h(k) != h(-k)) return false;
    return true;
  }

  /// Restricts the profile to at most `max_taps` centered taps.
  IsiProfile capped(int max_taps) const {
    if (max_taps < 1) throw ConfigError("tap cap must be >= 1");
    const int new_l = std::min(L, (max_taps - 1) / 2);
    IsiProfile out;
    out.tau = tau;
    out.L = new_l;
    out.taps.assign(taps.begin() + (L - new_l), taps.begin() + (L + new_l + 1));
    return out;
  }

  /// Profile of a causal static channel r_k = sum_d g[d] x_{k-d}. In the
  /// library's h[m-k] convention this puts g[d] at h[-d].
  static IsiProfile from_causal(const std::vector<double>& g) {
    if (g.empty()) throw ConfigError("static ISI pattern must not be empty");
    IsiProfile out;
    out.tau = 1.0;
    out.L = static_cast<int>(g.size()) - 1;
    out.taps.assign(static_cast<std::size_t>(2 * out.L + 1), 0.0);
    for (std::size_t d = 0; d < g.size(); ++d) out.taps[static_cast<std::size_t>(out.L) - d] = g[d];
    return out;
  }

  static IsiProfile identity() { return IsiProfile{}; }
};

/// Quadrature inner products of a real even pulse with its k*tau shifts.
///
/// The pulse is sampled on t_n = lo + n/oversampling over [lo, hi] and
/// treated as zero outside that support. Taps are normalized by the energy
/// of the sampled, truncated pulse so that h[0] = 1.
template <class PulseFn>
IsiProfile isi_taps_from(PulseFn&& pulse, double lo, double hi, int oversampling, double tau, int L) {
  if (!(tau > 0.0 && tau <= 1.0))
    throw ConfigError("isi_taps: tau must lie in (0,1], got " + std::to_string(tau));
  if (L < 0) throw ConfigError("isi_taps: L must be >= 0");
  if (!(hi > lo)) throw ConfigError("isi_taps: empty pulse support");
  const double dt = 1.0 / oversampling;
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) * oversampling)) + 1;
  const double guard = 1e-9 * dt;

  std::vector<double> samples(count);
  double energy = 0.0;
  for (std::size_t n = 0; n < count; ++n) {
    samples[n] = pulse(lo + static_cast<double>(n) * dt);
    energy += samples[n] * samples[n];
  }
  energy *= dt;

  IsiProfile out;
  out.tau = tau;
  out.L = L;
  out.taps.assign(static_cast<std::size_t>(2 * L + 1), 0.0);
  for (int k = 0; k <= L; ++k) {
    const double shift = k * tau;
    double acc = 0.0;
    if (shift <= (hi - lo) + guard) {
      for (std::size_t n = 0; n < count; ++n) {
        const double s = lo + static_cast<double>(n) * dt - shift;
        if (s < lo - guard || s > hi + guard) continue;
        acc += samples[n] * pulse(s);
      }
    } else {
      ++out.zero_tail;
    }
    const double hk = acc * dt / energy;
    out.taps[static_cast<std::size_t>(L + k)] = hk;
    out.taps[static_cast<std::size_t>(L - k)] = hk;
  }
  out.taps[static_cast<std::size_t>(L)] = 1.0;
  if (out.zero_tail > 0) out.zero_tail *= 2;
  return out;
}

/// ISI profile of the truncated rRC pulse packed at tau.
inline IsiProfile isi_taps(const PulseSpec& spec, double tau, int L) {
  spec.validate();
  const double span = spec.half_span;
  return isi_taps_from([&](double t) { return rrc_amplitude(spec, t); }, -span, span,
                       spec.oversampling, tau, L);
}

/// Largest lag with a nonzero tap for this pulse and packing ratio.
inline int support_half_length(const PulseSpec& spec, double tau) {
  return static_cast<int>(std::floor(2.0 * spec.half_span / tau + 1e-9));
}

struct NoiseAutocorr {
  double n0 = 1.0;
  std::vector<double> lags{1.0};  // gamma_n[0..K]

  double at(int k) const {
    const auto a = static_cast<std::size_t>(std::abs(k));
    return a < lags.size() ? lags[a] : 0.0;
  }
};

inline NoiseAutocorr noise_autocorr(const IsiProfile& profile, double n0) {
  if (!(n0 > 0.0)) throw ConfigError("noise_autocorr: n0 must be positive");
  NoiseAutocorr out;
  out.n0 = n0;
  out.lags.resize(static_cast<std::size_t>(profile.L) + 1);
  for (int k = 0; k <= profile.L; ++k) out.lags[static_cast<std::size_t>(k)] = n0 * profile.h(k);
  return out;
}

inline NoiseAutocorr white_noise_autocorr(double n0) {
  if (!(n0 > 0.0)) throw ConfigError("noise_autocorr: n0 must be positive");
  return NoiseAutocorr{n0, {n0}};
}

inline void to_json(nlohmann::json& j, const IsiProfile& p) {
  j = nlohmann::json{{"tau", p.tau}, {"L", p.L}, {"taps", p.taps}};
}

inline void from_json(const nlohmann::json& j, IsiProfile& p) {
  p.tau = j.at("tau").get<double>();
  p.L = j.at("L").get<int>();
  p.taps = j.at("taps").get<std::vector<double>>();
  p.zero_tail = 0;
  if (p.L < 0 || p.taps.size() != static_cast<std::size_t>(2 * p.L + 1))
    throw ConfigError("IsiProfile JSON: taps must have 2L+1 entries");
}

inline void to_json(nlohmann::json& j, const NoiseAutocorr& n) {
  j = nlohmann::json{{"n0", n.n0}, {"lags", n.lags}};
}

inline void from_json(const nlohmann::json& j, NoiseAutocorr& n) {
  n.n0 = j.at("n0").get<double>();
  n.lags = j.at("lags").get<std::vector<double>>();
}

}  // namespace ftn
