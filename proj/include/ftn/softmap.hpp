#pragma once

// Soft mapping between bit LLRs and Gaussian symbol moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "ftn/coding.hpp"
#include "ftn/constellation.hpp"
#include "ftn/error.hpp"

namespace ftn {

struct SymbolPrior {
  cdouble mean{};
  double variance = 1.0;
};

struct SymbolPosterior {
  cdouble mean{};
  double variance = 1.0;
};

/// Multipliers on exchanged extrinsic LLRs. Optional per-iteration schedules
/// override the constants for the iterations they cover.
struct ScalingPolicy {
  double eq_out_scale = 0.5;
  double dec_out_scale = 0.5;
  std::vector<double> eq_schedule;
  std::vector<double> dec_schedule;

  double eq_at(std::size_t iteration) const {
    return iteration < eq_schedule.size() ? eq_schedule[iteration] : eq_out_scale;
  }
  double dec_at(std::size_t iteration) const {
    return iteration < dec_schedule.size() ? dec_schedule[iteration] : dec_out_scale;
  }

  void validate() const {
    auto ok = [](double s) { return s > 0.0 && s <= 2.0; };
    if (!ok(eq_out_scale) || !ok(dec_out_scale)) throw ConfigError("scaling factors must lie in (0,2]");
    for (double s : eq_schedule)
      if (!ok(s)) throw ConfigError("scaling schedule entries must lie in (0,2]");
    for (double s : dec_schedule)
      if (!ok(s)) throw ConfigError("scaling schedule entries must lie in (0,2]");
  }
};

struct SoftmapOptions {
  double llr_cap = 30.0;
  double variance_floor = 1e-8;  // relative to Es
};

namespace detail {

// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace detail

/// Gaussian moments of the symbol distribution implied by independent bit LLRs.
inline SymbolPrior llr_to_prior(std::span<const double> bit_llrs, const Constellation& c, const SoftmapOptions& opt = {}) {
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  if (bit_llrs.size() != l) throw LengthMismatch("llr_to_prior: expected one LLR per label bit");
  double lp0[16], lp1[16];
  for (std::size_t q = 0; q < l; ++q) {
    const double lam = clip_llr(bit_llrs[q], opt.llr_cap);
    lp0[q] = -detail::softplus(-lam);  // log P(bit = 0)
    lp1[q] = -detail::softplus(lam);
  }
  cdouble mean{};
  double second = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double lp = 0.0;
    for (std::size_t q = 0; q < l; ++q) lp += c.label_bit(i, static_cast<int>(q)) ? lp1[q] : lp0[q];
    const double p = std::exp(lp);
    mean += p * c.points[i];
    second += p * std::norm(c.points[i]);
  }
  const double floor = opt.variance_floor * c.es;
  return {mean, std::max(second - std::norm(mean), floor)};
}

/// Bit LLRs of a CN(mean, variance) density evaluated on the constellation
/// points and renormalized over the alphabet:
///   L(c_q) = ln sum_{s in S_q0} exp(-|s-m|^2/v) - ln sum_{s in S_q1} exp(-|s-m|^2/v).
/// Used both for equalizer posteriors and for recalculated priors.
inline void gaussian_bit_llrs(cdouble mean, double variance, const Constellation& c, std::span<double> out,
                              const SoftmapOptions& opt = {}, bool clip = true) {
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  if (out.size() != l) throw LengthMismatch("gaussian_bit_llrs: output must hold one LLR per label bit");
  // Only a guard against division by zero; the moments themselves are
  // floored where they are formed (llr_to_prior, the equalizers).
  const double v = std::max(variance, 1e-30 * c.es);
  double metric[64];
  for (std::size_t i = 0; i < c.size(); ++i) metric[i] = -std::norm(c.points[i] - mean) / v;
  for (std::size_t q = 0; q < l; ++q) {
    double s0 = 0.0, s1 = 0.0, m0 = -std::numeric_limits<double>::infinity(), m1 = m0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.label_bit(i, static_cast<int>(q))) m1 = std::max(m1, metric[i]);
      else m0 = std::max(m0, metric[i]);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.label_bit(i, static_cast<int>(q))) s1 += std::exp(metric[i] - m1);
      else s0 += std::exp(metric[i] - m0);
    }
    const double llr = (m0 + std::log(s0)) - (m1 + std::log(s1));
    out[q] = clip ? clip_llr(llr, opt.llr_cap) : llr;
  }
}

inline std::vector<double> intrinsic_llr(const SymbolPosterior& post, const Constellation& c, const SoftmapOptions& opt = {}) {
  if (!(post.variance > 0.0)) throw ConfigError("intrinsic_llr: posterior variance must be positive");
  std::vector<double> out(static_cast<std::size_t>(c.bits_per_symbol));
  gaussian_bit_llrs(post.mean, post.variance, c, out, opt);
  return out;
}

inline std::vector<double> prior_llr(const SymbolPrior& prior, const Constellation& c, const SoftmapOptions& opt = {}) {
  if (!(prior.variance > 0.0)) throw ConfigError("prior_llr: prior variance must be positive");
  std::vector<double> out(static_cast<std::size_t>(c.bits_per_symbol));
  gaussian_bit_llrs(prior.mean, prior.variance, c, out, opt);
  return out;
}

/// scale * (intrinsic - recalculated prior), clipped.
inline std::vector<double> extrinsic_llr(const SymbolPosterior& post, const SymbolPrior& prior, const Constellation& c,
                                         double eq_out_scale, const SoftmapOptions& opt = {}) {
  if (!(post.variance > 0.0) || !(prior.variance > 0.0)) throw ConfigError("extrinsic_llr: variances must be positive");
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  std::vector<double> li(l), lp(l);
  gaussian_bit_llrs(post.mean, post.variance, c, li, opt, false);
  gaussian_bit_llrs(prior.mean, prior.variance, c, lp, opt, false);
  for (std::size_t q = 0; q < li.size(); ++q) li[q] = clip_llr(eq_out_scale * (li[q] - lp[q]), opt.llr_cap);
  return li;
}

inline std::vector<double> extrinsic_llr(const SymbolPosterior& post, const SymbolPrior& prior, const Constellation& c,
                                         const ScalingPolicy& policy, const SoftmapOptions& opt = {}) {
  return extrinsic_llr(post, prior, c, policy.eq_out_scale, opt);
}

/// Baseline rule: subtract the decoder-supplied a priori LLRs directly.
inline std::vector<double> extrinsic_llr_direct(const SymbolPosterior& post, std::span<const double> decoder_llrs,
                                                const Constellation& c, double eq_out_scale,
                                                const SoftmapOptions& opt = {}) {
  if (!(post.variance > 0.0)) throw ConfigError("extrinsic_llr_direct: posterior variance must be positive");
  std::vector<double> li(static_cast<std::size_t>(c.bits_per_symbol));
  gaussian_bit_llrs(post.mean, post.variance, c, li, opt, false);
  if (decoder_llrs.size() != li.size()) throw LengthMismatch("extrinsic_llr_direct: LLR count mismatch");
  for (std::size_t q = 0; q < li.size(); ++q)
    li[q] = clip_llr(eq_out_scale * (li[q] - decoder_llrs[q]), opt.llr_cap);
  return li;
}

/// Symbol priors for a whole frame of interleaved coded-bit LLRs.
inline std::vector<SymbolPrior> frame_priors(const LlrFrame& llrs, const Constellation& c, const SoftmapOptions& opt = {}) {
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  if (llrs.size() % l != 0) throw LengthMismatch("frame_priors: LLR count not divisible by bits per symbol");
  std::vector<SymbolPrior> out(llrs.size() / l);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = llr_to_prior(std::span<const double>(llrs.values).subspan(k * l, l), c, opt);
  return out;
}

}  // namespace ftn
