#pragma once

// Wall-clock scaling of the two equalizers with block length.

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ftn/arfit.hpp"
#include "ftn/channel.hpp"
#include "ftn/constellation.hpp"
#include "ftn/equalize.hpp"
#include "ftn/harness.hpp"
#include "ftn/pulse.hpp"
#include "ftn/rng.hpp"
#include "ftn/softmap.hpp"

namespace ftn {

struct ProbeOptions {
  std::string constellation = "BPSK";
  double tau = 0.5;
  double alpha = 0.3;
  int tap_cap = 15;
  int ar_order = 9;
  double esn0_db = 6.0;
  int repeats = 3;  // best-of, to suppress scheduler noise
  std::uint64_t seed = 7;
};

struct ProbeRow {
  std::size_t n = 0;
  EqualizerKind equalizer = EqualizerKind::RiLmmse;
  double seconds = 0.0;
};

struct ProbeResult {
  std::vector<ProbeRow> rows;
  double slope = 0.0;  // least-squares slope of log(seconds) on log(N)

  void write_csv(std::ostream& os, bool header = true) const {
    if (header) os << "N,equalizer,seconds\n";
    for (const auto& r : rows) os << r.n << ',' << to_string(r.equalizer) << ',' << r.seconds << '\n';
  }
};

inline double loglog_slope(const std::vector<ProbeRow>& rows) {
  if (rows.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.n)), y = std::log(std::max(r.seconds, 1e-12));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Times one equalizer call per block length on a simulated FTN block with
/// random soft priors. The setup (taps, AR fit, noise) is excluded.
inline ProbeResult complexity_probe(EqualizerKind kind, const std::vector<std::size_t>& sizes, const ProbeOptions& opt = {}) {
  if (sizes.empty()) throw ConfigError("complexity_probe: no block sizes");
  if (opt.repeats < 1) throw ConfigError("complexity_probe: repeats must be >= 1");
  const auto c = make_constellation(opt.constellation);
  const PulseSpec spec{opt.alpha, 8, 16};
  const auto full = isi_taps(spec, opt.tau, support_half_length(spec, opt.tau));
  const auto capped = full.capped(opt.tap_cap);
  const double n0 = c.es / std::pow(10.0, opt.esn0_db / 10.0);
  const FtnChannel channel(full, NoiseSpec{});
  const auto lags = channel.noise_autocorr_at(n0).lags;
  const auto ar = fit_yule_walker(std::span<const double>(lags).first(static_cast<std::size_t>(opt.ar_order) + 1));

  ProbeResult res;
  for (std::size_t n : sizes) {
    Rng rng(derive_seed(opt.seed, n));
    const auto l = static_cast<std::size_t>(c.bits_per_symbol);
    Bits bits(n * l);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    const auto x = modulate(bits, c);
    const auto block = channel.simulate(x, n0, rng);
    std::vector<double> llrs(n * l);
    for (std::size_t i = 0; i < llrs.size(); ++i) llrs[i] = (bits[i] ? -1.0 : 1.0) * 2.0 * std::abs(complex_gaussian(rng, 1.0));
    const auto priors = frame_priors(LlrFrame(llrs), c);

    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < opt.repeats; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      if (kind == EqualizerKind::RiLmmse) {
        RiLmmseOptions ro;
        ro.es = c.es;
        RiLmmseEqualizer eq(capped, ar, ro);
        (void)eq.equalize(block.samples, priors);
      } else {
        EqualizerOptions eo;
        eo.es = c.es;
        IlmmseEqualizer eq(BlockModel{capped, lags}, eo);
        (void)eq.equalize(block.samples, priors);
      }
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    res.rows.push_back({n, kind, best});
  }
  res.slope = loglog_slope(res.rows);
  return res;
}

}  // namespace ftn
