#pragma once

// Turbo receiver and Monte Carlo BER experiments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ftn/arfit.hpp"
#include "ftn/channel.hpp"
#include "ftn/coding.hpp"
#include "ftn/constellation.hpp"
#include "ftn/equalize.hpp"
#include "ftn/error.hpp"
#include "ftn/pulse.hpp"
#include "ftn/rng.hpp"
#include "ftn/softmap.hpp"

namespace ftn {

enum class EqualizerKind { RiLmmse, ILmmse };
enum class ExtrinsicRule { Recalculated, Direct };

inline std::string to_string(EqualizerKind k) { return k == EqualizerKind::RiLmmse ? "ri-lmmse" : "i-lmmse"; }
inline std::string to_string(ExtrinsicRule r) { return r == ExtrinsicRule::Recalculated ? "recalculated" : "direct"; }

inline EqualizerKind equalizer_from_string(const std::string& s) {
  if (s == "ri-lmmse") return EqualizerKind::RiLmmse;
  if (s == "i-lmmse") return EqualizerKind::ILmmse;
  throw ConfigError("unknown equalizer '" + s + "' (ri-lmmse|i-lmmse)");
}

inline ExtrinsicRule rule_from_string(const std::string& s) {
  if (s == "recalculated") return ExtrinsicRule::Recalculated;
  if (s == "direct") return ExtrinsicRule::Direct;
  throw ConfigError("unknown extrinsic rule '" + s + "' (recalculated|direct)");
}

inline Readout readout_from_string(const std::string& s) {
  if (s == "block") return Readout::Block;
  if (s == "center") return Readout::Center;
  throw ConfigError("unknown readout '" + s + "' (block|center)");
}

inline std::string to_string(Readout r) { return r == Readout::Block ? "block" : "center"; }

struct ExperimentConfig {
  std::string constellation = "BPSK";
  double tau = 0.5;
  double alpha = 0.3;
  int half_span = 8;
  int oversampling = 16;
  int tap_cap = 15;
  int ar_order = 9;
  std::string code = "7,5";  // "none" for uncoded transmission
  bool use_interleaver = true;
  std::uint64_t interleaver_seed = 12345;
  std::size_t info_bits = 3000;
  int iterations = 15;
  ScalingPolicy scaling{0.5, 0.5, {}, {}};
  EqualizerKind equalizer = EqualizerKind::RiLmmse;
  Readout readout = Readout::Block;
  ExtrinsicRule rule = ExtrinsicRule::Recalculated;
  std::vector<double> ebn0_db{2.0, 3.0, 4.0};
  std::size_t min_errors = 200;
  std::size_t max_frames = 2000;
  double stop_ber = 0.0;  // end the sweep once a point falls below this (0 = off)
  std::uint64_t seed = 1;
  int workers = 1;
  std::vector<double> static_taps;  // causal static ISI pattern; implies white noise
  NoiseMode noise_mode = NoiseMode::Exact;
  bool max_log = false;
  bool model_residual_isi = true;  // load the receiver noise with the power of the capped-off taps
  double llr_cap = 30.0;
  double health_threshold = 1e-3;  // max fraction of floored variances

  bool coded() const { return code != "none"; }

  PulseSpec pulse() const { return PulseSpec{alpha, half_span, oversampling}; }

  double code_rate() const {
    if (!coded()) return 1.0;
    return 1.0 / static_cast<double>(ConvCode::parse(code).outputs());
  }

  void validate() const {
    make_constellation(constellation);
    if (static_taps.empty()) {
      pulse().validate();
      if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
    }
    if (tap_cap < 1) throw ConfigError("tap_cap must be >= 1");
    if (ar_order < 0) throw ConfigError("ar_order must be >= 0");
    if (coded()) ConvCode::parse(code).validate();
    if (info_bits == 0) throw ConfigError("info_bits must be positive");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    scaling.validate();
    if (ebn0_db.empty()) throw ConfigError("ebn0_db must list at least one SNR point");
    if (max_frames == 0) throw ConfigError("max_frames must be positive");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(llr_cap > 0.0)) throw ConfigError("llr_cap must be positive");
    if (!(health_threshold >= 0.0)) throw ConfigError("health_threshold must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"constellation", c.constellation},
                     {"tau", c.tau},
                     {"alpha", c.alpha},
                     {"half_span", c.half_span},
                     {"oversampling", c.oversampling},
                     {"tap_cap", c.tap_cap},
                     {"ar_order", c.ar_order},
                     {"code", c.code},
                     {"use_interleaver", c.use_interleaver},
                     {"interleaver_seed", c.interleaver_seed},
                     {"info_bits", c.info_bits},
                     {"iterations", c.iterations},
                     {"eq_scale", c.scaling.eq_out_scale},
                     {"dec_scale", c.scaling.dec_out_scale},
                     {"eq_schedule", c.scaling.eq_schedule},
                     {"dec_schedule", c.scaling.dec_schedule},
                     {"equalizer", to_string(c.equalizer)},
                     {"readout", to_string(c.readout)},
                     {"extrinsic_rule", to_string(c.rule)},
                     {"ebn0_db", c.ebn0_db},
                     {"min_errors", c.min_errors},
                     {"max_frames", c.max_frames},
                     {"stop_ber", c.stop_ber},
                     {"seed", c.seed},
                     {"workers", c.workers},
                     {"static_taps", c.static_taps},
                     {"noise_mode", to_string(c.noise_mode)},
                     {"max_log", c.max_log},
                     {"model_residual_isi", c.model_residual_isi},
                     {"llr_cap", c.llr_cap},
                     {"health_threshold", c.health_threshold}};
}

/// Overlays keys present in `j` onto `c`. Unknown keys and wrong types are
/// configuration errors.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "constellation", "tau",        "alpha",        "half_span",   "oversampling",   "tap_cap",
      "ar_order",      "code",       "use_interleaver", "interleaver_seed", "info_bits", "iterations",
      "eq_scale",      "dec_scale",  "eq_schedule",  "dec_schedule", "equalizer",     "readout",
      "extrinsic_rule", "ebn0_db",   "min_errors",   "max_frames",  "stop_ber",       "seed",
      "workers",       "static_taps", "noise_mode",  "max_log",     "llr_cap",        "health_threshold",
      "model_residual_isi"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("constellation", c.constellation);
    get("tau", c.tau);
    get("alpha", c.alpha);
    get("half_span", c.half_span);
    get("oversampling", c.oversampling);
    get("tap_cap", c.tap_cap);
    get("ar_order", c.ar_order);
    get("code", c.code);
    get("use_interleaver", c.use_interleaver);
    get("interleaver_seed", c.interleaver_seed);
    get("info_bits", c.info_bits);
    get("iterations", c.iterations);
    get("eq_scale", c.scaling.eq_out_scale);
    get("dec_scale", c.scaling.dec_out_scale);
    get("eq_schedule", c.scaling.eq_schedule);
    get("dec_schedule", c.scaling.dec_schedule);
    get("ebn0_db", c.ebn0_db);
    get("min_errors", c.min_errors);
    get("max_frames", c.max_frames);
    get("stop_ber", c.stop_ber);
    get("seed", c.seed);
    get("workers", c.workers);
    get("static_taps", c.static_taps);
    get("max_log", c.max_log);
    get("model_residual_isi", c.model_residual_isi);
    get("llr_cap", c.llr_cap);
    get("health_threshold", c.health_threshold);
    if (j.contains("equalizer")) c.equalizer = equalizer_from_string(j.at("equalizer").get<std::string>());
    if (j.contains("readout")) c.readout = readout_from_string(j.at("readout").get<std::string>());
    if (j.contains("extrinsic_rule")) c.rule = rule_from_string(j.at("extrinsic_rule").get<std::string>());
    if (j.contains("noise_mode")) c.noise_mode = noise_mode_from_string(j.at("noise_mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  apply_json(j, c);
}

struct BerPoint {
  double ebn0_db = 0.0;
  double esn0_db = 0.0;
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
  std::size_t frames = 0;
  std::size_t floored = 0;
  std::size_t ridge = 0;
  std::size_t equalized_symbols = 0;
  double seconds = 0.0;
  std::vector<std::size_t> iteration_errors;  // errors after each turbo iteration

  double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
  double floored_fraction() const {
    return equalized_symbols ? static_cast<double>(floored) / static_cast<double>(equalized_symbols) : 0.0;
  }
};

inline void to_json(nlohmann::json& j, const BerPoint& p) {
  j = nlohmann::json{{"ebn0_db", p.ebn0_db},       {"esn0_db", p.esn0_db},   {"ber", p.ber()},
                     {"bit_errors", p.bit_errors}, {"bits", p.bits},         {"frames", p.frames},
                     {"floored", p.floored},       {"ridge", p.ridge},       {"equalized_symbols", p.equalized_symbols},
                     {"seconds", p.seconds},       {"iteration_errors", p.iteration_errors}};
}

/// N0 = Es / (rate * bits_per_symbol * 10^(EbN0/10)).
inline double n0_from_ebn0(double ebn0_db, double rate, int bits_per_symbol, double es = 1.0) {
  return es / (rate * bits_per_symbol * std::pow(10.0, ebn0_db / 10.0));
}

inline double esn0_db_from_ebn0(double ebn0_db, double rate, int bits_per_symbol) {
  return ebn0_db + 10.0 * std::log10(rate * bits_per_symbol);
}

/// Everything the transmitter, channel and receiver need at one SNR point.
struct LinkModels {
  Constellation constellation;
  std::optional<ConvCode> code;
  Interleaver interleaver;
  std::size_t coded_bits = 0;
  std::size_t pad_bits = 0;
  std::size_t symbols = 0;
  IsiProfile channel_profile;  // true channel, full support
  IsiProfile receiver_profile; // capped
  ArModel ar;                  // receiver noise model at this N0
  std::vector<double> noise_lags;  // receiver noise autocorrelation at this N0
  double residual_isi = 0.0;       // power of the channel taps beyond the cap
  double n0 = 1.0;
  std::shared_ptr<const FtnChannel> channel;
};

/// Builds the link at the given Eb/N0.
inline LinkModels make_link(const ExperimentConfig& cfg, double ebn0_db) {
  LinkModels m;
  m.constellation = make_constellation(cfg.constellation);
  const auto l = static_cast<std::size_t>(m.constellation.bits_per_symbol);
  if (cfg.coded()) {
    m.code = ConvCode::parse(cfg.code);
    m.coded_bits = m.code->coded_length(cfg.info_bits);
  } else {
    m.coded_bits = cfg.info_bits;
  }
  m.interleaver = cfg.use_interleaver && cfg.coded() ? Interleaver::random(m.coded_bits, cfg.interleaver_seed)
                                                     : Interleaver::identity(m.coded_bits);
  m.symbols = (m.coded_bits + l - 1) / l;
  m.pad_bits = m.symbols * l - m.coded_bits;
  m.n0 = n0_from_ebn0(ebn0_db, cfg.code_rate(), m.constellation.bits_per_symbol);

  NoiseSpec noise;
  if (!cfg.static_taps.empty()) {
    m.channel_profile = IsiProfile::from_causal(cfg.static_taps);
    m.receiver_profile = m.channel_profile.capped(cfg.tap_cap);
    noise.mode = NoiseMode::White;
  } else {
    const auto spec = cfg.pulse();
    m.channel_profile = isi_taps(spec, cfg.tau, support_half_length(spec, cfg.tau));
    m.receiver_profile = m.channel_profile.capped(cfg.tap_cap);
    noise.mode = cfg.noise_mode;
    if (cfg.noise_mode == NoiseMode::Ar) {
      const auto unit = noise_autocorr(m.channel_profile, 1.0);
      if (static_cast<std::size_t>(cfg.ar_order) + 1 > unit.lags.size())
        throw ConfigError("ar_order exceeds the available noise autocorrelation lags");
      noise.ar = fit_yule_walker(std::span<const double>(unit.lags).first(static_cast<std::size_t>(cfg.ar_order) + 1));
    }
  }
  m.channel = std::make_shared<const FtnChannel>(m.channel_profile, noise);

  // Receiver noise model: true noise plus the ISI of the taps beyond the
  // cap, treated as white noise of the same power.
  m.noise_lags = m.channel->noise_autocorr_at(m.n0).lags;
  m.residual_isi = 0.0;
  if (cfg.model_residual_isi)
    for (int k = m.receiver_profile.L + 1; k <= m.channel_profile.L; ++k)
      m.residual_isi += m.channel_profile.h(k) * m.channel_profile.h(k) + m.channel_profile.h(-k) * m.channel_profile.h(-k);
  m.residual_isi *= m.constellation.es;
  m.noise_lags[0] += m.residual_isi;
  if (noise.mode == NoiseMode::White) {
    m.ar = ArModel{0, {}, m.noise_lags[0]};
  } else {
    if (static_cast<std::size_t>(cfg.ar_order) + 1 > m.noise_lags.size())
      throw ConfigError("ar_order exceeds the available noise autocorrelation lags");
    m.ar = fit_yule_walker(std::span<const double>(m.noise_lags).first(static_cast<std::size_t>(cfg.ar_order) + 1));
  }
  return m;
}

struct TurboResult {
  Bits decoded;                      // info bits after the last iteration
  std::vector<Bits> per_iteration;   // hard info decisions after each iteration
  std::vector<LlrFrame> llr_trace;   // decoder info posteriors per iteration
  EqualizerStats stats;
};

/// Runs the equalizer/decoder loop on one received block.
inline TurboResult turbo_receive(const ReceivedBlock& block, const ExperimentConfig& cfg, const LinkModels& m,
                                 bool keep_llrs = false) {
  if (block.size() != m.symbols)
    throw LengthMismatch("turbo_receive: block has " + std::to_string(block.size()) + " samples, expected " +
                         std::to_string(m.symbols));
  const auto& c = m.constellation;
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  const std::size_t nbits = m.symbols * l;
  SoftmapOptions sopt;
  sopt.llr_cap = cfg.llr_cap;
  EqualizerOptions eopt;
  eopt.es = c.es;

  RiLmmseOptions ropt;
  ropt.es = c.es;
  ropt.readout = cfg.readout;
  std::optional<RiLmmseEqualizer> ri;
  std::optional<IlmmseEqualizer> il;
  if (cfg.equalizer == EqualizerKind::RiLmmse) ri.emplace(m.receiver_profile, m.ar, ropt);
  else il.emplace(BlockModel{m.receiver_profile, m.noise_lags}, eopt);

  std::optional<AppDecoder> dec;
  if (m.code) dec.emplace(*m.code, cfg.max_log, cfg.llr_cap);

  TurboResult res;
  // Interleaved decoder extrinsic, padded to whole symbols; pad bits are known zeros.
  LlrFrame apriori(nbits, 0.0);
  for (std::size_t i = m.coded_bits; i < nbits; ++i) apriori[i] = cfg.llr_cap;
  std::vector<double> eq_ext(nbits), tmp(l);
  const int iterations = m.code ? cfg.iterations : 1;

  for (int it = 0; it < iterations; ++it) {
    const auto priors = frame_priors(apriori, c, sopt);
    const auto post = ri ? ri->equalize(block.samples, priors, &res.stats) : il->equalize(block.samples, priors, &res.stats);
    const double eq_scale = cfg.scaling.eq_at(static_cast<std::size_t>(it));
    for (std::size_t k = 0; k < m.symbols; ++k) {
      std::vector<double> e;
      if (!m.code) {
        e = intrinsic_llr(post[k], c, sopt);
      } else if (cfg.rule == ExtrinsicRule::Recalculated) {
        e = extrinsic_llr(post[k], priors[k], c, eq_scale, sopt);
      } else {
        e = extrinsic_llr_direct(post[k], std::span<const double>(apriori.values).subspan(k * l, l), c, eq_scale, sopt);
      }
      std::copy(e.begin(), e.end(), eq_ext.begin() + static_cast<std::ptrdiff_t>(k * l));
    }
    const std::span<const double> coded_part(eq_ext.data(), m.coded_bits);

    Bits decision(cfg.info_bits);
    if (!m.code) {
      for (std::size_t i = 0; i < cfg.info_bits; ++i) decision[i] = coded_part[i] < 0.0 ? 1 : 0;
      if (keep_llrs) res.llr_trace.emplace_back(std::vector<double>(coded_part.begin(), coded_part.end()));
    } else {
      const auto deint = m.interleaver.deinterleave<double>(coded_part);
      auto out = dec->decode(deint);
      for (std::size_t i = 0; i < cfg.info_bits; ++i) decision[i] = out.info_posterior[i] < 0.0 ? 1 : 0;
      if (keep_llrs) res.llr_trace.emplace_back(out.info_posterior);
      out.extrinsic.scale(cfg.scaling.dec_at(static_cast<std::size_t>(it))).clip(cfg.llr_cap);
      const auto inter = m.interleaver.interleave<double>(out.extrinsic.values);
      std::copy(inter.begin(), inter.end(), apriori.values.begin());
    }
    res.per_iteration.push_back(std::move(decision));
  }
  res.decoded = res.per_iteration.back();
  return res;
}

/// Transmitter side of one frame: info bits and the received block.
struct FrameDraw {
  Bits info;
  ReceivedBlock block;
};

inline FrameDraw draw_frame(const ExperimentConfig& cfg, const LinkModels& m, Rng& rng) {
  FrameDraw f;
  f.info.resize(cfg.info_bits);
  for (auto& b : f.info) b = static_cast<std::uint8_t>(rng() >> 63);
  Bits coded = m.code ? conv_encode(f.info, *m.code) : f.info;
  Bits tx = m.interleaver.interleave<std::uint8_t>(coded);
  tx.resize(coded.size() + m.pad_bits, 0);
  const auto symbols = modulate(tx, m.constellation);
  f.block = m.channel->simulate(symbols, m.n0, rng);
  return f;
}

struct FrameOutcome {
  std::vector<std::size_t> iteration_errors;
  EqualizerStats stats;
};

inline FrameOutcome simulate_frame(const ExperimentConfig& cfg, const LinkModels& m, std::uint64_t frame_seed) {
  Rng rng(frame_seed);
  const auto f = draw_frame(cfg, m, rng);
  const auto r = turbo_receive(f.block, cfg, m);
  FrameOutcome o;
  o.stats = r.stats;
  for (const auto& d : r.per_iteration) {
    std::size_t e = 0;
    for (std::size_t i = 0; i < d.size(); ++i) e += d[i] != f.info[i];
    o.iteration_errors.push_back(e);
  }
  return o;
}

/// Seed of frame `frame` at SNR point `point`; independent of worker count.
inline std::uint64_t frame_seed(const ExperimentConfig& cfg, std::size_t point, std::size_t frame) {
  return derive_seed(cfg.seed, point, frame);
}

inline BerPoint run_point(const ExperimentConfig& cfg, std::size_t point_index) {
  const double ebn0 = cfg.ebn0_db[point_index];
  const auto t0 = std::chrono::steady_clock::now();
  const LinkModels m = make_link(cfg, ebn0);
  BerPoint pt;
  pt.ebn0_db = ebn0;
  pt.esn0_db = esn0_db_from_ebn0(ebn0, cfg.code_rate(), m.constellation.bits_per_symbol);
  const int iterations = m.code ? cfg.iterations : 1;
  pt.iteration_errors.assign(static_cast<std::size_t>(iterations), 0);

  const auto batch = static_cast<std::size_t>(cfg.workers);
  std::vector<FrameOutcome> outcomes(batch);
  std::size_t next = 0;
  bool done = false;
  while (!done && next < cfg.max_frames) {
    const std::size_t count = std::min(batch, cfg.max_frames - next);
    if (count == 1) {
      outcomes[0] = simulate_frame(cfg, m, frame_seed(cfg, point_index, next));
    } else {
      std::vector<std::exception_ptr> errs(count);
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < count; ++w)
        pool.emplace_back([&, w] {
          try {
            outcomes[w] = simulate_frame(cfg, m, frame_seed(cfg, point_index, next + w));
          } catch (...) {
            errs[w] = std::current_exception();
          }
        });
      pool.clear();
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    }
    // Reduce in frame order so the stopping point does not depend on the batch size.
    for (std::size_t w = 0; w < count && !done; ++w) {
      const auto& o = outcomes[w];
      for (std::size_t i = 0; i < o.iteration_errors.size(); ++i) pt.iteration_errors[i] += o.iteration_errors[i];
      pt.bit_errors += o.iteration_errors.back();
      pt.bits += cfg.info_bits;
      pt.frames += 1;
      pt.floored += o.stats.floored;
      pt.ridge += o.stats.ridge;
      pt.equalized_symbols += o.stats.symbols;
      if (cfg.min_errors > 0 && pt.bit_errors >= cfg.min_errors) done = true;
    }
    next += count;
  }
  pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return pt;
}

inline void check_health(const ExperimentConfig& cfg, const BerPoint& pt) {
  if (pt.floored_fraction() > cfg.health_threshold)
    throw NumericalHealthError("floored-variance fraction " + std::to_string(pt.floored_fraction()) + " at Eb/N0 " +
                               std::to_string(pt.ebn0_db) + " dB exceeds " + std::to_string(cfg.health_threshold));
}

/// Sweeps the SNR grid. `on_point` (optional) sees each point as it finishes.
template <class Callback>
std::vector<BerPoint> run_experiment(const ExperimentConfig& cfg, Callback&& on_point) {
  cfg.validate();
  std::vector<BerPoint> out;
  for (std::size_t i = 0; i < cfg.ebn0_db.size(); ++i) {
    out.push_back(run_point(cfg, i));
    on_point(out.back());
    check_health(cfg, out.back());
    if (cfg.stop_ber > 0.0 && out.back().ber() < cfg.stop_ber) break;
  }
  return out;
}

inline std::vector<BerPoint> run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, [](const BerPoint&) {});
}

struct Curve {
  std::string name;
  ExperimentConfig config;
};

struct Preset {
  std::string name;
  std::vector<Curve> curves;
};

/// 64-QAM over the static causal channel [0.408 0 0 0 0.816 0.408], both
/// extrinsic rules on common random numbers.
inline ExperimentConfig fig4_config() {
  ExperimentConfig c;
  c.constellation = "64QAM";
  c.static_taps = {0.408, 0.0, 0.0, 0.0, 0.816, 0.408};
  c.tap_cap = 11;
  c.ar_order = 0;
  c.noise_mode = NoiseMode::White;
  c.code = "133,171";
  c.iterations = 5;
  c.info_bits = 3000;
  c.equalizer = EqualizerKind::RiLmmse;
  c.scaling = ScalingPolicy{0.5, 1.0, {}, {}};
  c.ebn0_db = {9.0, 10.0, 11.0, 12.0, 13.0};
  c.min_errors = 200;
  c.max_frames = 400;
  return c;
}

inline Preset fig4_preset() {
  Preset p{"fig4", {}};
  auto rec = fig4_config();
  rec.rule = ExtrinsicRule::Recalculated;
  auto dir = rec;
  dir.rule = ExtrinsicRule::Direct;
  dir.scaling.eq_out_scale = 1.0;
  p.curves = {{"recalculated", rec}, {"direct", dir}};
  return p;
}

/// Both rules of the static-ISI comparison on identical frames.
inline std::pair<std::vector<BerPoint>, std::vector<BerPoint>> run_fig4_baseline(const ExperimentConfig& cfg) {
  auto rec = cfg;
  rec.rule = ExtrinsicRule::Recalculated;
  auto dir = cfg;
  dir.rule = ExtrinsicRule::Direct;
  if (rec.static_taps.empty()) throw ConfigError("fig4 baseline requires static_taps");
  return {run_experiment(rec), run_experiment(dir)};
}

inline Preset fig5_preset() {
  ExperimentConfig ftn;
  ftn.constellation = "BPSK";
  ftn.tau = 0.5;
  ftn.alpha = 0.3;
  ftn.tap_cap = 15;
  ftn.ar_order = 9;
  ftn.code = "7,5";
  ftn.iterations = 15;
  ftn.scaling = ScalingPolicy{0.5, 0.5, {}, {}};
  ftn.info_bits = 3000;
  ftn.ebn0_db = {2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  ftn.min_errors = 200;
  ftn.max_frames = 400;
  auto ref = ftn;
  ref.tau = 1.0;
  ref.ebn0_db = {2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  return Preset{"fig5", {{"tau0.5", ftn}, {"tau1", ref}}};
}

inline Preset fig6_preset() {
  ExperimentConfig qam;
  qam.constellation = "16QAM";
  qam.tau = 0.67;
  qam.alpha = 0.3;
  qam.tap_cap = 25;
  qam.ar_order = 9;
  qam.code = "7,5";
  qam.iterations = 15;
  qam.scaling = ScalingPolicy{0.5, 0.6, {}, {}};
  qam.info_bits = 3000;
  qam.ebn0_db = {5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
  qam.min_errors = 200;
  qam.max_frames = 200;
  auto ref = qam;
  ref.tau = 1.0;
  // Same information rate without FTN: coded 64-QAM at tau = 1.
  auto q64 = qam;
  q64.constellation = "64QAM";
  q64.tau = 1.0;
  q64.ebn0_db = {8.0, 9.0, 10.0, 11.0, 12.0, 13.0};
  return Preset{"fig6", {{"16qam_tau0.67", qam}, {"16qam_tau1", ref}, {"64qam_tau1", q64}}};
}

inline Preset preset_by_name(const std::string& name) {
  if (name == "fig4") return fig4_preset();
  if (name == "fig5") return fig5_preset();
  if (name == "fig6") return fig6_preset();
  throw ConfigError("unknown preset '" + name + "'");
}

/// Scales the Monte Carlo budget (min_errors and max_frames), keeping both >= 1.
inline void scale_budget(ExperimentConfig& c, double scale) {
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  c.min_errors = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(c.min_errors) * scale)));
  c.max_frames = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(c.max_frames) * scale)));
}

/// Eb/N0 at which log10(BER) crosses log10(target), by linear interpolation
/// between the bracketing points; empty when the curve never crosses.
inline std::optional<double> snr_at_ber(const std::vector<BerPoint>& pts, double target) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double a = pts[i - 1].ber(), b = pts[i].ber();
    if (a >= target && b < target) {
      if (b <= 0.0) return pts[i].ebn0_db;
      const double la = std::log10(a), lb = std::log10(b), lt = std::log10(target);
      return pts[i - 1].ebn0_db + (lt - la) / (lb - la) * (pts[i].ebn0_db - pts[i - 1].ebn0_db);
    }
  }
  return std::nullopt;
}

}  // namespace ftn
