#pragma once

// Command-line front end: taps, arfit, ber, fig4|fig5|fig6, bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ftn/arfit.hpp"
#include "ftn/bench.hpp"
#include "ftn/error.hpp"
#include "ftn/harness.hpp"
#include "ftn/pulse.hpp"

#ifndef FTN_VERSION
#define FTN_VERSION "0.0.0-unknown"
#endif

namespace ftn {

inline constexpr const char* kVersion = FTN_VERSION;
inline constexpr const char* kCsvHeader = "ebn0_db,ber,bit_errors,bits,frames,seconds";

namespace cli_detail {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

// KEY=VALUE, VALUE parsed as JSON and falling back to a plain string.
inline json parse_assignments(const std::vector<std::string>& sets) {
  json j = json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
    j[key] = json::parse(val, nullptr, false);
    if (j[key].is_discarded()) j[key] = val;
  }
  return j;
}

inline void write_csv_row(std::ostream& os, const BerPoint& p) {
  os << p.ebn0_db << ',' << p.ber() << ',' << p.bit_errors << ',' << p.bits << ',' << p.frames << ',' << p.seconds
     << '\n';
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f.precision(10);
  return f;
}

inline void error_line(std::ostream& err, const char* kind, const std::string& msg) {
  err << json{{"error", kind}, {"message", msg}}.dump() << std::endl;
}

// Options shared by every Monte Carlo subcommand.
struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::vector<double> ebn0;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::size_t> min_errors, max_frames, info_bits;
  std::optional<int> iterations;
  std::optional<std::string> equalizer, rule;
  double scale = 1.0;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file overlaid on the defaults");
    app->add_option("--set", sets, "Override one config key: KEY=VALUE (VALUE is JSON or a bare string)");
    app->add_option("--ebn0", ebn0, "Eb/N0 grid in dB")->delimiter(',');
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--workers", workers, "Worker threads (results do not depend on this)");
    app->add_option("--min-errors", min_errors, "Stop a point after this many bit errors");
    app->add_option("--max-frames", max_frames, "Frame cap per point");
    app->add_option("--info-bits", info_bits, "Information bits per frame");
    app->add_option("--iterations", iterations, "Turbo iterations");
    app->add_option("--equalizer", equalizer, "ri-lmmse | i-lmmse");
    app->add_option("--rule", rule, "Extrinsic rule: recalculated | direct");
    app->add_option("--scale", scale, "Multiply the Monte Carlo budget (min errors, max frames)");
    app->add_flag("--quiet", quiet, "No progress lines on stderr");
  }

  // Layering: base -> config file -> --set -> dedicated flags -> --scale.
  void apply(ExperimentConfig& c) const {
    if (!config.empty()) apply_json(read_json_file(config), c);
    apply_json(parse_assignments(sets), c);
    if (!ebn0.empty()) c.ebn0_db = ebn0;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (min_errors) c.min_errors = *min_errors;
    if (max_frames) c.max_frames = *max_frames;
    if (info_bits) c.info_bits = *info_bits;
    if (iterations) c.iterations = *iterations;
    if (equalizer) c.equalizer = equalizer_from_string(*equalizer);
    if (rule) c.rule = rule_from_string(*rule);
    if (scale != 1.0) scale_budget(c, scale);
    c.validate();
  }
};

inline json manifest_header(const std::string& command, const std::vector<std::string>& args) {
  return json{{"version", kVersion},
              {"command", command},
              {"argv", args},
              {"seeding", "frame seed = derive_seed(seed, point_index, frame_index)"},
              {"snr_axis", "Eb/N0 in the CSV; Es/N0 per point below; N0 = Es/(rate*bits_per_symbol*10^(EbN0/10)), Es = 1"}};
}

struct Progress {
  std::ostream& err;
  bool quiet;
  std::string label;
  void operator()(const BerPoint& p) const {
    if (quiet) return;
    err << label << " Eb/N0=" << p.ebn0_db << " ber=" << p.ber() << " errors=" << p.bit_errors
        << " frames=" << p.frames << " seconds=" << p.seconds << std::endl;
  }
};

}  // namespace cli_detail

/// Entry point of the ftnsim tool. Exit codes: 0 ok, 1 runtime error,
/// 2 configuration error, 3 numerical-health failure. Errors are one JSON
/// line on `err`.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Faster-than-Nyquist turbo equalization simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // taps
  auto* taps = app.add_subcommand("taps", "Print the ISI profile of an rRC pulse packed at tau");
  PulseSpec tspec;
  double ttau = 0.5;
  std::optional<int> tlen;
  bool tjson = false;
  taps->add_option("--tau", ttau, "Packing ratio in (0,1]");
  taps->add_option("--alpha", tspec.alpha, "Roll-off");
  taps->add_option("--half-span", tspec.half_span, "Pulse truncation in symbol periods");
  taps->add_option("--oversampling", tspec.oversampling, "Quadrature points per symbol period");
  taps->add_option("--L", tlen, "One-sided tap count (default: full support)");
  taps->add_flag("--json", tjson, "Emit JSON instead of CSV");

  // arfit
  auto* arfit = app.add_subcommand("arfit", "Fit an AR model to the colored noise autocorrelation");
  PulseSpec aspec;
  double atau = 0.5, an0 = 1.0;
  int aorder = 9;
  arfit->add_option("--tau", atau, "Packing ratio in (0,1]");
  arfit->add_option("--alpha", aspec.alpha, "Roll-off");
  arfit->add_option("--half-span", aspec.half_span, "Pulse truncation in symbol periods");
  arfit->add_option("--oversampling", aspec.oversampling, "Quadrature points per symbol period");
  arfit->add_option("--order", aorder, "AR order");
  arfit->add_option("--n0", an0, "Noise spectral density");

  // ber
  auto* ber = app.add_subcommand("ber", "Run one BER sweep");
  RunFlags bflags;
  bflags.attach(ber);
  std::string bout = "-", bmanifest = "ftnsim_manifest.json";
  ber->add_option("--out", bout, "CSV destination ('-' for stdout)");
  ber->add_option("--manifest", bmanifest, "JSON run manifest destination");

  // presets
  RunFlags pflags;
  std::string pdir = ".";
  std::vector<CLI::App*> presets;
  for (const char* name : {"fig4", "fig5", "fig6"}) {
    auto* sub = app.add_subcommand(name, std::string("Run the ") + name + " preset curves");
    pflags.attach(sub);
    sub->add_option("--out-dir", pdir, "Directory for <preset>_<curve>.csv and <preset>_manifest.json");
    presets.push_back(sub);
  }

  // bench
  auto* bench = app.add_subcommand("bench", "Time the equalizers over block lengths");
  std::string beq = "both", bbout = "-";
  std::vector<std::size_t> bsizes{256, 512, 1024, 2048};
  ProbeOptions popt;
  bench->add_option("--equalizer", beq, "ri-lmmse | i-lmmse | both");
  bench->add_option("--sizes", bsizes, "Block lengths")->delimiter(',');
  bench->add_option("--constellation", popt.constellation, "Symbol alphabet of the priors");
  bench->add_option("--tau", popt.tau, "Packing ratio");
  bench->add_option("--tap-cap", popt.tap_cap, "Receiver tap cap");
  bench->add_option("--ar-order", popt.ar_order, "AR order");
  bench->add_option("--repeats", popt.repeats, "Best-of repeats per size");
  bench->add_option("--out", bbout, "CSV destination ('-' for stdout)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }

    out.precision(10);

    if (*taps) {
      if (!(ttau > 0.0 && ttau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
      tspec.validate();
      const int L = tlen ? *tlen : support_half_length(tspec, ttau);
      if (L < 0) throw ConfigError("--L must be >= 0");
      const auto p = isi_taps(tspec, ttau, L);
      if (tjson) {
        out << json(p).dump(2) << '\n';
      } else {
        out << "k,h\n";
        for (int k = -p.L; k <= p.L; ++k) out << k << ',' << p.h(k) << '\n';
      }
      return 0;
    }

    if (*arfit) {
      if (!(atau > 0.0 && atau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
      aspec.validate();
      const auto prof = isi_taps(aspec, atau, support_half_length(aspec, atau));
      const auto gamma = noise_autocorr(prof, an0).lags;
      const auto model = fit_yule_walker(std::span<const double>(gamma), aorder);
      const auto implied = ar_autocorrelation(model, static_cast<int>(gamma.size()) - 1);
      // How well the AR model reproduces the lags it was not fitted to.
      double beyond = 0.0;
      for (std::size_t k = static_cast<std::size_t>(aorder) + 1; k < gamma.size(); ++k)
        beyond = std::max(beyond, std::abs(implied[k] - gamma[k]) / gamma[0]);
      out << json{{"model", model}, {"lags", gamma}, {"implied_lags", implied}, {"max_mismatch_beyond_order", beyond}}.dump(2)
          << '\n';
      return 0;
    }

    if (*ber) {
      ExperimentConfig cfg;
      bflags.apply(cfg);
      const auto pts = run_experiment(cfg, Progress{err, bflags.quiet, "ber"});
      std::ofstream file;
      std::ostream* csv = &out;
      if (bout != "-") {
        file = open_out(bout);
        csv = &file;
      }
      *csv << kCsvHeader << '\n';
      for (const auto& p : pts) write_csv_row(*csv, p);
      auto man = manifest_header("ber", args);
      man["config"] = cfg;
      man["points"] = pts;
      open_out(bmanifest) << man.dump(2) << '\n';
      return 0;
    }

    for (auto* sub : presets) {
      if (!*sub) continue;
      const std::string name = sub->get_name();
      auto preset = preset_by_name(name);
      auto man = manifest_header(name, args);
      man["curves"] = json::array();
      const std::filesystem::path dir(pdir);
      for (auto& curve : preset.curves) {
        pflags.apply(curve.config);
        const auto pts = run_experiment(curve.config, Progress{err, pflags.quiet, name + " " + curve.name});
        auto f = open_out(dir / (name + "_" + curve.name + ".csv"));
        f << kCsvHeader << '\n';
        for (const auto& p : pts) write_csv_row(f, p);
        man["curves"].push_back(json{{"name", curve.name}, {"config", curve.config}, {"points", pts}});
      }
      open_out(dir / (name + "_manifest.json")) << man.dump(2) << '\n';
      return 0;
    }

    if (*bench) {
      std::vector<EqualizerKind> kinds;
      if (beq == "both") kinds = {EqualizerKind::RiLmmse, EqualizerKind::ILmmse};
      else kinds = {equalizer_from_string(beq)};
      std::ofstream file;
      std::ostream* csv = &out;
      if (bbout != "-") {
        file = open_out(bbout);
        csv = &file;
      }
      *csv << "N,equalizer,seconds\n";
      for (auto k : kinds) {
        const auto r = complexity_probe(k, bsizes, popt);
        r.write_csv(*csv, false);
        err << json{{"equalizer", to_string(k)}, {"loglog_slope", r.slope}}.dump() << std::endl;
      }
      return 0;
    }
    return 0;
  } catch (const ConfigError& e) {
    error_line(err, "config", e.what());
    return 2;
  } catch (const NumericalHealthError& e) {
    error_line(err, "numerical_health", e.what());
    return 3;
  } catch (const std::exception& e) {
    error_line(err, "runtime", e.what());
    return 1;
  }
}

}  // namespace ftn
