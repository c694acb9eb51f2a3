// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status
// is nonzero when any criterion fails. Pass criterion numbers as arguments
// to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "ftn/ftn.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace ftn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string curve_text(const std::vector<BerPoint>& pts) {
  std::string s;
  for (const auto& p : pts) s += fmt(" %.2f:%.3g(%zu/%zu)", p.ebn0_db, p.ber(), p.bit_errors, p.bits);
  return s;
}

Outcome ilmmse_oracle() {
  std::mt19937_64 g(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 1 + trial % 3;
    const int n = 8 + trial % 25;
    const auto isi = testgen::random_profile(g, L);
    const auto lags = testgen::random_colored_lags(g, 1 + trial % 4, 0.1 + 0.1 * (trial % 7));
    const auto inst = testgen::random_instance(g, isi, n, lags);
    const auto post = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    const auto ref = testgen::dense(isi, lags, inst);
    const double scale = testgen::max_abs_mean(ref);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      worst = std::max(worst, oracle::rel_err(post[k].mean, ref.mean(i), scale));
      worst = std::max(worst, oracle::rel_err(post[k].variance, ref.variance(i)));
    }
  }
  return {worst <= 1e-9, fmt("100 instances, max relative error %.2e", worst)};
}

Outcome rilmmse_vs_ilmmse() {
  std::mt19937_64 g(202);
  const int n = 64;
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int L = trial % 4;
    const int p = (trial / 4) % 4;
    const auto isi = testgen::random_profile(g, L);
    const auto ar = testgen::random_ar(g, p, 0.05 + 0.05 * (trial % 6));
    const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
    const auto inst = testgen::random_instance(g, isi, n, lags);
    const auto ri = rilmmse_equalize(inst.r, isi, ar, inst.priors);
    const auto il = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    double scale = 0.0;
    for (const auto& v : il) scale = std::max(scale, std::abs(v.mean));
    // Interior symbols: away from the block edges by the ISI memory.
    for (int i = L; i < n - L; ++i) {
      const auto k = static_cast<std::size_t>(i);
      worst = std::max(worst, oracle::rel_err(ri[k].mean, il[k].mean, scale));
      worst = std::max(worst, oracle::rel_err(ri[k].variance, il[k].variance));
    }
  }
  return {worst <= 1e-6, fmt("25 instances, N=64, max relative error %.2e", worst)};
}

Outcome yule_walker() {
  const PulseSpec spec{0.3, 8, 16};
  const auto h = isi_taps(spec, 0.5, support_half_length(spec, 0.5));
  double worst = 0.0;
  for (double n0 : {1.0, 0.1, 0.01}) {
    const auto gamma = noise_autocorr(h, n0).lags;
    const auto m = fit_yule_walker(std::span<const double>(gamma), 9);
    const auto implied = ar_autocorrelation(m, 9);
    for (std::size_t k = 0; k <= 9; ++k) worst = std::max(worst, oracle::rel_err(implied[k], gamma[k], gamma[0]));
  }
  return {worst <= 1e-9, fmt("p=9, lags 0..9, max relative error %.2e", worst)};
}

Outcome isi_profile() {
  const PulseSpec spec{0.3, 8, 16};
  bool ok = true;
  std::string d;
  for (double tau : {0.5, 0.67, 0.8, 1.0}) {
    const auto p = isi_taps(spec, tau, support_half_length(spec, tau));
    const double h0_err = std::abs(p.h(0) - 1.0);
    bool sym = true;
    for (int k = 1; k <= p.L; ++k) sym = sym && p.h(k) == p.h(-k);
    std::vector<double> lags(static_cast<std::size_t>(p.L) + 1);
    for (int k = 0; k <= p.L; ++k) lags[static_cast<std::size_t>(k)] = p.h(k);
    const Eigen::MatrixXd t = oracle::toeplitz(lags, 256);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    ok = ok && h0_err <= 1e-6 && sym && min_eig >= -1e-9;
    d += fmt(" tau=%.2f |h0-1|=%.1e sym=%d min_eig=%.1e;", tau, h0_err, sym, min_eig);
  }
  // Nyquist spacing: off-center taps within the receiver's 7-tap window.
  const auto ny = isi_taps(spec, 1.0, 7);
  double off = 0.0;
  for (int k = 1; k <= 7; ++k) off = std::max({off, std::abs(ny.h(k)), std::abs(ny.h(-k))});
  const auto full = isi_taps(spec, 1.0, support_half_length(spec, 1.0));
  double off_full = 0.0;
  for (int k = 1; k <= full.L; ++k) off_full = std::max(off_full, std::abs(full.h(k)));
  ok = ok && off < 1e-3;
  d += fmt(" tau=1 max|h(k!=0)| over |k|<=7: %.2e (full support %.2e)", off, off_full);
  return {ok, d};
}

Outcome app_exactness() {
  const auto code = ConvCode::parse("7,5");
  const int k = 12;
  std::mt19937_64 g(303);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int frame = 0; frame < 50; ++frame) {
    std::vector<double> llr(code.coded_length(k));
    for (auto& v : llr) v = 2.0 * nd(g) + (frame % 3);
    std::vector<double> info_want, coded_want;
    oracle::exhaustive_map(llr, k, code.constraint_length, code.generators, info_want, coded_want);
    const auto out = app_decode(llr, code);
    for (int i = 0; i < k; ++i)
      worst = std::max(worst, std::abs(out.info_posterior[static_cast<std::size_t>(i)] - info_want[static_cast<std::size_t>(i)]));
    for (std::size_t j = 0; j < llr.size(); ++j) worst = std::max(worst, std::abs(out.coded_posterior[j] - coded_want[j]));
  }
  return {worst <= 1e-9, fmt("50 frames, max |LLR error| %.2e", worst)};
}

Outcome awgn_calibration() {
  ExperimentConfig c;
  c.tau = 1.0;
  c.code = "none";
  c.info_bits = 3000;
  c.ebn0_db = {4.0, 6.0, 8.0};
  c.min_errors = 200;
  c.max_frames = 4000;
  c.seed = 404;
  const auto pts = run_experiment(c);
  bool ok = true;
  std::string d;
  for (const auto& p : pts) {
    const double pe = oracle::qfunc(std::sqrt(2.0 * std::pow(10.0, p.ebn0_db / 10.0)));
    const double se = std::sqrt(pe * (1.0 - pe) / static_cast<double>(p.bits));
    const double z = (p.ber() - pe) / se;
    ok = ok && p.bit_errors >= 200 && std::abs(z) <= 3.0;
    d += fmt(" %g dB: ber=%.3e Q=%.3e z=%+.2f errors=%zu;", p.ebn0_db, p.ber(), pe, z, p.bit_errors);
  }
  return {ok, d};
}

Outcome fig5_gap() {
  const auto preset = fig5_preset();
  auto ftn = preset.curves[0].config;
  auto ref = preset.curves[1].config;
  for (auto* c : {&ftn, &ref}) {
    c->min_errors = 200;
    c->max_frames = 120;
    c->seed = 505;
  }
  ftn.ebn0_db = {4.0, 4.5, 5.0, 5.5, 6.0};
  ref.ebn0_db = {3.0, 3.5, 4.0, 4.5};
  const auto a = run_experiment(ftn);
  const auto b = run_experiment(ref);
  const auto sa = snr_at_ber(a, 1e-3), sb = snr_at_ber(b, 1e-3);
  std::string d = "tau=0.5:" + curve_text(a) + " | tau=1:" + curve_text(b);
  if (!sa || !sb) return {false, d + " | a curve did not cross 1e-3"};
  const double gap = *sa - *sb;
  d = fmt("gap at 1e-3 = %.2f dB (tau=0.5 %.2f dB, tau=1 %.2f dB); ", gap, *sa, *sb) + d;
  if (gap > 0.75) {
    // Diagnostic only: the same link with undamped equalizer output.
    auto alt = ftn;
    alt.scaling.eq_out_scale = 1.0;
    const auto c = run_experiment(alt);
    if (const auto sc = snr_at_ber(c, 1e-3)) d += fmt(" | note: scaling (1.0,0.5) gives gap %.2f dB", *sc - *sb);
  }
  return {gap <= 0.75, d};
}

Outcome fig4_rules() {
  auto cfg = fig4_config();
  cfg.min_errors = 200;
  cfg.max_frames = 150;
  cfg.seed = 606;
  const auto preset = fig4_preset();
  auto rec = preset.curves[0].config;
  auto dir = preset.curves[1].config;
  for (auto* c : {&rec, &dir}) {
    c->min_errors = cfg.min_errors;
    c->max_frames = cfg.max_frames;
    c->seed = cfg.seed;
  }
  const auto r = run_experiment(rec);
  const auto s = run_experiment(dir);
  bool order = true, compared = false, stagnant = true;
  std::string d;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& a = r[i];
    const auto& b = s[i];
    if (a.ber() < 1e-2 || b.ber() < 1e-2) {
      compared = true;
      order = order && a.ber() < b.ber();
    }
    // Direct rule: errors after iteration 5 against iteration 2, with 3-sigma slack.
    const auto& it = b.iteration_errors;
    const double e2 = static_cast<double>(it[1]) / static_cast<double>(b.bits);
    const double e5 = static_cast<double>(it[4]) / static_cast<double>(b.bits);
    const double slack = 3.0 * std::sqrt(std::max(e2, 1.0 / static_cast<double>(b.bits)) / static_cast<double>(b.bits));
    if (e5 < e2 - slack) stagnant = false;
    d += fmt(" %.0f dB: recalc %.3g direct %.3g (direct it2 %.3g it5 %.3g);", a.ebn0_db, a.ber(), b.ber(), e2, e5);
  }
  const bool ok = order && compared && stagnant;
  return {ok, fmt("ordering=%d iteration_stagnation=%d;", order && compared, stagnant) + d};
}

Outcome complexity() {
  ProbeOptions opt;
  opt.repeats = 3;
  const std::vector<std::size_t> sizes{256, 512, 1024, 2048};
  const auto ri = complexity_probe(EqualizerKind::RiLmmse, sizes, opt);
  const auto il = complexity_probe(EqualizerKind::ILmmse, sizes, opt);
  ProbeOptions q = opt;
  q.repeats = 5;
  const auto bpsk = complexity_probe(EqualizerKind::RiLmmse, {1024}, q).rows[0].seconds;
  q.constellation = "16QAM";
  const auto qam = complexity_probe(EqualizerKind::RiLmmse, {1024}, q).rows[0].seconds;
  const double change = std::abs(qam - bpsk) / bpsk;
  const bool ok = ri.slope >= 0.8 && ri.slope <= 1.3 && il.slope >= 1.7 && il.slope <= 2.5 && change < 0.10;
  return {ok, fmt("RI-LMMSE slope %.2f, I-LMMSE slope %.2f, BPSK->16QAM runtime change %.1f%% at N=1024", ri.slope, il.slope,
                  100.0 * change)};
}

Outcome fig6_waterfall() {
  auto c = fig6_preset().curves[0].config;
  c.ebn0_db = {7.0, 8.0, 9.0, 9.5, 10.0, 10.5};
  c.min_errors = 100;
  c.max_frames = 40;
  c.seed = 707;
  const auto pts = run_experiment(c);
  // Widest drop within any 3 dB window; a zero-error point counts as one
  // error, which understates the drop.
  double best = 0.0;
  for (const auto& a : pts)
    for (const auto& b : pts) {
      if (b.ebn0_db <= a.ebn0_db || b.ebn0_db - a.ebn0_db > 3.0 + 1e-9 || a.bit_errors == 0) continue;
      const double bb = std::max(b.ber(), 1.0 / static_cast<double>(b.bits));
      best = std::max(best, std::log10(a.ber() / bb));
    }
  return {best >= 2.0, fmt("largest drop within 3 dB: %.2f decades;", best) + curve_text(pts)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // stated runtime bound, 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "I-LMMSE matches dense oracle", 10, ilmmse_oracle},
      {2, "RI-LMMSE matches I-LMMSE under AR noise", 30, rilmmse_vs_ilmmse},
      {3, "Yule-Walker reproduces fitted lags", 1, yule_walker},
      {4, "ISI profile properties", 1, isi_profile},
      {5, "APP decoder matches exhaustive MAP", 10, app_exactness},
      {6, "uncoded BPSK calibration", 120, awgn_calibration},
      {7, "BPSK tau=0.5 gap to tau=1 at BER 1e-3 <= 0.75 dB", 0, fig5_gap},
      {8, "64QAM static ISI: recalculated beats direct, direct stagnates", 0, fig4_rules},
      {9, "equalizer complexity scaling", 300, complexity},
      {10, "16QAM tau=0.67 turbo waterfall", 0, fig6_waterfall},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" | runtime %.1f s exceeds %.0f s", secs, c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s (%.1f s) -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
