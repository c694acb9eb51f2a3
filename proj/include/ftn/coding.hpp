#pragma once

// Feedforward convolutional code, random interleaver and log-domain BCJR
// (APP) decoder.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ftn/constellation.hpp"
#include "ftn/error.hpp"
#include "ftn/rng.hpp"

namespace ftn {

/// Per-bit LLRs, positive when bit 0 is more likely.
struct LlrFrame {
  std::vector<double> values;

  LlrFrame() = default;
  explicit LlrFrame(std::size_t n, double v = 0.0) : values(n, v) {}
  explicit LlrFrame(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  auto begin() { return values.begin(); }
  auto end() { return values.end(); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }

  LlrFrame& clip(double cap) {
    for (auto& v : values) v = std::clamp(v, -cap, cap);
    return *this;
  }
  LlrFrame& scale(double s) {
    for (auto& v : values) v *= s;
    return *this;
  }
};

inline double clip_llr(double v, double cap) { return std::clamp(v, -cap, cap); }

struct ConvCode {
  int constraint_length = 3;
  std::vector<unsigned> generators{07, 05};
  bool terminated = true;

  int outputs() const { return static_cast<int>(generators.size()); }
  int states() const { return 1 << (constraint_length - 1); }
  int tail() const { return terminated ? constraint_length - 1 : 0; }
  std::size_t coded_length(std::size_t info_bits) const {
    return (info_bits + static_cast<std::size_t>(tail())) * generators.size();
  }
  double rate() const { return 1.0 / static_cast<double>(generators.size()); }

  void validate() const {
    if (constraint_length < 2 || constraint_length > 16) throw ConfigError("conv code: constraint length out of range");
    if (generators.size() < 2) throw ConfigError("conv code: need at least two generators");
    for (unsigned g : generators) {
      if (g == 0) throw ConfigError("conv code: zero generator");
      if (g >> constraint_length) throw ConfigError("conv code: generator wider than constraint length");
    }
    const bool lead = std::any_of(generators.begin(), generators.end(),
                                  [&](unsigned g) { return (g >> (constraint_length - 1)) & 1U; });
    if (!lead) throw ConfigError("conv code: no generator has the leading tap set");
  }

  /// Parses "7,5" or "133,171" (octal, comma or space separated).
  static ConvCode parse(const std::string& spec, bool terminated = true) {
    ConvCode c;
    c.generators.clear();
    c.terminated = terminated;
    std::string s = spec;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
      if (tok.find_first_not_of("01234567") != std::string::npos)
        throw ConfigError("conv code: '" + tok + "' is not an octal generator");
      c.generators.push_back(static_cast<unsigned>(std::stoul(tok, nullptr, 8)));
    }
    if (c.generators.empty()) throw ConfigError("conv code: empty generator list '" + spec + "'");
    unsigned widest = 0;
    for (unsigned g : c.generators) widest = std::max(widest, static_cast<unsigned>(std::bit_width(g)));
    c.constraint_length = static_cast<int>(widest);
    c.validate();
    return c;
  }

  std::string octal() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < generators.size(); ++i) out << (i ? "," : "") << std::oct << generators[i];
    return out.str();
  }
};

namespace detail {

// Register layout: bit K-1 holds the current input, lower bits the previous
// K-1 inputs (most recent first). Generator MSB taps the current input.
struct Trellis {
  int n_states = 0;
  int n_out = 0;
  std::vector<int> next;       // [state * 2 + u]
  std::vector<unsigned> out;   // output pattern, bit j = generator j

  explicit Trellis(const ConvCode& code) : n_states(code.states()), n_out(code.outputs()) {
    next.resize(static_cast<std::size_t>(n_states) * 2);
    out.resize(next.size());
    for (int s = 0; s < n_states; ++s)
      for (int u = 0; u < 2; ++u) {
        const unsigned reg = (static_cast<unsigned>(u) << (code.constraint_length - 1)) | static_cast<unsigned>(s);
        unsigned pattern = 0;
        for (int j = 0; j < n_out; ++j)
          pattern |= static_cast<unsigned>(std::popcount(reg & code.generators[static_cast<std::size_t>(j)]) & 1) << j;
        next[static_cast<std::size_t>(s * 2 + u)] = static_cast<int>(reg >> 1);
        out[static_cast<std::size_t>(s * 2 + u)] = pattern;
      }
  }
};

inline double log_add(double a, double b, bool max_log) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return max_log ? m : m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace detail

inline Bits conv_encode(std::span<const std::uint8_t> info, const ConvCode& code) {
  const detail::Trellis tr(code);
  const std::size_t steps = info.size() + static_cast<std::size_t>(code.tail());
  Bits out;
  out.reserve(steps * static_cast<std::size_t>(tr.n_out));
  int state = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const int u = t < info.size() ? (info[t] & 1) : 0;
    const auto idx = static_cast<std::size_t>(state * 2 + u);
    for (int j = 0; j < tr.n_out; ++j) out.push_back(static_cast<std::uint8_t>((tr.out[idx] >> j) & 1U));
    state = tr.next[idx];
  }
  return out;
}

struct AppOutput {
  LlrFrame extrinsic;                  // coded-bit posterior minus input
  std::vector<double> coded_posterior;
  std::vector<double> info_posterior;  // one per information bit (tail excluded)
};

/// Log-MAP BCJR decoder over the code trellis. Holds scratch buffers sized to
/// the last frame; use one instance per thread.
class AppDecoder {
 public:
  explicit AppDecoder(ConvCode code, bool max_log = false, double llr_cap = 30.0)
      : code_(std::move(code)), trellis_(code_), max_log_(max_log), cap_(llr_cap) {
    code_.validate();
  }

  const ConvCode& code() const { return code_; }

  AppOutput decode(std::span<const double> coded_llrs) {
    const auto n_out = static_cast<std::size_t>(trellis_.n_out);
    if (coded_llrs.size() % n_out != 0)
      throw LengthMismatch("app_decode: frame length not a multiple of the generator count");
    const std::size_t steps = coded_llrs.size() / n_out;
    const auto tail = static_cast<std::size_t>(code_.tail());
    if (steps < tail) throw LengthMismatch("app_decode: frame shorter than the termination tail");
    const std::size_t info_len = steps - tail;
    const auto ns = static_cast<std::size_t>(trellis_.n_states);
    const std::size_t n_patterns = std::size_t{1} << n_out;
    constexpr double ninf = -std::numeric_limits<double>::infinity();

    std::vector<double> lam(coded_llrs.size());
    for (std::size_t i = 0; i < lam.size(); ++i) lam[i] = clip_llr(coded_llrs[i], cap_);

    metric_.assign(steps * n_patterns, 0.0);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t pat = 0; pat < n_patterns; ++pat) {
        double m = 0.0;
        for (std::size_t j = 0; j < n_out; ++j) m += ((pat >> j) & 1U) ? -0.5 * lam[t * n_out + j] : 0.5 * lam[t * n_out + j];
        metric_[t * n_patterns + pat] = m;
      }

    alpha_.assign((steps + 1) * ns, ninf);
    beta_.assign((steps + 1) * ns, ninf);
    alpha_[0] = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const int umax = t < info_len ? 2 : 1;
      double* an = &alpha_[(t + 1) * ns];
      const double* ac = &alpha_[t * ns];
      for (std::size_t s = 0; s < ns; ++s) {
        if (ac[s] == ninf) continue;
        for (int u = 0; u < umax; ++u) {
          const auto idx = s * 2 + static_cast<std::size_t>(u);
          const auto nx = static_cast<std::size_t>(trellis_.next[idx]);
          an[nx] = detail::log_add(an[nx], ac[s] + metric_[t * n_patterns + trellis_.out[idx]], max_log_);
        }
      }
      normalize(an, ns);
    }
    double* bend = &beta_[steps * ns];
    if (code_.terminated) bend[0] = 0.0;
    else std::fill(bend, bend + ns, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
      const int umax = t < info_len ? 2 : 1;
      double* bc = &beta_[t * ns];
      const double* bn = &beta_[(t + 1) * ns];
      for (std::size_t s = 0; s < ns; ++s)
        for (int u = 0; u < umax; ++u) {
          const auto idx = s * 2 + static_cast<std::size_t>(u);
          const auto nx = static_cast<std::size_t>(trellis_.next[idx]);
          if (bn[nx] == ninf) continue;
          bc[s] = detail::log_add(bc[s], bn[nx] + metric_[t * n_patterns + trellis_.out[idx]], max_log_);
        }
      normalize(bc, ns);
    }

    AppOutput res;
    res.coded_posterior.assign(coded_llrs.size(), 0.0);
    res.info_posterior.assign(info_len, 0.0);
    std::vector<double> num0(n_out), num1(n_out);
    for (std::size_t t = 0; t < steps; ++t) {
      const int umax = t < info_len ? 2 : 1;
      std::fill(num0.begin(), num0.end(), ninf);
      std::fill(num1.begin(), num1.end(), ninf);
      double u0 = ninf, u1 = ninf;
      for (std::size_t s = 0; s < ns; ++s) {
        const double a = alpha_[t * ns + s];
        if (a == ninf) continue;
        for (int u = 0; u < umax; ++u) {
          const auto idx = s * 2 + static_cast<std::size_t>(u);
          const auto nx = static_cast<std::size_t>(trellis_.next[idx]);
          const double b = beta_[(t + 1) * ns + nx];
          if (b == ninf) continue;
          const unsigned pat = trellis_.out[idx];
          const double v = a + metric_[t * n_patterns + pat] + b;
          if (u == 0) u0 = detail::log_add(u0, v, max_log_);
          else u1 = detail::log_add(u1, v, max_log_);
          for (std::size_t j = 0; j < n_out; ++j) {
            if ((pat >> j) & 1U) num1[j] = detail::log_add(num1[j], v, max_log_);
            else num0[j] = detail::log_add(num0[j], v, max_log_);
          }
        }
      }
      if (t < info_len) res.info_posterior[t] = finite_llr(u0, u1);
      for (std::size_t j = 0; j < n_out; ++j) res.coded_posterior[t * n_out + j] = finite_llr(num0[j], num1[j]);
    }

    res.extrinsic = LlrFrame(coded_llrs.size());
    for (std::size_t i = 0; i < lam.size(); ++i) res.extrinsic[i] = res.coded_posterior[i] - lam[i];
    return res;
  }

 private:
  static void normalize(double* v, std::size_t n) {
    const double m = *std::max_element(v, v + n);
    if (m == -std::numeric_limits<double>::infinity()) return;
    for (std::size_t i = 0; i < n; ++i) v[i] -= m;
  }

  // Tail bits are certain; their LLR saturates at the cap.
  double finite_llr(double l0, double l1) const {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    if (l0 == ninf && l1 == ninf) return 0.0;
    if (l1 == ninf) return cap_;
    if (l0 == ninf) return -cap_;
    return l0 - l1;
  }

  ConvCode code_;
  detail::Trellis trellis_;
  bool max_log_;
  double cap_;
  std::vector<double> metric_, alpha_, beta_;
};

inline AppOutput app_decode(std::span<const double> coded_llrs, const ConvCode& code, bool max_log = false) {
  AppDecoder dec(code, max_log);
  return dec.decode(coded_llrs);
}

class Interleaver {
 public:
  Interleaver() = default;
  explicit Interleaver(std::vector<std::size_t> permutation) : perm_(std::move(permutation)) {
    std::vector<char> seen(perm_.size(), 0);
    for (auto p : perm_) {
      if (p >= perm_.size() || seen[p]) throw ConfigError("interleaver: not a permutation");
      seen[p] = 1;
    }
  }

  static Interleaver identity(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return Interleaver(std::move(p));
  }

  /// Uniform random permutation (Fisher-Yates on mt19937_64).
  static Interleaver random(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
    return Interleaver(std::move(p));
  }

  std::size_t size() const { return perm_.size(); }
  const std::vector<std::size_t>& permutation() const { return perm_; }

  template <class T>
  std::vector<T> interleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[i] = in[perm_[i]];
    return out;
  }

  template <class T>
  std::vector<T> deinterleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[i];
    return out;
  }

  LlrFrame interleave(const LlrFrame& f) const { return LlrFrame(interleave<double>(f.values)); }
  LlrFrame deinterleave(const LlrFrame& f) const { return LlrFrame(deinterleave<double>(f.values)); }

 private:
  void check(std::size_t n) const {
    if (n != perm_.size())
      throw LengthMismatch("interleaver: frame length " + std::to_string(n) + " != " + std::to_string(perm_.size()));
  }

  std::vector<std::size_t> perm_;
};

}  // namespace ftn
