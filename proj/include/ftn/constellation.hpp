#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftn/error.hpp"

namespace ftn {

using cdouble = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

/// Gray-labeled constellation. Point i carries label i; label bit q is bit
/// (bits_per_symbol - 1 - q) of i, i.e. labels are read MSB first.
///
/// Labeling: BPSK maps 0 -> +sqrt(Es). Square QAM uses one Gray-coded PAM per
/// axis; the first half of the label drives I, the second half Q, and an
/// axis bit pattern with Gray index g sits at level (2^m - 1) - 2 g, so a
/// leading 0 bit always selects the positive half plane.
struct Constellation {
  std::string name;
  int bits_per_symbol = 1;
  std::vector<cdouble> points;
  double es = 1.0;

  std::size_t size() const { return points.size(); }
  int label_bit(std::size_t point, int q) const {
    return static_cast<int>((point >> (bits_per_symbol - 1 - q)) & 1U);
  }
};

namespace detail {

inline unsigned gray_to_index(unsigned g) {
  unsigned i = 0;
  for (; g; g >>= 1) i ^= g;
  return i;
}

inline std::vector<double> gray_pam(int m) {
  const unsigned levels = 1U << m;
  std::vector<double> out(levels);
  for (unsigned g = 0; g < levels; ++g)
    out[g] = static_cast<double>(levels - 1) - 2.0 * gray_to_index(g);
  return out;
}

}  // namespace detail

inline Constellation make_constellation(const std::string& name, double es = 1.0) {
  if (!(es > 0.0)) throw ConfigError("constellation: es must be positive");
  Constellation c;
  c.name = name;
  c.es = es;
  if (name == "BPSK") {
    c.bits_per_symbol = 1;
    c.points = {cdouble(std::sqrt(es), 0.0), cdouble(-std::sqrt(es), 0.0)};
    return c;
  }
  int m = 0;
  if (name == "QPSK") m = 1;
  else if (name == "16QAM") m = 2;
  else if (name == "64QAM") m = 3;
  else throw ConfigError("unknown constellation '" + name + "' (BPSK|QPSK|16QAM|64QAM)");

  c.bits_per_symbol = 2 * m;
  const auto pam = detail::gray_pam(m);
  const double big_m = static_cast<double>(1U << (2 * m));
  const double scale = std::sqrt(es * 3.0 / (2.0 * (big_m - 1.0)));
  c.points.resize(static_cast<std::size_t>(big_m));
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto gi = static_cast<unsigned>(i >> m);
    const auto gq = static_cast<unsigned>(i & ((1U << m) - 1));
    c.points[i] = scale * cdouble(pam[gi], pam[gq]);
  }
  return c;
}

inline std::vector<cdouble> modulate(std::span<const std::uint8_t> bits, const Constellation& c) {
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  if (bits.size() % l != 0)
    throw LengthMismatch("modulate: " + std::to_string(bits.size()) + " bits not divisible by " +
                         std::to_string(l));
  std::vector<cdouble> out(bits.size() / l);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::size_t label = 0;
    for (std::size_t q = 0; q < l; ++q) label = (label << 1) | (bits[k * l + q] & 1U);
    out[k] = c.points[label];
  }
  return out;
}

/// Nearest-point hard decision, returned as label bits.
inline Bits demap_hard(std::span<const cdouble> symbols, const Constellation& c) {
  const auto l = static_cast<std::size_t>(c.bits_per_symbol);
  Bits out(symbols.size() * l);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    std::size_t best = 0;
    double best_d = std::norm(symbols[k] - c.points[0]);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      const double d = std::norm(symbols[k] - c.points[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    for (std::size_t q = 0; q < l; ++q) out[k * l + q] = static_cast<std::uint8_t>(c.label_bit(best, static_cast<int>(q)));
  }
  return out;
}

}  // namespace ftn
