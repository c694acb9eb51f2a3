#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ftn/error.hpp"

namespace ftn {

/// Symmetric positive (semi)definite band matrix with half-bandwidth b,
/// factored in place as C C^T with C lower triangular and banded.
///
/// Storage is row-major over the lower band: entry (i, j) with
/// i - b <= j <= i lives at data_[i * (b + 1) + (j - i + b)].
class BandedCholesky {
 public:
  BandedCholesky() = default;
  BandedCholesky(std::size_t n, std::size_t bandwidth)
      : n_(n), b_(std::min(bandwidth, n == 0 ? 0 : n - 1)), data_(n * (b_ + 1), 0.0) {}

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return b_; }

  double& at(std::size_t i, std::size_t j) { return data_[i * (b_ + 1) + (j + b_ - i)]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (b_ + 1) + (j + b_ - i)]; }

  /// Lower-band entry or zero outside the band (j <= i).
  double lower(std::size_t i, std::size_t j) const {
    if (j > i || i - j > b_) return 0.0;
    return at(i, j);
  }

  /// Factors in place. Pivots in (-negative_tolerance, floor] are raised to
  /// `floor` and counted; anything below -negative_tolerance throws.
  std::size_t factor(double floor = 0.0, double negative_tolerance = 0.0) {
    std::size_t floored = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i > b_ ? i - b_ : 0;
      for (std::size_t j = j0; j <= i; ++j) {
        double s = at(i, j);
        const std::size_t k0 = std::max(j0, j > b_ ? j - b_ : std::size_t{0});
        for (std::size_t k = k0; k < j; ++k) s -= at(i, k) * at(j, k);
        if (j == i) {
          if (s <= floor) {
            if (s < -negative_tolerance || (floor <= 0.0 && s <= 0.0))
              throw NotPositiveSemidefinite(
                  s, i, "covariance factorization failed: pivot " + std::to_string(s) +
                            " at index " + std::to_string(i));
            s = floor;
            ++floored;
          }
          at(i, i) = std::sqrt(s);
        } else {
          at(i, j) = s / at(j, j);
        }
      }
    }
    return floored;
  }

  /// y <- C^{-1} y, treating y[0..start) as zero.
  template <class T>
  void solve_lower(std::span<T> y, std::size_t start = 0) const {
    for (std::size_t i = 0; i < start && i < n_; ++i) y[i] = T{};
    for (std::size_t i = start; i < n_; ++i) {
      T s = y[i];
      const std::size_t k0 = std::max(start, i > b_ ? i - b_ : std::size_t{0});
      for (std::size_t k = k0; k < i; ++k) s -= at(i, k) * y[k];
      y[i] = s / at(i, i);
    }
  }

  /// y <- C^{-T} y.
  template <class T>
  void solve_upper(std::span<T> y) const {
    for (std::size_t ii = n_; ii-- > 0;) {
      T s = y[ii];
      const std::size_t k1 = std::min(n_, ii + b_ + 1);
      for (std::size_t k = ii + 1; k < k1; ++k) s -= at(k, ii) * y[k];
      y[ii] = s / at(ii, ii);
    }
  }

  template <class T>
  void solve(std::span<T> y) const {
    solve_lower(y);
    solve_upper(y);
  }

  /// out <- C w.
  template <class T>
  void multiply_lower(std::span<const T> w, std::span<T> out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      T s{};
      const std::size_t k0 = i > b_ ? i - b_ : 0;
      for (std::size_t k = k0; k <= i; ++k) s += at(i, k) * w[k];
      out[i] = s;
    }
  }

 private:
  std::size_t n_ = 0;
  std::size_t b_ = 0;
  std::vector<double> data_;
};

/// Band of the symmetric Toeplitz matrix built from lags[0..K].
inline BandedCholesky toeplitz_band(std::span<const double> lags, std::size_t n) {
  const std::size_t k = lags.empty() ? 0 : lags.size() - 1;
  BandedCholesky m(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i > m.bandwidth() ? i - m.bandwidth() : 0;
    for (std::size_t j = j0; j <= i; ++j) m.at(i, j) = lags[i - j];
  }
  return m;
}

}  // namespace ftn
