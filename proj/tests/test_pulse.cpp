#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ftn/pulse.hpp"
#include "oracles.hpp"

using namespace ftn;

namespace {

// Raised-cosine autocorrelation of the untruncated rRC pulse.
double rc_autocorr(double t, double a) {
  const double pi = std::numbers::pi;
  const double s = t == 0.0 ? 1.0 : std::sin(pi * t) / (pi * t);
  const double d = 1.0 - 4.0 * a * a * t * t;
  if (std::abs(d) < 1e-12) return pi / 4.0 * s;
  return s * std::cos(pi * a * t) / d;
}

}  // namespace

TEST(Rrc, MatchesInverseTransformOfSpectrum) {
  for (double alpha : {0.1, 0.3, 0.5, 1.0}) {
    const PulseSpec spec{alpha, 8, 16};
    for (double t : {0.0, 0.13, 0.5, 1.0, 1.0 / (4.0 * alpha), 2.7, 6.0})
      EXPECT_NEAR(rrc_amplitude(spec, t), oracle::rrc_from_spectrum(t, alpha), 1e-9) << "alpha " << alpha << " t " << t;
  }
}

TEST(Rrc, EvenAndZeroRolloffIsSinc) {
  const PulseSpec spec{0.3, 8, 16};
  for (double t : {0.2, 1.7, 3.25}) EXPECT_DOUBLE_EQ(rrc_amplitude(spec, t), rrc_amplitude(spec, -t));
  const PulseSpec sinc{0.0, 8, 16};
  EXPECT_NEAR(rrc_amplitude(sinc, 0.5), std::sin(std::numbers::pi / 2) / (std::numbers::pi / 2), 1e-12);
  EXPECT_NEAR(rrc_amplitude(sinc, 3.0), 0.0, 1e-12);
}

TEST(Rrc, RejectsBadSpec) {
  EXPECT_THROW((PulseSpec{-0.1, 8, 16}.validate()), ConfigError);
  EXPECT_THROW((PulseSpec{1.1, 8, 16}.validate()), ConfigError);
  EXPECT_THROW((PulseSpec{0.3, 0, 16}.validate()), ConfigError);
  EXPECT_THROW((PulseSpec{0.3, 8, 4}.validate()), ConfigError);
}

TEST(IsiTaps, MatchIndependentQuadrature) {
  const PulseSpec spec{0.3, 8, 16};
  for (double tau : {0.5, 0.67, 0.8, 1.0}) {
    const int L = support_half_length(spec, tau);
    const auto p = isi_taps(spec, tau, L);
    const auto q = oracle::quadrature_taps(0.3, 8.0, 16, tau, L);
    for (int k = 0; k <= L; ++k) EXPECT_NEAR(p.h(k), q[static_cast<std::size_t>(k)], 2e-4) << "tau " << tau << " k " << k;
  }
}

TEST(IsiTaps, ApproachRaisedCosineForLongPulse) {
  const PulseSpec spec{0.3, 40, 16};
  const auto p = isi_taps(spec, 0.5, 12);
  for (int k = 1; k <= 12; ++k) EXPECT_NEAR(p.h(k), rc_autocorr(0.5 * k, 0.3), 1e-3) << "k " << k;
}

TEST(IsiTaps, UnitCenterAndExactSymmetry) {
  const PulseSpec spec{0.3, 8, 16};
  const auto p = isi_taps(spec, 0.5, 20);
  EXPECT_EQ(p.h(0), 1.0);
  EXPECT_TRUE(p.symmetric());
  for (int k = 1; k <= 20; ++k) EXPECT_EQ(p.h(k), p.h(-k));
  EXPECT_EQ(p.h(21), 0.0);
}

TEST(IsiTaps, FullSupportToeplitzIsPsd) {
  const PulseSpec spec{0.3, 8, 16};
  for (double tau : {0.5, 0.67, 1.0}) {
    const int L = support_half_length(spec, tau);
    const auto p = isi_taps(spec, tau, L);
    std::vector<double> lags(p.taps.begin() + L, p.taps.end());
    const Eigen::MatrixXd t = oracle::toeplitz(lags, 256);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t).eigenvalues().minCoeff(), -1e-9) << "tau " << tau;
  }
}

TEST(IsiTaps, NyquistSpacingIsNearlyOrthogonal) {
  const PulseSpec spec{0.3, 8, 16};
  const auto p = isi_taps(spec, 1.0, 7);
  for (int k = 1; k <= 7; ++k) EXPECT_LT(std::abs(p.h(k)), 1e-3) << "k " << k;
}

TEST(IsiTaps, TapsBeyondSupportAreZero) {
  const PulseSpec spec{0.3, 2, 16};
  const int L = support_half_length(spec, 1.0);
  EXPECT_EQ(L, 4);
  const auto p = isi_taps(spec, 1.0, L + 3);
  for (int k = L + 1; k <= L + 3; ++k) EXPECT_EQ(p.h(k), 0.0);
  EXPECT_EQ(p.zero_tail, 6);
}

TEST(IsiTaps, RejectsBadArguments) {
  const PulseSpec spec{0.3, 8, 16};
  EXPECT_THROW(isi_taps(spec, 0.0, 3), ConfigError);
  EXPECT_THROW(isi_taps(spec, 1.2, 3), ConfigError);
  EXPECT_THROW(isi_taps(spec, 0.5, -1), ConfigError);
}

TEST(IsiProfile, CappedKeepsCenteredTaps) {
  const auto p = isi_taps(PulseSpec{}, 0.5, 32);
  const auto c = p.capped(15);
  EXPECT_EQ(c.L, 7);
  for (int k = -7; k <= 7; ++k) EXPECT_EQ(c.h(k), p.h(k));
  EXPECT_EQ(c.h(8), 0.0);
  EXPECT_EQ(p.capped(200).L, 32);
  EXPECT_THROW(p.capped(0), ConfigError);
}

TEST(IsiProfile, CausalPatternMapsToNegativeLags) {
  const auto p = IsiProfile::from_causal({0.408, 0.0, 0.0, 0.0, 0.816, 0.408});
  EXPECT_EQ(p.L, 5);
  EXPECT_EQ(p.h(0), 0.408);
  EXPECT_EQ(p.h(-4), 0.816);
  EXPECT_EQ(p.h(-5), 0.408);
  EXPECT_EQ(p.h(1), 0.0);
  EXPECT_FALSE(p.symmetric());
  EXPECT_THROW(IsiProfile::from_causal({}), ConfigError);
}

TEST(NoiseAutocorr, ScalesProfile) {
  const auto p = isi_taps(PulseSpec{}, 0.5, 10);
  const auto n = noise_autocorr(p, 0.25);
  ASSERT_EQ(n.lags.size(), 11u);
  for (int k = 0; k <= 10; ++k) EXPECT_DOUBLE_EQ(n.at(k), 0.25 * p.h(k));
  EXPECT_EQ(n.at(-3), n.at(3));
  EXPECT_EQ(n.at(11), 0.0);
  EXPECT_THROW(noise_autocorr(p, 0.0), ConfigError);
  EXPECT_EQ(white_noise_autocorr(2.0).lags, std::vector<double>{2.0});
}

TEST(IsiProfile, JsonRoundTrip) {
  const auto p = isi_taps(PulseSpec{}, 0.67, 6);
  const nlohmann::json j = p;
  const auto q = j.get<IsiProfile>();
  EXPECT_EQ(q.L, p.L);
  EXPECT_EQ(q.taps, p.taps);
  nlohmann::json bad = j;
  bad["L"] = 2;
  EXPECT_THROW(bad.get<IsiProfile>(), ConfigError);
}
