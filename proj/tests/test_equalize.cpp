#include <gtest/gtest.h>

#include <random>

#include "ftn/equalize.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace ftn;
using namespace testgen;

TEST(Ilmmse, WhiteIdentityIsScalarMmse) {
  const double n0 = 0.3, es = 1.0;
  BlockModel model{IsiProfile::identity(), {n0}};
  std::vector<cdouble> r{{0.4, -0.1}, {-1.2, 0.3}, {0.0, 0.9}};
  std::vector<SymbolPrior> pr(3, SymbolPrior{{0.0, 0.0}, es});
  const auto post = ilmmse_equalize(r, model, pr);
  const double v = 1.0 / (1.0 / es + 1.0 / n0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(post[k].variance, v, 1e-12);
    EXPECT_NEAR(std::abs(post[k].mean - v * r[k] / n0), 0.0, 1e-12);
  }
}

TEST(Ilmmse, MatchesDenseOracle) {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int L = 1 + trial % 3;
    const int n = 8 + (trial * 7) % 25;
    const auto isi = random_profile(g, L);
    const auto lags = random_colored_lags(g, 1 + trial % 4, 0.2 + 0.1 * (trial % 5));
    const auto inst = random_instance(g, isi, n, lags);
    const auto post = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    const auto ref = dense(isi, lags, inst);
    const double scale = max_abs_mean(ref);
    for (int i = 0; i < n; ++i) {
      EXPECT_LT(oracle::rel_err(post[static_cast<std::size_t>(i)].mean, ref.mean(i), scale), 1e-9);
      EXPECT_LT(oracle::rel_err(post[static_cast<std::size_t>(i)].variance, ref.variance(i)), 1e-9);
    }
  }
}

TEST(Ilmmse, CertainSymbolKeepsItsMean) {
  std::mt19937_64 g(3);
  const auto isi = random_profile(g, 2);
  const auto lags = random_colored_lags(g, 2, 0.5);
  auto inst = random_instance(g, isi, 16, lags);
  inst.priors[7] = {{0.7, -0.7}, 1e-12};
  const auto post = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
  EXPECT_LT(std::abs(post[7].mean - cdouble(0.7, -0.7)), 1e-6);
}

TEST(Ilmmse, PosteriorVarianceNeverExceedsPrior) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto isi = random_profile(g, 3);
    const auto lags = random_colored_lags(g, 3, 1.0);
    const auto inst = random_instance(g, isi, 30, lags);
    const auto post = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    for (std::size_t i = 0; i < post.size(); ++i) EXPECT_LE(post[i].variance, inst.priors[i].variance + 1e-9);
  }
}

TEST(Ilmmse, RejectsBadInputs) {
  BlockModel model{IsiProfile::identity(), {1.0}};
  std::vector<cdouble> r(4);
  std::vector<SymbolPrior> pr(3);
  EXPECT_THROW(ilmmse_equalize(r, model, pr), LengthMismatch);
  pr.resize(4);
  pr[1].variance = 0.0;
  EXPECT_THROW(ilmmse_equalize(r, model, pr), ConfigError);
}

TEST(StateMatrices, StructureAndTransition) {
  std::mt19937_64 g(8);
  const auto isi = random_profile(g, 2);
  const auto ar = random_ar(g, 3, 0.4);
  const auto sm = make_state_matrices(isi, ar);
  const int d = sm.layout.dim();
  ASSERT_EQ(d, 5 + 3);
  ASSERT_EQ(sm.G.rows(), d);
  ASSERT_EQ(sm.F.cols(), 2);
  // symbol shift, zero row where the new symbol enters, noise shift, AR row
  for (int i = 0; i < 4; ++i) EXPECT_EQ(sm.G(i, i + 1), 1.0);
  EXPECT_EQ(sm.G.row(4).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(sm.G(5, 6), 1.0);
  EXPECT_EQ(sm.G(6, 7), 1.0);
  for (int a = 0; a < 3; ++a) EXPECT_EQ(sm.G(7, 5 + a), ar.coeffs[static_cast<std::size_t>(2 - a)]);
  EXPECT_EQ(sm.F(4, 0), 1.0);
  EXPECT_EQ(sm.F(7, 1), 1.0);
  EXPECT_EQ(sm.F.cwiseAbs().sum(), 2.0);
  for (int j = 0; j < 5; ++j) EXPECT_EQ(sm.hbar(j), isi.taps[static_cast<std::size_t>(j)]);

  // Next state's newest noise equals r_k minus the ISI part of x_k.
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = nd(g);
  const double innov = nd(g), xnew = nd(g);
  const double rk = sm.hbar.dot(x) + innov;
  const Eigen::VectorXd next = sm.G * x + sm.F * Eigen::Vector2d(xnew, innov);
  double isi_part = 0.0;
  for (int j = 0; j < 5; ++j) isi_part += isi.taps[static_cast<std::size_t>(j)] * x(j);
  EXPECT_NEAR(next(d - 1), rk - isi_part, 1e-12);
  EXPECT_EQ(next(4), xnew);
}

TEST(Rilmmse, ScalarDegenerateGraph) {
  const double n0 = 0.3;
  ArModel white{0, {}, n0};
  std::vector<cdouble> r{{0.4, -0.1}, {-1.2, 0.3}, {0.0, 0.9}, {0.1, 0.1}};
  std::vector<SymbolPrior> pr(4, SymbolPrior{{0.0, 0.0}, 1.0});
  const auto post = rilmmse_equalize(r, IsiProfile::identity(), white, pr);
  const double v = 1.0 / (1.0 + 1.0 / n0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_NEAR(post[k].variance, v, 1e-12);
    EXPECT_NEAR(std::abs(post[k].mean - v * r[k] / n0), 0.0, 1e-12);
  }
}

class RiVsBlock : public ::testing::TestWithParam<Readout> {};

TEST_P(RiVsBlock, MatchesIlmmseUnderExactArNoise) {
  std::mt19937_64 g(21);
  const int n = 64;
  for (int trial = 0; trial < 12; ++trial) {
    const int L = trial % 4;
    const int p = (trial / 4) % 4;
    const auto isi = random_profile(g, L);
    const auto ar = random_ar(g, p, 0.1 + 0.05 * trial);
    const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
    const auto inst = random_instance(g, isi, n, lags);
    RiLmmseOptions opt;
    opt.readout = GetParam();
    EqualizerStats st;
    const auto ri = rilmmse_equalize(inst.r, isi, ar, inst.priors, &st, opt);
    const auto ref = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    double scale = 0.0;
    for (const auto& v : ref) scale = std::max(scale, std::abs(v.mean));
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      EXPECT_LT(oracle::rel_err(ri[k].mean, ref[k].mean, scale), 1e-6) << "trial " << trial << " i " << i;
      EXPECT_LT(oracle::rel_err(ri[k].variance, ref[k].variance), 1e-6) << "trial " << trial << " i " << i;
    }
    EXPECT_EQ(st.floored, 0u);
    EXPECT_EQ(st.ridge, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Readouts, RiVsBlock, ::testing::Values(Readout::Center, Readout::Block));

TEST(Rilmmse, GenieAidedSingleUnknownSymbol) {
  std::mt19937_64 g(4);
  const int n = 40, target = 17;
  const auto isi = random_profile(g, 2);
  const auto ar = random_ar(g, 2, 0.3);
  const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
  auto inst = random_instance(g, isi, n, lags);
  for (auto& p : inst.priors) p.variance = 1e-14;
  inst.priors[target] = {{0.2, 0.1}, 0.8};
  const auto post = rilmmse_equalize(inst.r, isi, ar, inst.priors);

  // Perfect cancellation: y = r - sum_{j != target} h_j m_j = h_t x_t + n.
  Eigen::VectorXd ht = Eigen::VectorXd::Zero(n);
  Eigen::VectorXcd y(n);
  for (int k = 0; k < n; ++k) {
    cdouble acc = inst.r[static_cast<std::size_t>(k)];
    for (int j = std::max(0, k - isi.L); j <= std::min(n - 1, k + isi.L); ++j) {
      const double hkj = isi.taps[static_cast<std::size_t>(j - k + isi.L)];
      if (j == target) ht(k) = hkj;
      else acc -= hkj * inst.priors[static_cast<std::size_t>(j)].mean;
    }
    y(k) = acc;
  }
  const Eigen::MatrixXd rn = oracle::toeplitz(lags, n);
  const Eigen::VectorXd z = rn.ldlt().solve(ht);
  const double info = ht.dot(z);
  const double v = 1.0 / (1.0 / 0.8 + info);
  const cdouble m = v * (cdouble(0.2, 0.1) / 0.8 + z.cast<cdouble>().dot(y));
  EXPECT_LT(oracle::rel_err(post[target].variance, v), 1e-6);
  EXPECT_LT(oracle::rel_err(post[target].mean, m, 1.0), 1e-6);
}

TEST(Rilmmse, ReversalCovariance) {
  std::mt19937_64 g(12);
  const int n = 50;
  const auto isi = random_profile(g, 3);
  const auto ar = random_ar(g, 3, 0.2);
  const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
  const auto inst = random_instance(g, isi, n, lags);
  auto rev = inst;
  std::reverse(rev.r.begin(), rev.r.end());
  std::reverse(rev.priors.begin(), rev.priors.end());
  const auto a = rilmmse_equalize(inst.r, isi, ar, inst.priors);
  const auto b = rilmmse_equalize(rev.r, isi, ar, rev.priors);
  for (int i = 0; i < n; ++i) {
    const auto& x = a[static_cast<std::size_t>(i)];
    const auto& y = b[static_cast<std::size_t>(n - 1 - i)];
    EXPECT_LT(oracle::rel_err(x.mean, y.mean, 1.0), 1e-8);
    EXPECT_LT(oracle::rel_err(x.variance, y.variance), 1e-8);
  }
}

TEST(Rilmmse, MessagesStayPositiveSemidefinite) {
  std::mt19937_64 g(31);
  const auto isi = random_profile(g, 3);
  const auto ar = random_ar(g, 3, 0.05);
  const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, 63);
  const auto inst = random_instance(g, isi, 64, lags);
  RiLmmseOptions opt;
  opt.keep_messages = true;
  RiLmmseEqualizer eq(isi, ar, opt);
  eq.equalize(inst.r, inst.priors);
  ASSERT_EQ(eq.forward_messages().size(), 64u);
  ASSERT_EQ(eq.backward_messages().size(), 64u);
  for (const auto* log : {&eq.forward_messages(), &eq.backward_messages()})
    for (const auto& msg : *log) {
      EXPECT_LT((msg.matrix - msg.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(msg.matrix);
      const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * scale);
    }
}

TEST(Rilmmse, PosteriorVarianceNeverExceedsPrior) {
  std::mt19937_64 g(77);
  const auto isi = random_profile(g, 2);
  const auto ar = random_ar(g, 2, 0.5);
  const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, 99);
  const auto inst = random_instance(g, isi, 100, lags);
  const auto post = rilmmse_equalize(inst.r, isi, ar, inst.priors);
  for (std::size_t i = 0; i < post.size(); ++i) EXPECT_LE(post[i].variance, inst.priors[i].variance + 1e-9);
}

TEST(Rilmmse, ShortBlocks) {
  std::mt19937_64 g(2);
  const auto isi = random_profile(g, 3);
  const auto ar = random_ar(g, 2, 0.3);
  for (int n : {1, 2, 5, 7, 8}) {
    const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
    const auto inst = random_instance(g, isi, n, lags);
    const auto ri = rilmmse_equalize(inst.r, isi, ar, inst.priors);
    const auto ref = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      EXPECT_LT(oracle::rel_err(ri[k].mean, ref[k].mean, 1.0), 1e-8) << "n=" << n;
      EXPECT_LT(oracle::rel_err(ri[k].variance, ref[k].variance), 1e-8) << "n=" << n;
    }
  }
}

TEST(Equalizers, AsymmetricTapsAgreeWithOracle) {
  std::mt19937_64 g(40);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const int n = 48;
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<double> causal(static_cast<std::size_t>(2 + trial % 4));
    for (auto& v : causal) v = u(g);
    causal[0] = 1.0;
    const auto isi = IsiProfile::from_causal(causal);
    const auto ar = random_ar(g, trial % 3, 0.2);
    const auto lags = oracle::ar_lags_impulse(ar.coeffs, ar.innovation_var, n - 1);
    const auto inst = random_instance(g, isi, n, lags);
    const auto ref = dense(isi, lags, inst);
    const auto il = ilmmse_equalize(inst.r, BlockModel{isi, lags}, inst.priors);
    const auto ri = rilmmse_equalize(inst.r, isi, ar, inst.priors);
    const double scale = max_abs_mean(ref);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      EXPECT_LT(oracle::rel_err(il[k].mean, ref.mean(i), scale), 1e-9) << "trial " << trial;
      EXPECT_LT(oracle::rel_err(il[k].variance, ref.variance(i)), 1e-9) << "trial " << trial;
      EXPECT_LT(oracle::rel_err(ri[k].mean, ref.mean(i), scale), 1e-6) << "trial " << trial;
      EXPECT_LT(oracle::rel_err(ri[k].variance, ref.variance(i)), 1e-6) << "trial " << trial;
    }
  }
}
