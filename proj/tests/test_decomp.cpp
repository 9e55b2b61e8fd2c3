#include <gtest/gtest.h>

#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bintensor/decomp.hpp"
#include "bintensor/errors.hpp"
#include "bintensor/sim.hpp"

using namespace bintensor;

namespace {

const LinkFamily kFamilies[] = {LinkFamily::logistic, LinkFamily::probit, LinkFamily::laplacian};

BinaryTensor random_binary(const Dims& dims, std::uint64_t seed, double rate = 0.5) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(rate);
  DenseTensor v(dims);
  for (double& x : v.values()) x = b(rng) ? 1.0 : 0.0;
  return BinaryTensor(v);
}

ObservationMask random_mask(const Dims& dims, std::uint64_t seed, double keep) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(keep);
  ObservationMask m(dims, false);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, b(rng));
  return m;
}

struct Instance {
  DenseTensor theta;
  BinaryTensor y;
};

Instance latent_instance(std::size_t d, std::size_t R, double sigma, LinkFamily gen, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  DenseTensor theta = gen_cp_signal({d, d, d}, R, rng);
  BinaryTensor y = quantize_latent(theta, LinkSpec(gen, sigma), rng);
  return {std::move(theta), std::move(y)};
}

FitConfig small_config(std::size_t R, LinkSpec link, std::uint64_t seed = 0) {
  FitConfig cfg;
  cfg.rank = R;
  cfg.link = link;
  cfg.seed = seed;
  cfg.n_starts = 2;
  return cfg;
}

// Direct sum, independent of the blocked implementation.
double naive_loglik(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y.observed(i)) continue;
    const double p = link.f(theta[i]);
    s += y.label(i) ? std::log(p) : std::log1p(-p);
  }
  return s;
}

class ThreadCount {
 public:
  explicit ThreadCount(int n) {
#ifdef _OPENMP
    saved_ = omp_get_max_threads();
    omp_set_num_threads(n);
#else
    (void)n;
#endif
  }
  ~ThreadCount() {
#ifdef _OPENMP
    omp_set_num_threads(saved_);
#endif
  }

 private:
  int saved_ = 1;
};

}  // namespace

TEST(LogLikelihood, ZeroThetaIsHalfPerCell) {
  const BinaryTensor y = random_binary({4, 5, 6}, 1);
  for (auto fam : kFamilies) {
    EXPECT_NEAR(log_likelihood(y, DenseTensor({4, 5, 6}), LinkSpec(fam, 1.3)), 120 * std::log(0.5), 1e-10);
  }
}

TEST(LogLikelihood, SingleCell) {
  const BinaryTensor y(DenseTensor({1, 1}, 1.0));
  EXPECT_NEAR(log_likelihood(y, DenseTensor({1, 1}, std::log(3.0)), LinkSpec(LinkFamily::logistic, 1.0)),
              std::log(0.75), 1e-15);
}

TEST(LogLikelihood, MaskingHalfTheCellsHalvesTheValue) {
  ObservationMask m({4, 4, 4}, false);
  for (std::size_t i = 0; i < 64; i += 2) m.set(i, true);
  const BinaryTensor full = random_binary({4, 4, 4}, 2);
  const BinaryTensor half(full.base, m);
  const DenseTensor zero({4, 4, 4});
  const LinkSpec link(LinkFamily::probit, 1.0);
  EXPECT_NEAR(log_likelihood(half, zero, link), 0.5 * log_likelihood(full, zero, link), 1e-12);
}

TEST(LogLikelihood, MatchesNaiveSum) {
  Rng rng = make_rng(5);
  const DenseTensor theta = gen_cp_signal({9, 8, 7}, 2, rng);
  BinaryTensor y = random_binary({9, 8, 7}, 3);
  y.mask = random_mask({9, 8, 7}, 4, 0.7);
  for (auto fam : kFamilies) {
    const LinkSpec link(fam, 0.4);
    EXPECT_NEAR(log_likelihood(y, theta, link), naive_loglik(y, theta, link), 1e-9);
  }
}

TEST(LogLikelihood, FlipInvarianceIsExact) {
  for (auto fam : kFamilies) {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng = make_rng(100 + trial);
      DenseTensor theta = gen_cp_signal({6, 7, 5}, 2, rng);
      for (double& v : theta.values()) v *= 3.0;
      const BinaryTensor y = random_binary({6, 7, 5}, 200 + trial);
      DenseTensor flipped = y.base;
      DenseTensor neg = theta;
      for (std::size_t i = 0; i < y.size(); ++i) {
        flipped[i] = 1.0 - flipped[i];
        neg[i] = -neg[i];
      }
      const LinkSpec link(fam, 0.9);
      EXPECT_EQ(log_likelihood(BinaryTensor(flipped), neg, link), log_likelihood(y, theta, link));
    }
  }
}

TEST(LogLikelihood, ParallelEqualsSerialBitwise) {
  ThreadCount threads(4);
  Rng rng = make_rng(6);
  const DenseTensor theta = gen_cp_signal({30, 25, 20}, 3, rng);
  BinaryTensor y = random_binary({30, 25, 20}, 8);
  y.mask = random_mask({30, 25, 20}, 9, 0.8);
  for (auto fam : kFamilies) {
    const LinkSpec link(fam, 0.5);
    EXPECT_EQ(log_likelihood(y, theta, link), serial::log_likelihood(y, theta, link));
  }
}

TEST(UpdateMode, ParallelEqualsSerialBitwise) {
  ThreadCount threads(4);
  const Instance inst = latent_instance(12, 2, 0.5, LinkFamily::probit, 10);
  BinaryTensor y = inst.y;
  y.mask = random_mask(y.dims(), 11, 0.85);
  Rng rng = make_rng(12);
  const CpFactors f = random_factors(y.dims(), 2, 0.1, rng);
  const FitConfig cfg = small_config(2, LinkSpec(LinkFamily::logistic, 0.3));
  for (std::size_t k = 0; k < 3; ++k) {
    const CpFactors a = update_mode(y, f, k, cfg);
    const CpFactors b = serial::update_mode(y, f, k, cfg);
    for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(a.factors[m], b.factors[m]);
  }
}

TEST(UpdateMode, TrueFactorsOfSeparableInstanceAreFixed) {
  // theta = alpha * a o b o c with +-1 patterns; y = sign pattern; every
  // predictor already sits on the bound with the right sign.
  Vector a(4), b(4), c(4);
  a << 1, -1, 1, 1;
  b << -1, 1, 1, -1;
  c << 1, 1, -1, 1;
  const double alpha = 2.0;
  const CpFactors truth({a, b, c * alpha});
  const DenseTensor theta = cp_reconstruct(truth);
  DenseTensor yv(theta.dims());
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = theta[i] > 0 ? 1.0 : 0.0;
  const BinaryTensor y(yv);
  FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 1.0));
  cfg.alpha = alpha;
  for (std::size_t k = 0; k < 3; ++k) {
    const CpFactors next = update_mode(y, truth, k, cfg);
    EXPECT_LE((next.factors[k] - truth.factors[k]).cwiseAbs().maxCoeff(), 1e-12) << "mode " << k;
  }
}

TEST(UpdateMode, SaturatedRowsKeepTheirValues) {
  Vector a(4), b(4), c(4);
  a << 1, -1, 1, 1;
  b << -1, 1, 1, -1;
  c << 1, 1, -1, 1;
  const CpFactors f({a, b, c});
  const DenseTensor theta = cp_reconstruct(f);
  DenseTensor yv(theta.dims());
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = theta[i] > 0 ? 1.0 : 0.0;
  const BinaryTensor y(yv);
  // |theta| / sigma = 1000: every logistic weight underflows to zero.
  const FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 1e-3));
  for (std::size_t k = 0; k < 3; ++k) {
    const CpFactors next = update_mode(y, f, k, cfg);
    EXPECT_EQ(next.factors[k], f.factors[k]) << "mode " << k;
  }
}

TEST(UpdateMode, NeverLowersTheObjective) {
  const Instance inst = latent_instance(10, 2, 0.3, LinkFamily::probit, 20);
  Rng rng = make_rng(21);
  CpFactors f = random_factors(inst.y.dims(), 2, 0.1, rng);
  const FitConfig cfg = small_config(2, LinkSpec(LinkFamily::probit, 0.3));
  double ll = log_likelihood(inst.y, cp_reconstruct(f), cfg.link);
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (std::size_t k = 0; k < 3; ++k) {
      f = update_mode(inst.y, f, k, cfg);
      const double next = log_likelihood(inst.y, cp_reconstruct(f), cfg.link);
      EXPECT_GE(next, ll - 1e-9 * std::abs(ll));
      ll = next;
    }
  }
}

TEST(UpdateMode, UnobservedCellsHaveNoInfluence) {
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = latent_instance(8, 2, 0.5, LinkFamily::logistic, 30 + trial);
    const ObservationMask mask = random_mask(inst.y.dims(), 40 + trial, 0.7);
    BinaryTensor a(inst.y.base, mask);
    DenseTensor other = inst.y.base;
    std::mt19937_64 rng(50 + trial);
    for (std::size_t i = 0; i < other.size(); ++i) {
      if (!mask.observed(i)) other[i] = (rng() & 1) ? 1.0 : 0.0;
    }
    BinaryTensor b(other, mask);
    Rng frng = make_rng(60 + trial);
    const CpFactors f = random_factors(a.dims(), 2, 0.1, frng);
    const FitConfig cfg = small_config(2, LinkSpec(LinkFamily::logistic, 0.5));
    for (std::size_t k = 0; k < 3; ++k) {
      const CpFactors ua = update_mode(a, f, k, cfg);
      const CpFactors ub = update_mode(b, f, k, cfg);
      EXPECT_EQ(ua.factors[k], ub.factors[k]);
    }
  }
}

TEST(LineSearch, StationaryEndpointGivesGammaZero) {
  const Instance inst = latent_instance(10, 1, 0.3, LinkFamily::logistic, 70);
  const FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 0.3));
  const FitResult best = fit(inst.y, cfg);
  // previous = best with zero weights: the segment is theta(gamma) = (1 - gamma) theta_hat.
  CpFactors previous = best.factors;
  previous.factors.back().setZero();
  const LineSearchResult ls = line_search(inst.y, previous, best.factors, cfg);
  EXPECT_EQ(ls.gamma, 0.0);
  EXPECT_EQ(ls.loglik, log_likelihood(inst.y, cp_reconstruct(best.factors), cfg.link));
}

TEST(LineSearch, GammaOneRecoversPreviousExactly) {
  const Instance inst = latent_instance(10, 1, 0.3, LinkFamily::logistic, 71);
  const FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 0.3));
  const FitResult best = fit(inst.y, cfg);
  CpFactors worse = best.factors;
  worse.factors.back().setZero();
  const LineSearchResult ls = line_search(inst.y, best.factors, worse, cfg);
  EXPECT_EQ(ls.gamma, 1.0);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(ls.blended.factors[k], best.factors.factors[k]);
  EXPECT_EQ(ls.loglik, log_likelihood(inst.y, cp_reconstruct(best.factors), cfg.link));
}

TEST(LineSearch, CoarseGridWithinOneSpacingOfFineGrid) {
  for (int trial = 0; trial < 8; ++trial) {
    const Instance inst = latent_instance(9, 2, 0.4, LinkFamily::probit, 80 + trial);
    Rng rng = make_rng(90 + trial);
    CpFactors prev = random_factors(inst.y.dims(), 2, 1.0, rng);
    CpFactors next = random_factors(inst.y.dims(), 2, 1.0, rng);
    const FitConfig cfg = small_config(2, LinkSpec(LinkFamily::probit, 0.4));
    const LineSearchResult ls = line_search(inst.y, prev, next, cfg);

    const int fine = 2001;
    std::vector<double> ll(fine);
    for (int i = 0; i < fine; ++i) {
      const double g = static_cast<double>(i) / (fine - 1);
      CpFactors b = next;
      for (std::size_t k = 0; k < 3; ++k) b.factors[k] = g * prev.factors[k] + (1 - g) * next.factors[k];
      ll[i] = log_likelihood(inst.y, cp_reconstruct(b), cfg.link);
    }
    const double fine_max = *std::max_element(ll.begin(), ll.end());
    // Largest change of the objective across any window of one coarse spacing.
    const int window = (fine - 1) / (cfg.line_search_grid - 1);
    double spread = 0.0;
    for (int i = 0; i + window < fine; ++i) {
      const auto [lo, hi] = std::minmax_element(ll.begin() + i, ll.begin() + i + window + 1);
      spread = std::max(spread, *hi - *lo);
    }
    EXPECT_LE(ls.loglik, fine_max + 1e-9);
    EXPECT_GE(ls.loglik, fine_max - spread);
  }
}

TEST(LineSearch, SkipsInfeasiblePoints) {
  const Instance inst = latent_instance(6, 1, 0.5, LinkFamily::logistic, 95);
  Rng rng = make_rng(96);
  CpFactors small = random_factors(inst.y.dims(), 1, 0.1, rng);
  CpFactors big = small;
  big.factors.back() *= 1e6;
  FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 0.5));
  cfg.alpha = max_norm(cp_reconstruct(small)) * 1.5;
  const LineSearchResult ls = line_search(inst.y, small, big, cfg);
  EXPECT_LE(max_norm(cp_reconstruct(ls.blended)), cfg.alpha);
  cfg.alpha = max_norm(cp_reconstruct(small)) * 0.5;
  EXPECT_THROW(line_search(inst.y, small, big, cfg), AllInfeasible);
}

TEST(Normalize, Convention) {
  Rng rng = make_rng(101);
  std::vector<Matrix> mats;
  std::uniform_real_distribution<double> u(-2, 2);
  for (int d : {5, 6, 7}) {
    Matrix a(d, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
    mats.push_back(a);
  }
  const CpFactors raw(mats);
  const CpFactors n = normalize(raw);
  for (std::size_t k = 0; k < 2; ++k) {
    for (int r = 0; r < 3; ++r) {
      EXPECT_NEAR(n.factors[k].col(r).norm(), 1.0, 1e-12);
      Eigen::Index peak = 0;
      n.factors[k].col(r).cwiseAbs().maxCoeff(&peak);
      EXPECT_GT(n.factors[k](peak, r), 0.0);
    }
  }
  const Vector w = n.weights();
  for (int r = 0; r + 1 < 3; ++r) EXPECT_GE(w(r), w(r + 1));

  const DenseTensor before = cp_reconstruct(raw);
  const DenseTensor after = cp_reconstruct(n);
  EXPECT_LT(frobenius_norm(after - before) / frobenius_norm(before), 1e-12);

  const CpFactors twice = normalize(n);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE((twice.factors[k] - n.factors[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, ScalingIndeterminacyIsAbsorbed) {
  Rng rng = make_rng(102);
  const CpFactors f = random_factors({4, 5, 6}, 2, 1.0, rng);
  CpFactors scaled = f;
  scaled.factors[0].col(1) *= 7.0;
  scaled.factors[2].col(1) /= 7.0;
  const CpFactors a = normalize(scaled);
  const DenseTensor want = cp_reconstruct(f);
  EXPECT_LT(frobenius_norm(cp_reconstruct(a) - want) / frobenius_norm(want), 1e-12);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE((a.factors[k] - f.factors[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, ZeroColumnIsDegenerate) {
  Rng rng = make_rng(103);
  CpFactors f = random_factors({4, 5, 6}, 2, 1.0, rng);
  f.factors[1].col(0).setZero();
  EXPECT_THROW(normalize(f), DegenerateColumn);
}

TEST(Fit, TraceIsNonDecreasingAndThetaMatchesFactors) {
  for (auto fam : kFamilies) {
    for (int trial = 0; trial < 3; ++trial) {
      const Instance inst = latent_instance(10, 2, 0.4, fam, 110 + trial);
      FitConfig cfg = small_config(2, LinkSpec(fam, 0.4), trial);
      const FitResult r = fit(inst.y, cfg);
      for (std::size_t t = 1; t < r.loglik_trace.size(); ++t) {
        EXPECT_GE(r.loglik_trace[t], r.loglik_trace[t - 1] - 1e-10);
      }
      EXPECT_EQ(r.final_loglik, r.loglik_trace.back());
      const DenseTensor again = cp_reconstruct(r.factors);
      EXPECT_LE(max_norm(again - r.theta_hat), 1e-10);
    }
  }
}

TEST(Fit, BoundedFitRespectsAlpha) {
  const Instance inst = latent_instance(10, 1, 0.05, LinkFamily::logistic, 120);
  FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 0.05));
  cfg.alpha = 0.5;
  const FitResult r = fit(inst.y, cfg);
  EXPECT_LE(max_norm(r.theta_hat), cfg.alpha + 1e-8);
  for (std::size_t t = 1; t < r.loglik_trace.size(); ++t) EXPECT_GE(r.loglik_trace[t], r.loglik_trace[t - 1] - 1e-10);
}

TEST(Fit, ReachesTheTrueLikelihoodInMostSeeds) {
  const double sigma = std::pow(10.0, -0.5);
  int wins = 0;
  for (int s = 0; s < 30; ++s) {
    const Instance inst = latent_instance(20, 1, sigma, LinkFamily::probit, 1000 + s);
    const LinkSpec link(LinkFamily::probit, sigma);
    const FitResult r = fit(inst.y, small_config(1, link, s));
    if (r.final_loglik >= log_likelihood(inst.y, inst.theta, link)) ++wins;
  }
  EXPECT_GE(wins, 24);
}

TEST(Fit, WinningStartIsReproducible) {
  const Instance inst = latent_instance(10, 2, 0.4, LinkFamily::logistic, 130);
  FitConfig cfg = small_config(2, LinkSpec(LinkFamily::logistic, 0.4), 17);
  cfg.n_starts = 3;
  const FitResult a = fit(inst.y, cfg);
  FitConfig again = cfg;
  again.seed = cfg.seed + static_cast<std::uint64_t>(a.start_index);
  again.n_starts = 1;
  const FitResult b = fit(inst.y, again);
  EXPECT_EQ(a.loglik_trace, b.loglik_trace);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.factors.factors[k], b.factors.factors[k]);
  EXPECT_EQ(a.bic, b.bic);
}

TEST(Fit, FlippedDataWithNegatedStartGivesSameTrace) {
  for (auto fam : kFamilies) {
    const Instance inst = latent_instance(8, 2, 0.5, fam, 140);
    DenseTensor flipped = inst.y.base;
    for (double& v : flipped.values()) v = 1.0 - v;
    const FitConfig cfg = small_config(2, LinkSpec(fam, 0.5));
    Rng rng = make_rng(141);
    const CpFactors init = random_factors(inst.y.dims(), 2, 0.1, rng);
    CpFactors neg = init;
    neg.factors.back() = -neg.factors.back();
    const FitResult a = fit_from(inst.y, init, cfg);
    const FitResult b = fit_from(BinaryTensor(flipped), neg, cfg);
    ASSERT_EQ(a.loglik_trace.size(), b.loglik_trace.size());
    for (std::size_t t = 0; t < a.loglik_trace.size(); ++t) EXPECT_NEAR(a.loglik_trace[t], b.loglik_trace[t], 1e-8);
    for (std::size_t i = 0; i < a.theta_hat.size(); ++i) EXPECT_NEAR(a.theta_hat[i], -b.theta_hat[i], 1e-8);
  }
}

TEST(Fit, UnobservedCellsChangeNothing) {
  const Instance inst = latent_instance(8, 2, 0.5, LinkFamily::probit, 150);
  const ObservationMask mask = random_mask(inst.y.dims(), 151, 0.75);
  DenseTensor other = inst.y.base;
  for (std::size_t i = 0; i < other.size(); ++i) {
    if (!mask.observed(i)) other[i] = 1.0 - other[i];
  }
  const FitConfig cfg = small_config(2, LinkSpec(LinkFamily::probit, 0.5), 3);
  const FitResult a = fit(BinaryTensor(inst.y.base, mask), cfg);
  const FitResult b = fit(BinaryTensor(other, mask), cfg);
  EXPECT_EQ(a.loglik_trace, b.loglik_trace);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.bic, b.bic);
}

TEST(Fit, EmptySlabIsRejectedBeforeFitting) {
  const Instance inst = latent_instance(5, 1, 0.5, LinkFamily::logistic, 160);
  ObservationMask mask(inst.y.dims(), true);
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t k = 0; k < 5; ++k) mask.set(3 * 25 + j * 5 + k, false);
  }
  EXPECT_THROW(fit(BinaryTensor(inst.y.base, mask), small_config(1, LinkSpec())), EmptySlab);
}

TEST(Fit, InvalidConfigIsRejected) {
  const Instance inst = latent_instance(5, 1, 0.5, LinkFamily::logistic, 161);
  FitConfig cfg = small_config(1, LinkSpec());
  cfg.rank = 0;
  EXPECT_THROW(fit(inst.y, cfg), InvalidArgument);
  cfg = small_config(1, LinkSpec());
  cfg.tol = 0;
  EXPECT_THROW(fit(inst.y, cfg), InvalidArgument);
}

TEST(Bic, EffectiveParameterCounts) {
  EXPECT_EQ(effective_params({20, 20, 20}, 5), 290u);
  EXPECT_EQ(effective_params({10, 10}, 2), 36u);
  EXPECT_EQ(effective_params({2, 2, 2}, 1), 4u);
  EXPECT_THROW(effective_params({2, 2, 2}, 0), Error);
}

TEST(Bic, PenaltyIsStrictlyMonotone) {
  const BinaryTensor y = random_binary({6, 6, 6}, 170);
  FitResult r;
  r.final_loglik = -100.0;
  r.factors = CpFactors({Matrix::Ones(6, 2), Matrix::Ones(6, 2), Matrix::Ones(6, 2)});
  const double two = bic(y, r);
  r.factors = CpFactors({Matrix::Ones(6, 3), Matrix::Ones(6, 3), Matrix::Ones(6, 3)});
  const double three = bic(y, r);
  EXPECT_GT(three, two);
  EXPECT_DOUBLE_EQ(two, 200.0 + static_cast<double>(effective_params({6, 6, 6}, 2)) * std::log(216.0));
}

TEST(Bic, UsesObservedCellCount) {
  BinaryTensor y = random_binary({6, 6, 6}, 171);
  y.mask = random_mask({6, 6, 6}, 172, 0.5);
  FitResult r;
  r.final_loglik = -50.0;
  r.factors = CpFactors({Matrix::Ones(6, 1), Matrix::Ones(6, 1), Matrix::Ones(6, 1)});
  EXPECT_DOUBLE_EQ(bic(y, r), 100.0 + 16.0 * std::log(static_cast<double>(y.num_observed())));
}

TEST(SelectRank, TableCoversRangeAndPicksArgmin) {
  const Instance inst = latent_instance(10, 2, 0.3, LinkFamily::logistic, 180);
  const FitConfig cfg = small_config(1, LinkSpec(LinkFamily::logistic, 0.3));
  const RankSelection sel = select_rank(inst.y, cfg, 1, 4);
  ASSERT_EQ(sel.table.size(), 4u);
  std::size_t argmin = 0;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& row : sel.table) {
    ASSERT_TRUE(row.ok);
    if (row.bic < lo) {
      lo = row.bic;
      argmin = row.rank;
    }
  }
  EXPECT_EQ(sel.best_rank, argmin);
  EXPECT_EQ(sel.best()->factors.rank(), argmin);
  EXPECT_THROW(select_rank(inst.y, cfg, 3, 2), InvalidArgument);
}

TEST(PredictProba, AppliesTheLink) {
  FitResult r;
  r.theta_hat = DenseTensor({2, 3}, std::vector<double>{0.0, -1.0, 1.0, 2.0, -3.5, 0.25});
  for (auto fam : kFamilies) {
    const LinkSpec link(fam, 0.7);
    const DenseTensor p = predict_proba(r, link);
    EXPECT_EQ(p[0], 0.5);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], link.f(r.theta_hat[i]));
    EXPECT_LT(p[1], p[0]);
    EXPECT_LT(p[0], p[2]);
    EXPECT_LT(p[2], p[3]);
  }
}
