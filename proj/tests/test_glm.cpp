#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bintensor/errors.hpp"
#include "bintensor/glm.hpp"

using namespace bintensor;

namespace {

struct Data {
  Matrix x;
  std::vector<std::uint8_t> y;
};

Data random_problem(int n, int R, std::uint64_t seed, double signal = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d{Matrix(n, R), std::vector<std::uint8_t>(n)};
  Vector beta(R);
  for (int r = 0; r < R; ++r) beta(r) = signal * g(rng);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < R; ++r) d.x(i, r) = g(rng);
  }
  const LinkSpec logistic(LinkFamily::logistic, 1.0);
  const Vector eta = d.x * beta;
  for (int i = 0; i < n; ++i) d.y[i] = u(rng) < logistic.f(eta(i)) ? 1 : 0;
  return d;
}

// Largest log-likelihood over a square grid of coefficient pairs.
double grid_max(const GlmProblem& p, double lo, double hi, int pts) {
  double best = -std::numeric_limits<double>::infinity();
  Vector b(2);
  for (int i = 0; i < pts; ++i) {
    for (int j = 0; j < pts; ++j) {
      b << lo + (hi - lo) * i / (pts - 1), lo + (hi - lo) * j / (pts - 1);
      best = std::max(best, glm_loglik(p, p.design * b));
    }
  }
  return best;
}

}  // namespace

TEST(Glm, BalancedInterceptIsExactlyZero) {
  const Matrix x = Matrix::Ones(4, 1);
  const std::vector<std::uint8_t> y{1, 0, 1, 0};
  const GlmProblem p{x, y, {}, LinkSpec(LinkFamily::logistic, 1.0), std::nullopt};
  const GlmSolution s = fit_glm(p, Vector::Zero(1));
  EXPECT_EQ(s.coef(0), 0.0);
  EXPECT_TRUE(s.converged);
  EXPECT_FALSE(s.hit_bound);
}

TEST(Glm, SeparatedResponseDivergesWithoutBound) {
  const Matrix x = Matrix::Ones(6, 1);
  const std::vector<std::uint8_t> y(6, 1);
  GlmOptions opt;
  opt.max_iterations = 25;
  const GlmProblem p{x, y, {}, LinkSpec(LinkFamily::logistic, 1.0), std::nullopt};
  const GlmSolution s = fit_glm(p, Vector::Zero(1), opt);
  EXPECT_FALSE(s.hit_bound);
  EXPECT_EQ(s.iterations, opt.max_iterations);
  EXPECT_GT(s.coef(0), 10.0);
  // The likelihood is monotone in the coefficient, so more iterations only help.
  opt.max_iterations = 10;
  EXPECT_LT(fit_glm(p, Vector::Zero(1), opt).loglik, s.loglik);
}

TEST(Glm, SeparatedResponseStopsAtBound) {
  Matrix x(6, 1);
  x << 1, 0.5, 0.25, 1, 0.75, 0.1;
  const std::vector<std::uint8_t> y(6, 1);
  const GlmProblem p{x, y, {}, LinkSpec(LinkFamily::logistic, 1.0), 5.0};
  const GlmSolution s = fit_glm(p, Vector::Zero(1));
  EXPECT_TRUE(s.hit_bound);
  EXPECT_NEAR((x * s.coef).cwiseAbs().maxCoeff(), 5.0, 1e-12);
}

TEST(Glm, BeatsEveryGridPoint) {
  for (int trial = 0; trial < 20; ++trial) {
    const Data d = random_problem(8, 2, 100 + trial);
    const GlmProblem p{d.x, d.y, {}, LinkSpec(LinkFamily::logistic, 1.0), std::nullopt};
    const GlmSolution s = fit_glm(p, Vector::Zero(2));
    EXPECT_GE(s.loglik, grid_max(p, -3.0, 3.0, 201) - 1e-8) << "trial " << trial;
  }
}

TEST(Glm, AscentAcrossIterations) {
  for (auto fam : {LinkFamily::logistic, LinkFamily::probit, LinkFamily::laplacian}) {
    const Data d = random_problem(60, 3, 7, 2.0);
    const GlmProblem p{d.x, d.y, {}, LinkSpec(fam, 0.8), std::nullopt};
    double prev = glm_loglik(p, Vector::Zero(60));
    for (int it = 1; it <= 12; ++it) {
      GlmOptions opt;
      opt.max_iterations = it;
      const double ll = fit_glm(p, Vector::Zero(3), opt).loglik;
      EXPECT_GE(ll, prev - 1e-12) << to_string(fam) << " iteration " << it;
      prev = ll;
    }
  }
}

TEST(Glm, GradientVanishesAtConvergence) {
  for (auto fam : {LinkFamily::logistic, LinkFamily::probit, LinkFamily::laplacian}) {
    const Data d = random_problem(80, 3, 13);
    const LinkSpec link(fam, 1.0);
    const GlmProblem p{d.x, d.y, {}, link, std::nullopt};
    const GlmSolution s = fit_glm(p, Vector::Zero(3));
    ASSERT_TRUE(s.converged);
    const Vector eta = d.x * s.coef;
    Vector g = Vector::Zero(3);
    for (int i = 0; i < 80; ++i) g += d.x.row(i).transpose() * link.score(d.y[i] != 0, eta(i));
    EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-6 * 80) << to_string(fam);
  }
}

TEST(Glm, LogisticAgreesWithGradientAscent) {
  const Data d = random_problem(50, 3, 17);
  const LinkSpec link(LinkFamily::logistic, 1.0);
  const GlmProblem p{d.x, d.y, {}, link, std::nullopt};
  const GlmSolution s = fit_glm(p, Vector::Zero(3));

  // Fixed step below 4 / lambda_max(X^T X) converges for the logistic loss.
  const double L = (d.x.transpose() * d.x).eigenvalues().real().maxCoeff() / 4.0;
  Vector b = Vector::Zero(3);
  for (int it = 0; it < 200000; ++it) {
    const Vector eta = d.x * b;
    Vector g = Vector::Zero(3);
    for (int i = 0; i < 50; ++i) g += d.x.row(i).transpose() * (d.y[i] - link.f(eta(i)));
    b += g / L;
    if (g.norm() < 1e-12) break;
  }
  EXPECT_LE((s.coef - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Glm, FlippingResponsesNegatesCoefficientsExactly) {
  for (auto fam : {LinkFamily::logistic, LinkFamily::probit, LinkFamily::laplacian}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Data d = random_problem(40, 3, 200 + trial, 1.5);
      std::vector<std::uint8_t> flipped(d.y.size());
      for (std::size_t i = 0; i < d.y.size(); ++i) flipped[i] = 1 - d.y[i];
      const GlmProblem p{d.x, d.y, {}, LinkSpec(fam, 1.0), std::nullopt};
      const GlmProblem q{d.x, flipped, {}, LinkSpec(fam, 1.0), std::nullopt};
      Vector init(3);
      init << 0.1, -0.2, 0.05;
      const GlmSolution a = fit_glm(p, init);
      const GlmSolution b = fit_glm(q, -init);
      for (int r = 0; r < 3; ++r) EXPECT_EQ(a.coef(r), -b.coef(r));
      EXPECT_EQ(a.loglik, b.loglik);
      EXPECT_EQ(a.iterations, b.iterations);
    }
  }
}

TEST(Glm, UnobservedRowsAreIgnored) {
  Data d = random_problem(30, 2, 31);
  std::vector<std::uint8_t> obs(30, 1);
  for (int i = 0; i < 30; i += 3) obs[i] = 0;
  const GlmProblem p{d.x, d.y, obs, LinkSpec(LinkFamily::probit, 1.0), std::nullopt};
  const GlmSolution a = fit_glm(p, Vector::Zero(2));
  for (int i = 0; i < 30; i += 3) d.y[i] = 1 - d.y[i];
  const GlmProblem q{d.x, d.y, obs, LinkSpec(LinkFamily::probit, 1.0), std::nullopt};
  const GlmSolution b = fit_glm(q, Vector::Zero(2));
  EXPECT_EQ(a.coef, b.coef);
  EXPECT_EQ(a.loglik, b.loglik);
}

TEST(Glm, DegenerateDesigns) {
  const Matrix x = Matrix::Zero(5, 2);
  const std::vector<std::uint8_t> y{1, 0, 1, 1, 0};
  const GlmProblem p{x, y, {}, LinkSpec(LinkFamily::logistic, 1.0), std::nullopt};
  // Zero design gives a zero gradient, which is already stationary.
  const GlmSolution s = fit_glm(p, Vector::Zero(2));
  EXPECT_TRUE(s.converged);

  Matrix dup(5, 2);
  dup.col(0).setOnes();
  dup.col(1).setOnes();
  const GlmProblem q{dup, y, {}, LinkSpec(LinkFamily::logistic, 1.0), std::nullopt};
  // Collinear columns: only the sum is identified, and it must hit logit(3/5).
  const GlmSolution t = fit_glm(q, Vector::Zero(2));
  EXPECT_NEAR(t.coef(0) + t.coef(1), std::log(1.5), 1e-8);
  EXPECT_NEAR(t.coef(0), t.coef(1), 1e-6);
}

TEST(Glm, VanishingInformationIsSingular) {
  const Matrix x = Matrix::Ones(2, 1);
  const std::vector<std::uint8_t> y{1, 1};
  // Far on the wrong side the Laplacian weight underflows while the score stays 1.
  const GlmProblem p{x, y, {}, LinkSpec(LinkFamily::laplacian, 1.0), std::nullopt};
  EXPECT_THROW(fit_glm(p, Vector::Constant(1, -1000.0)), VanishingInformation);
}
