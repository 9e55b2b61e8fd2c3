#include "bintensor/links.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
// Below this argument log Phi and the Mills ratio use the asymptotic series.
constexpr double kProbitTail = -8.0;

// Phi(x) = phi(x)/(-x) * S(x) for x < 0, S = sum_n (-1)^n (2n-1)!! / x^{2n}.
double normal_tail_series(double x) {
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 40; ++n) {
    const double next = -term * (2.0 * n - 1.0) * inv_x2;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// log F(u) and F'(u)/F(u) for the standard member of each family.
struct LogRatio {
  double log_cdf;
  double ratio;
};

LogRatio logistic_terms(double u) {
  if (u >= 0) {
    const double e = std::exp(-u);
    return {-std::log1p(e), e / (1.0 + e)};
  }
  const double e = std::exp(u);
  return {u - std::log1p(e), 1.0 / (1.0 + e)};
}

LogRatio probit_terms(double u) { return {log_normal_cdf(u), normal_mills(u)}; }

LogRatio laplace_terms(double u) {
  if (u < 0) return {-std::numbers::ln2 + u, 1.0};
  const double e = std::exp(-u);
  return {std::log1p(-0.5 * e), e / (2.0 - e)};
}

// F'(x)^2 / (F(x)(1 - F(x))) for the standard member; symmetric in x.
double standard_weight(LinkFamily family, double x) {
  const double a = std::abs(x);
  switch (family) {
    case LinkFamily::logistic: {
      const double e = std::exp(-a);
      return e / ((1.0 + e) * (1.0 + e));
    }
    case LinkFamily::probit:
      return normal_mills(a) * normal_mills(-a);
    case LinkFamily::laplacian: {
      const double e = std::exp(-a);
      return e / (2.0 - e);
    }
  }
  return 0.0;
}

LogRatio standard_terms(LinkFamily family, double u) {
  switch (family) {
    case LinkFamily::logistic:
      return logistic_terms(u);
    case LinkFamily::probit:
      return probit_terms(u);
    case LinkFamily::laplacian:
      return laplace_terms(u);
  }
  return {0.0, 0.0};
}

}  // namespace

double log_normal_cdf(double x) {
  if (x < kProbitTail) {
    return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log(normal_tail_series(x));
  }
  if (x > 0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  return std::log(normal_cdf(x));
}

double normal_mills(double x) {
  if (x < kProbitTail) return -x / normal_tail_series(x);
  return normal_pdf(x) / normal_cdf(x);
}

std::string_view to_string(LinkFamily family) {
  switch (family) {
    case LinkFamily::logistic:
      return "logistic";
    case LinkFamily::probit:
      return "probit";
    case LinkFamily::laplacian:
      return "laplace";
  }
  return "?";
}

LinkFamily parse_link_family(std::string_view name) {
  if (name == "logistic" || name == "logit") return LinkFamily::logistic;
  if (name == "probit") return LinkFamily::probit;
  if (name == "laplace" || name == "laplacian") return LinkFamily::laplacian;
  throw ParseError("unknown link family '" + std::string(name) + "'");
}

LinkSpec::LinkSpec(LinkFamily family, double sigma) : family_(family), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("link scale sigma must be positive");
}

double LinkSpec::f(double theta) const {
  const double x = theta / sigma_;
  switch (family_) {
    case LinkFamily::logistic:
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case LinkFamily::probit:
      return normal_cdf(x);
    case LinkFamily::laplacian:
      return x < 0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
  }
  return 0.5;
}

double LinkSpec::log_f_signed(bool y, double theta) const {
  const double u = (y ? theta : -theta) / sigma_;
  switch (family_) {
    case LinkFamily::logistic:
      return u >= 0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
    case LinkFamily::probit:
      return log_normal_cdf(u);
    case LinkFamily::laplacian:
      return u < 0 ? -std::numbers::ln2 + u : std::log1p(-0.5 * std::exp(-u));
  }
  return 0.0;
}

double LinkSpec::score(bool y, double theta) const {
  const double u = (y ? theta : -theta) / sigma_;
  const double r = standard_terms(family_, u).ratio / sigma_;
  return y ? r : -r;
}

double LinkSpec::fisher_weight(double theta) const {
  return standard_weight(family_, theta / sigma_) / (sigma_ * sigma_);
}

LinkSpec::Terms LinkSpec::terms(bool y, double theta) const {
  const double u = (y ? theta : -theta) / sigma_;
  const LogRatio lr = standard_terms(family_, u);
  const double r = lr.ratio / sigma_;
  return {lr.log_cdf, y ? r : -r, standard_weight(family_, u) / (sigma_ * sigma_)};
}

double LinkSpec::steepness_L(double alpha) const {
  const double a = alpha / sigma_;
  switch (family_) {
    case LinkFamily::logistic:
      return 1.0 / sigma_;
    case LinkFamily::probit:
      return 2.0 / sigma_ * (a + 1.0);
    case LinkFamily::laplacian:
      return 2.0 / sigma_;
  }
  return 0.0;
}

double LinkSpec::convexity_gamma(double alpha) const {
  const double a = alpha / sigma_;
  const double s2 = sigma_ * sigma_;
  switch (family_) {
    case LinkFamily::logistic: {
      const double e = std::exp(-a);
      return e / ((1.0 + e) * (1.0 + e) * s2);
    }
    case LinkFamily::probit:
      return (a + 1.0 / 6.0) * std::exp(-a * a) / (std::sqrt(2.0 * std::numbers::pi) * s2);
    case LinkFamily::laplacian:
      return std::exp(-a) / (2.0 * s2);
  }
  return 0.0;
}

Rng make_rng(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

DenseTensor sample_noise(const LinkSpec& link, Rng& rng, const Dims& dims) {
  DenseTensor out(dims);
  for (double& v : out.values()) v = link.sample(rng);
  return out;
}

}  // namespace bintensor
