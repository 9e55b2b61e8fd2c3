#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "bintensor/tensor.hpp"

namespace bintensor {

enum class LinkFamily { logistic, probit, laplacian };

std::string_view to_string(LinkFamily family);
// Accepts "logistic", "probit", "laplace"/"laplacian".
LinkFamily parse_link_family(std::string_view name);

// Link family plus scale sigma. f(theta) = F(theta / sigma) for a symmetric
// standard CDF F, so f(0) = 1/2 and f(-theta) = 1 - f(theta).
class LinkSpec {
 public:
  LinkSpec() = default;
  LinkSpec(LinkFamily family, double sigma);

  LinkFamily family() const { return family_; }
  double sigma() const { return sigma_; }

  double f(double theta) const;

  // log f((2y - 1) theta), finite for any finite theta.
  double log_f_signed(bool y, double theta) const;

  // d/dtheta of log_f_signed.
  double score(bool y, double theta) const;

  // Expected information fdot^2 / (f (1 - f)); symmetric in theta.
  double fisher_weight(double theta) const;

  // One pass returning log_f_signed, score and fisher_weight.
  struct Terms {
    double loglik;
    double score;
    double weight;
  };
  Terms terms(bool y, double theta) const;

  // Steepness sup |fdot / (f(1-f))| and convexity inf (fdot^2/f^2 - fddot/f)
  // over |theta| <= alpha. Exact for logistic; the published bounds otherwise.
  double steepness_L(double alpha) const;
  double convexity_gamma(double alpha) const;

  // One draw of the latent noise, P(eps < theta) = 1 - f(-theta).
  template <class Rng>
  double sample(Rng& rng) const {
    return sigma_ * standard_draw(rng);
  }

  bool operator==(const LinkSpec&) const = default;

 private:
  template <class Rng>
  double standard_draw(Rng& rng) const;

  LinkFamily family_ = LinkFamily::logistic;
  double sigma_ = 1.0;
};

// Standard-normal helpers, stable in both tails.
double log_normal_cdf(double x);
// phi(x) / Phi(x)
double normal_mills(double x);

using Rng = std::mt19937_64;

// Generator seeded through splitmix64 so nearby seeds give unrelated streams.
Rng make_rng(std::uint64_t seed);

// i.i.d. latent noise tensor for the link's error distribution.
DenseTensor sample_noise(const LinkSpec& link, Rng& rng, const Dims& dims);

template <class Rng>
double LinkSpec::standard_draw(Rng& rng) const {
  switch (family_) {
    case LinkFamily::logistic: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double p = u(rng);
      while (p <= 0.0) p = u(rng);
      return std::log(p) - std::log1p(-p);
    }
    case LinkFamily::probit: {
      std::normal_distribution<double> n(0.0, 1.0);
      return n(rng);
    }
    case LinkFamily::laplacian: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      double p = u(rng);
      while (p == -0.5) p = u(rng);
      return p < 0 ? std::log1p(2.0 * p) : -std::log1p(-2.0 * p);
    }
  }
  return 0.0;
}

}  // namespace bintensor
