#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "bintensor/links.hpp"
#include "bintensor/tensor.hpp"

namespace bintensor {

struct GlmOptions {
  int max_iterations = 100;
  double rel_tol = 1e-10;   // relative log-likelihood change
  double step_tol = 1e-8;   // Euclidean norm of the accepted step
  int max_halvings = 30;
};

// One Bernoulli regression: response y_i ~ f(x_i^T beta) over the observed rows.
struct GlmProblem {
  const Matrix& design;                    // n x R
  std::span<const std::uint8_t> response;  // n entries in {0,1}
  std::span<const std::uint8_t> observed;  // empty means every row is observed
  LinkSpec link;
  std::optional<double> coef_bound;        // bound on |x_i^T beta| over all rows
};

struct GlmSolution {
  Vector coef;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool hit_bound = false;
};

// Fisher scoring with step halving. Each step solves (X^T W X) delta = X^T s,
// halves until the log-likelihood does not drop, and is clipped so that no
// linear predictor leaves [-bound, bound]. Throws SingularDesign or NonFinite.
GlmSolution fit_glm(const GlmProblem& problem, const Vector& init, const GlmOptions& options = {});

// Row log-likelihood sum_i log f((2y_i - 1) eta_i) over observed rows.
double glm_loglik(const GlmProblem& problem, const Vector& eta);

}  // namespace bintensor
