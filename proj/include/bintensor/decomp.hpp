#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bintensor/glm.hpp"
#include "bintensor/links.hpp"
#include "bintensor/tensor.hpp"

namespace bintensor {

struct FitConfig {
  std::size_t rank = 1;
  double alpha = std::numeric_limits<double>::infinity();  // max-norm bound on Theta
  LinkSpec link;
  double tol = 1e-4;  // relative objective increase that stops the sweeps
  int max_iters = 100;
  int n_starts = 5;
  double init_scale = 0.1;
  int line_search_grid = 21;
  std::uint64_t seed = 0;
  GlmOptions glm;

  bool bounded() const { return std::isfinite(alpha); }
  void validate() const;
};

struct FitResult {
  CpFactors factors;
  DenseTensor theta_hat;
  std::vector<double> loglik_trace;  // entry 0 is the initial objective
  double final_loglik = 0.0;
  double bic = 0.0;
  bool converged = false;
  int n_iterations = 0;
  int start_index = 0;
  int failed_starts = 0;
  double seconds = 0.0;  // wall time of the winning start
};

// Sum of log f((2y - 1) theta) over observed cells.
double log_likelihood(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link);

// Replaces every row of A_mode by the solution of its row GLM, warm-started at
// the current row. The rows are solved in parallel.
CpFactors update_mode(const BinaryTensor& y, const CpFactors& factors, std::size_t mode,
                      const FitConfig& cfg);

struct LineSearchResult {
  double gamma = 0.0;
  CpFactors blended;
  double loglik = 0.0;
};

// Grid search over gamma in [0, 1] of gamma * old + (1 - gamma) * new. With no
// mode every factor matrix is blended by the same gamma; otherwise only that
// mode is blended and the others come from `updated`. Grid points whose
// reconstruction breaks the max-norm bound are skipped.
LineSearchResult line_search(const BinaryTensor& y, const CpFactors& previous,
                             const CpFactors& updated, const FitConfig& cfg,
                             std::optional<std::size_t> mode = std::nullopt);

// Unit-norm columns in modes 1..K-1 with the largest-magnitude entry positive,
// scales and signs absorbed into A_K, columns sorted by decreasing weight.
CpFactors normalize(const CpFactors& factors);

// Random start: i.i.d. Uniform[-scale, scale] entries, normalized.
CpFactors random_factors(const Dims& dims, std::size_t rank, double scale, Rng& rng);

// Multi-start fit; keeps the start with the largest final objective.
FitResult fit(const BinaryTensor& y, const FitConfig& cfg);

// Single run from the given factors (no restarts).
FitResult fit_from(const BinaryTensor& y, const CpFactors& init, const FitConfig& cfg);

// Effective parameter count of a rank-R CP model.
std::size_t effective_params(const Dims& dims, std::size_t rank);

// -2 L + p_e log(N_obs); N_obs is the number of observed cells.
double bic(const BinaryTensor& y, const FitResult& result);

struct RankRow {
  std::size_t rank = 0;
  bool ok = false;
  double loglik = 0.0;
  std::size_t p_e = 0;
  double bic = 0.0;
  std::string error;
};

struct RankSelection {
  std::size_t best_rank = 0;
  std::vector<RankRow> table;
  std::vector<FitResult> fits;  // one per ok row, in table order
  const FitResult* best() const;
};

RankSelection select_rank(const BinaryTensor& y, FitConfig cfg, std::size_t r_min,
                          std::size_t r_max);

DenseTensor predict_proba(const FitResult& result, const LinkSpec& link);

namespace serial {
double log_likelihood(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link);
CpFactors update_mode(const BinaryTensor& y, const CpFactors& factors, std::size_t mode,
                      const FitConfig& cfg);
}  // namespace serial

}  // namespace bintensor
