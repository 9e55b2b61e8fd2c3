#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bintensor/decomp.hpp"
#include "bintensor/io.hpp"
#include "bintensor/links.hpp"
#include "bintensor/sim.hpp"

namespace bintensor {

// Scale factor mapping a generator sigma to a fit sigma so that the fitted
// Theta lives on the generator's scale (logistic(1.702 x) ~ Phi(x)).
double matched_sigma_scale(LinkFamily gen, LinkFamily fit);

// Deterministic per-replicate seed from (base, cell, replicate).
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t rep);

// --- Completion -----------------------------------------------------------

// Held-out cells drawn separately from the observed ones and observed zeros
// (same fraction of each class). Returns the held-out set as a mask.
ObservationMask stratified_holdout(const BinaryTensor& y, double fraction, Rng& rng);

struct Prediction {
  std::size_t flat;
  double prob;
  bool truth;
};

struct CompletionResult {
  FitResult fit;
  std::vector<Prediction> predictions;  // held-out cells in flat order
  double auc = 0.0;
  double rmse = 0.0;           // sqrt(mean (prob - truth)^2) over the holdout
  double baseline_rmse = 0.5;  // same for the constant 1/2 predictor
};

// Fits on the observed cells outside `holdout` and scores the held-out ones.
CompletionResult complete(const BinaryTensor& y, const ObservationMask& holdout, const FitConfig& cfg);

// --- Experiment suites ----------------------------------------------------

// Long-format results: key columns identify a cell, metrics are numeric.
struct TidyTable {
  std::vector<std::string> key_names;
  std::vector<std::string> metric_names;
  struct Row {
    std::vector<std::string> keys;
    std::vector<double> metrics;
  };
  std::vector<Row> rows;

  double metric(const Row& row, const std::string& name) const;
  io::CsvTable to_csv() const;
};

// Per cell (keys minus the replicate column): n, then mean and standard error
// of every metric. Cells appear in order of first occurrence.
io::CsvTable summarize(const TidyTable& tidy, const std::string& replicate_key = "rep");

struct FitSettings {
  int n_starts = 5;
  double tol = 1e-4;
  int max_iters = 100;
  double alpha = std::numeric_limits<double>::infinity();
  double init_scale = 0.1;
  int line_search_grid = 21;
};

// CP latent model sweep (consistency: vary d; dithering: vary sigma).
struct CpSuiteConfig {
  std::vector<std::size_t> d_values{20, 40};
  std::vector<std::size_t> ranks{1};
  std::vector<double> sigmas{0.31622776601683794};
  std::size_t order = 3;
  int n_sim = 10;
  std::uint64_t seed = 1;
  LinkFamily gen_link = LinkFamily::probit;
  LinkFamily fit_link = LinkFamily::logistic;
  double fit_sigma_scale = 0.0;  // 0 means matched_sigma_scale
  bool select_rank = false;      // BIC over [R - radius, R + radius] instead of the true R
  std::size_t rank_radius = 2;
  FitSettings fit{.alpha = 1.0};  // the generator's max-norm
};
TidyTable run_cp_suite(const CpSuiteConfig& cfg);

// Rank recovery by BIC on the Bernoulli CP model.
struct RankTableConfig {
  std::vector<std::size_t> d_values{40};
  std::vector<std::size_t> ranks{5};
  std::vector<double> sigmas{0.1};
  int n_sim = 10;
  std::uint64_t seed = 1;
  LinkFamily gen_link = LinkFamily::logistic;
  LinkFamily fit_link = LinkFamily::logistic;
  std::size_t rank_radius = 5;
  FitSettings fit;
};
TidyTable run_rank_table(const RankTableConfig& cfg);

// Stochastic multiway block model recovery.
struct BlockTableConfig {
  std::vector<std::size_t> d_values{50};
  std::vector<BlockMean> models{BlockMean::additive, BlockMean::multiplicative, BlockMean::combinatorial};
  std::size_t n_blocks = 5;
  int n_sim = 10;
  std::uint64_t seed = 1;
  LinkFamily fit_link = LinkFamily::logistic;
  double fit_sigma = 0.0;  // 0 means matched to the unit probit scale
  std::size_t r_min = 1;
  std::size_t r_max = 8;
  FitSettings fit;
};
TidyTable run_block_table(const BlockTableConfig& cfg);

// Boolean tensor model: RMSE and MER of the fitted probabilities.
struct BooleanConfig {
  std::vector<std::size_t> d_values{50};
  std::vector<std::size_t> boolean_ranks{5};
  double flip_prob = 0.1;
  int n_sim = 10;
  std::uint64_t seed = 1;
  LinkFamily fit_link = LinkFamily::logistic;
  double fit_sigma = 1.0;
  std::size_t r_min = 1;
  std::size_t r_max = 8;
  FitSettings fit;
};
TidyTable run_boolean_compare(const BooleanConfig& cfg);

// Runs the named suite ("consistency", "dithering", "rank_table",
// "block_table", "boolean_compare") from a config section.
TidyTable run_experiment(const std::string& name, const io::ConfigSection& section);

}  // namespace bintensor
