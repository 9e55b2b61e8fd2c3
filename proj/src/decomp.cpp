#include "bintensor/decomp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

// Fixed summation blocks keep the parallel log-likelihood bitwise equal to the
// serial one whatever the thread count.
constexpr std::size_t kSumBlock = 4096;

double block_loglik(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link,
                    std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!y.observed(i)) continue;
    s += link.log_f_signed(y.label(i), theta[i]);
  }
  return s;
}

void check_same_dims(const BinaryTensor& y, const DenseTensor& theta) {
  if (y.dims() != theta.dims()) throw DimensionMismatch("data and parameter tensors differ in shape");
}

// Row GLMs of one mode update: shared design, per-row responses.
class ModeUpdate {
 public:
  ModeUpdate(const BinaryTensor& y, const CpFactors& f, std::size_t mode, const FitConfig& cfg)
      : factors_(f), mode_(mode), cfg_(cfg) {
    if (y.dims() != f.dims()) throw DimensionMismatch("factor shapes do not match the data");
    design_ = khatri_rao_excluding(f, mode);
    const auto map = unfold_map(y.dims(), mode);
    rows_ = y.dims()[mode];
    cols_ = y.size() / rows_;
    response_.assign(y.size(), 0);
    if (y.mask) observed_.assign(y.size(), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t at = static_cast<std::size_t>(map.row[i]) * cols_ + map.col[i];
      if (!y.observed(i)) continue;
      response_[at] = y.label(i) ? 1 : 0;
      if (y.mask) observed_[at] = 1;
    }
    result_ = f;
    errors_.assign(rows_, nullptr);
  }

  std::size_t rows() const { return rows_; }

  void solve_row(std::size_t j) {
    try {
      const std::span<const std::uint8_t> resp(response_.data() + j * cols_, cols_);
      std::span<const std::uint8_t> obs;
      if (!observed_.empty()) obs = std::span<const std::uint8_t>(observed_.data() + j * cols_, cols_);
      const GlmProblem problem{design_, resp, obs, cfg_.link,
                               cfg_.bounded() ? std::optional<double>(cfg_.alpha) : std::nullopt};
      const auto row = static_cast<Eigen::Index>(j);
      const Vector init = factors_.factors[mode_].row(row).transpose();
      const GlmSolution sol = fit_glm(problem, init, cfg_.glm);
      result_.factors[mode_].row(row) = sol.coef.transpose();
    } catch (const VanishingInformation&) {
      // Saturated row: no Fisher step exists, so it keeps its current value.
    } catch (...) {
      errors_[j] = std::current_exception();
    }
  }

  CpFactors finish() {
    for (std::size_t j = 0; j < rows_; ++j) {
      if (!errors_[j]) continue;
      try {
        std::rethrow_exception(errors_[j]);
      } catch (const SingularDesign& e) {
        throw SingularDesign("row regression failed: " + std::string(e.what()), mode_, j);
      }
    }
    return std::move(result_);
  }

 private:
  const CpFactors& factors_;
  std::size_t mode_;
  const FitConfig& cfg_;
  Matrix design_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> response_;
  std::vector<std::uint8_t> observed_;
  CpFactors result_;
  std::vector<std::exception_ptr> errors_;
};

CpFactors blend(const CpFactors& previous, const CpFactors& updated, double gamma,
                std::optional<std::size_t> mode) {
  CpFactors out = updated;
  for (std::size_t k = 0; k < out.order(); ++k) {
    if (mode && *mode != k) continue;
    out.factors[k] = gamma * previous.factors[k] + (1.0 - gamma) * updated.factors[k];
  }
  return out;
}

bool feasible(const DenseTensor& theta, const FitConfig& cfg) {
  if (!cfg.bounded()) return true;
  return max_norm(theta) <= cfg.alpha * (1.0 + 1e-12);
}

}  // namespace

void FitConfig::validate() const {
  if (rank < 1) throw InvalidArgument("rank must be at least 1");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (n_starts < 1) throw InvalidArgument("n_starts must be at least 1");
  if (!(init_scale > 0.0)) throw InvalidArgument("init_scale must be positive");
  if (line_search_grid < 2) throw InvalidArgument("line search grid needs at least two points");
}

double log_likelihood(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link) {
  check_same_dims(y, theta);
  const std::size_t n = y.size();
  const auto blocks = static_cast<std::ptrdiff_t>((n + kSumBlock - 1) / kSumBlock);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kSumBlock;
    partial[static_cast<std::size_t>(b)] =
        block_loglik(y, theta, link, begin, std::min(n, begin + kSumBlock));
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

CpFactors update_mode(const BinaryTensor& y, const CpFactors& factors, std::size_t mode,
                      const FitConfig& cfg) {
  ModeUpdate job(y, factors, mode, cfg);
  const auto rows = static_cast<std::ptrdiff_t>(job.rows());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < rows; ++j) job.solve_row(static_cast<std::size_t>(j));
  return job.finish();
}

namespace serial {

double log_likelihood(const BinaryTensor& y, const DenseTensor& theta, const LinkSpec& link) {
  check_same_dims(y, theta);
  const std::size_t n = y.size();
  double total = 0.0;
  for (std::size_t begin = 0; begin < n; begin += kSumBlock) {
    total += block_loglik(y, theta, link, begin, std::min(n, begin + kSumBlock));
  }
  return total;
}

CpFactors update_mode(const BinaryTensor& y, const CpFactors& factors, std::size_t mode,
                      const FitConfig& cfg) {
  ModeUpdate job(y, factors, mode, cfg);
  for (std::size_t j = 0; j < job.rows(); ++j) job.solve_row(j);
  return job.finish();
}

}  // namespace serial

LineSearchResult line_search(const BinaryTensor& y, const CpFactors& previous,
                             const CpFactors& updated, const FitConfig& cfg,
                             std::optional<std::size_t> mode) {
  if (previous.dims() != updated.dims() || previous.rank() != updated.rank()) {
    throw DimensionMismatch("line search endpoints differ in shape");
  }
  if (mode && *mode >= previous.order()) throw ModeOutOfRange("line search mode out of range");
  const int G = cfg.line_search_grid;
  LineSearchResult best;
  bool found = false;
  for (int i = 0; i < G; ++i) {
    const double gamma = static_cast<double>(i) / static_cast<double>(G - 1);
    CpFactors trial = blend(previous, updated, gamma, mode);
    const DenseTensor theta = cp_reconstruct(trial);
    if (!feasible(theta, cfg)) continue;
    const double ll = log_likelihood(y, theta, cfg.link);
    if (!found || ll > best.loglik) {
      best.gamma = gamma;
      best.loglik = ll;
      best.blended = std::move(trial);
      found = true;
    }
  }
  if (!found) throw AllInfeasible("every line-search point violates the max-norm bound");
  return best;
}

CpFactors normalize(const CpFactors& factors) {
  CpFactors out = factors;
  const std::size_t K = out.order();
  const Eigen::Index R = static_cast<Eigen::Index>(out.rank());
  Matrix& last = out.factors[K - 1];
  for (std::size_t k = 0; k + 1 < K; ++k) {
    Matrix& a = out.factors[k];
    for (Eigen::Index r = 0; r < R; ++r) {
      const double norm = a.col(r).norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateColumn(k, static_cast<std::size_t>(r));
      a.col(r) /= norm;
      last.col(r) *= norm;
      Eigen::Index peak = 0;
      a.col(r).cwiseAbs().maxCoeff(&peak);
      if (a(peak, r) < 0.0) {
        a.col(r) = -a.col(r);
        last.col(r) = -last.col(r);
      }
    }
  }
  const Vector w = last.colwise().norm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(R));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return w[a] > w[b]; });
  if (!std::is_sorted(order.begin(), order.end())) {
    for (auto& a : out.factors) {
      Matrix sorted(a.rows(), R);
      for (Eigen::Index r = 0; r < R; ++r) sorted.col(r) = a.col(order[static_cast<std::size_t>(r)]);
      a = std::move(sorted);
    }
  }
  return out;
}

CpFactors random_factors(const Dims& dims, std::size_t rank, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Matrix> mats;
  mats.reserve(dims.size());
  for (std::size_t d : dims) {
    Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index r = 0; r < a.cols(); ++r) a(i, r) = u(rng);
    }
    mats.push_back(std::move(a));
  }
  return normalize(CpFactors(std::move(mats)));
}

FitResult fit_from(const BinaryTensor& y, const CpFactors& init, const FitConfig& cfg) {
  cfg.validate();
  if (init.dims() != y.dims()) throw DimensionMismatch("initial factors do not match the data");
  if (init.rank() != cfg.rank) throw DimensionMismatch("initial factors do not have the configured rank");
  const auto t0 = std::chrono::steady_clock::now();

  CpFactors current = normalize(init);
  DenseTensor theta = cp_reconstruct(current);
  if (cfg.bounded()) {
    const double peak = max_norm(theta);
    if (peak > cfg.alpha) {
      current.factors.back() *= cfg.alpha / peak * (1.0 - 1e-12);
      theta = cp_reconstruct(current);
    }
  }
  double ll = log_likelihood(y, theta, cfg.link);

  FitResult res;
  res.loglik_trace.push_back(ll);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    res.n_iterations = t;
    CpFactors updated = current;
    for (std::size_t k = 0; k < updated.order(); ++k) updated = update_mode(y, updated, k, cfg);
    LineSearchResult ls = line_search(y, current, updated, cfg);
    if (ls.gamma == 1.0) {
      res.loglik_trace.push_back(ll);
      res.converged = true;
      break;
    }
    CpFactors next = normalize(ls.blended);
    DenseTensor next_theta = cp_reconstruct(next);
    const double next_ll = log_likelihood(y, next_theta, cfg.link);
    if (next_ll < ll || !feasible(next_theta, cfg)) {
      res.loglik_trace.push_back(ll);
      res.converged = true;
      break;
    }
    const double rel = (next_ll - ll) / std::abs(ll);
    current = std::move(next);
    theta = std::move(next_theta);
    ll = next_ll;
    res.loglik_trace.push_back(ll);
    if (rel < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.factors = std::move(current);
  res.theta_hat = std::move(theta);
  res.final_loglik = ll;
  res.bic = bic(y, res);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

FitResult fit(const BinaryTensor& y, const FitConfig& cfg) {
  cfg.validate();
  if (y.mask) y.mask->check_slabs();
  std::optional<FitResult> best;
  int successes = 0;
  int failures = 0;
  std::string last_error;
  const int budget = 2 * cfg.n_starts;
  for (int idx = 0; idx < budget && successes < cfg.n_starts; ++idx) {
    Rng rng = make_rng(cfg.seed + static_cast<std::uint64_t>(idx));
    try {
      const CpFactors init = random_factors(y.dims(), cfg.rank, cfg.init_scale, rng);
      FitResult r = fit_from(y, init, cfg);
      r.start_index = idx;
      ++successes;
      if (!best || r.final_loglik > best->final_loglik) best = std::move(r);
    } catch (const SingularDesign& e) {
      ++failures;
      last_error = e.what();
    } catch (const DegenerateColumn& e) {
      ++failures;
      last_error = e.what();
    } catch (const NonFinite& e) {
      ++failures;
      last_error = e.what();
    } catch (const AllInfeasible& e) {
      ++failures;
      last_error = e.what();
    }
  }
  if (!best) {
    throw AllStartsFailed("all " + std::to_string(failures) + " starts failed; last error: " + last_error);
  }
  best->failed_starts = failures;
  return std::move(*best);
}

std::size_t effective_params(const Dims& dims, std::size_t rank) {
  if (rank < 1) throw Error("rank must be at least 1");
  const std::size_t K = dims.size();
  const std::size_t sum = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
  if (K == 2) {
    const std::size_t full = rank * sum;
    return full > rank * rank ? full - rank * rank : 0;
  }
  return rank * (sum - K + 1);
}

double bic(const BinaryTensor& y, const FitResult& result) {
  return -2.0 * result.final_loglik +static_cast<double>(effective_params(y.dims(), result.factors.rank())) *
                         std::log(static_cast<double>(y.num_observed()));
}

const FitResult* RankSelection::best() const {
  std::size_t k = 0;
  for (const auto& row : table) {
    if (!row.ok) continue;
    if (row.rank == best_rank) return &fits[k];
    ++k;
  }
  return nullptr;
}

RankSelection select_rank(const BinaryTensor& y, FitConfig cfg, std::size_t r_min, std::size_t r_max) {
  if (r_min < 1 || r_max < r_min) throw InvalidArgument("rank range must satisfy 1 <= r_min <= r_max");
  RankSelection sel;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t R = r_min; R <= r_max; ++R) {
    cfg.rank = R;
    RankRow row;
    row.rank = R;
    row.p_e = effective_params(y.dims(), R);
    try {
      FitResult r = fit(y, cfg);
      row.ok = true;
      row.loglik = r.final_loglik;
      row.bic = r.bic;
      if (row.bic < best_bic) {
        best_bic = row.bic;
        sel.best_rank = R;
      }
      sel.fits.push_back(std::move(r));
    } catch (const Error& e) {
      row.error = e.what();
    }
    sel.table.push_back(std::move(row));
  }
  if (sel.best_rank == 0) throw AllStartsFailed("no candidate rank could be fitted");
  return sel;
}

DenseTensor predict_proba(const FitResult& result, const LinkSpec& link) {
  DenseTensor out(result.theta_hat.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = link.f(result.theta_hat[i]);
  return out;
}

}  // namespace bintensor
