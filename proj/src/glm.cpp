#include "bintensor/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

void validate(const GlmProblem& p, const Vector& init) {
  const auto n = static_cast<std::size_t>(p.design.rows());
  if (n == 0 || p.design.cols() == 0) throw DimensionMismatch("empty GLM design");
  if (p.response.size() != n) throw DimensionMismatch("response length differs from design rows");
  if (!p.observed.empty() && p.observed.size() != n) {
    throw DimensionMismatch("observation mask length differs from design rows");
  }
  if (init.size() != p.design.cols()) throw DimensionMismatch("initial coefficient length");
  if (!init.allFinite()) throw NonFinite("initial coefficients are not finite");
  if (p.coef_bound && !(*p.coef_bound > 0.0)) throw Error("coefficient bound must be positive");
}

bool is_observed(const GlmProblem& p, std::size_t i) { return p.observed.empty() || p.observed[i]; }

// Largest t in [0, 1] keeping |eta + t * step| <= bound.
double max_feasible_step(const Vector& eta, const Vector& step, double bound) {
  double t = 1.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double d = step[i];
    if (d == 0.0) continue;
    const double room = (d > 0 ? bound - eta[i] : -bound - eta[i]) / d;
    t = std::min(t, std::max(room, 0.0));
  }
  return t;
}

}  // namespace

double glm_loglik(const GlmProblem& p, const Vector& eta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < p.response.size(); ++i) {
    if (!is_observed(p, i)) continue;
    ll += p.link.log_f_signed(p.response[i] != 0, eta[static_cast<Eigen::Index>(i)]);
  }
  return ll;
}

GlmSolution fit_glm(const GlmProblem& p, const Vector& init, const GlmOptions& options) {
  validate(p, init);
  const Matrix& X = p.design;
  const Eigen::Index n = X.rows();
  const Eigen::Index R = X.cols();

  GlmSolution sol;
  sol.coef = init;
  Vector eta = X * sol.coef;
  if (p.coef_bound) {
    const double peak = eta.cwiseAbs().maxCoeff();
    if (peak > *p.coef_bound) {
      sol.coef *= *p.coef_bound / peak;
      eta = X * sol.coef;
      sol.hit_bound = true;
    }
  }
  sol.loglik = glm_loglik(p, eta);

  Vector score(n);
  Vector weight(n);
  Matrix H(R, R);
  Vector grad(R);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    sol.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!is_observed(p, static_cast<std::size_t>(i))) {
        score[i] = 0.0;
        weight[i] = 0.0;
        continue;
      }
      const auto t = p.link.terms(p.response[static_cast<std::size_t>(i)] != 0, eta[i]);
      score[i] = t.score;
      weight[i] = t.weight;
    }
    grad.noalias() = X.transpose() * score;
    if (!grad.allFinite() || !weight.allFinite()) throw NonFinite("non-finite score or weight");
    if (grad.isZero(0.0)) {
      sol.converged = true;
      break;
    }
    H.noalias() = X.transpose() * (X.array().colwise() * weight.array()).matrix();

    // Solve the rescaled system so that tiny (even subnormal) weights still
    // give a usable step; the step itself does not depend on the scale.
    const double scale = H.diagonal().maxCoeff();
    if (!(weight.maxCoeff() > 0.0) || !(scale > 0.0)) throw VanishingInformation("every Fisher weight underflowed");
    H /= scale;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-10 * H.trace();
      if (jitter > 0.0) {
        H.diagonal().array() += jitter;
        llt.compute(H);
      }
      if (jitter <= 0.0 || llt.info() != Eigen::Success) {
        throw SingularDesign("X^T W X is singular");
      }
    }
    const Vector delta = llt.solve(grad / scale);
    if (!delta.allFinite()) throw NonFinite("non-finite Fisher step");

    double t = 1.0;
    if (p.coef_bound) {
      const Vector d_eta = X * delta;
      const double t_max = max_feasible_step(eta, d_eta, *p.coef_bound);
      if (t_max < 1.0) {
        t = t_max;
        sol.hit_bound = true;
      }
    }

    bool accepted = false;
    Vector coef_new;
    Vector eta_new;
    double ll_new = 0.0;
    for (int h = 0; h <= options.max_halvings; ++h) {
      coef_new = sol.coef + t * delta;
      eta_new = X * coef_new;
      ll_new = glm_loglik(p, eta_new);
      if (ll_new >= sol.loglik) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      sol.converged = false;
      break;
    }

    const double step_norm = t * delta.norm();
    const double change = ll_new - sol.loglik;
    const double rel = sol.loglik != 0.0 ? change / std::abs(sol.loglik) : change;
    sol.coef = std::move(coef_new);
    eta = std::move(eta_new);
    sol.loglik = ll_new;
    if (rel < options.rel_tol || step_norm < options.step_tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

}  // namespace bintensor
