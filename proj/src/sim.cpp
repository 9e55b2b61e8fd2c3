#include "bintensor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

double beta_draw(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

// Uniform block labels, resampled until every block is used.
std::vector<std::size_t> draw_membership(std::size_t d, std::size_t blocks, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, blocks - 1);
  std::vector<std::size_t> m(d);
  for (;;) {
    std::vector<bool> used(blocks, false);
    for (auto& v : m) {
      v = pick(rng);
      used[v] = true;
    }
    if (std::all_of(used.begin(), used.end(), [](bool u) { return u; })) return m;
  }
}

}  // namespace

DenseTensor gen_cp_signal(const Dims& dims, std::size_t rank, Rng& rng) {
  if (rank < 1) throw Error("rank must be at least 1");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    std::vector<Matrix> mats;
    for (std::size_t d : dims) {
      Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index r = 0; r < a.cols(); ++r) a(i, r) = u(rng);
      }
      mats.push_back(std::move(a));
    }
    DenseTensor theta = cp_reconstruct(CpFactors(std::move(mats)));
    const double peak = max_norm(theta);
    if (peak == 0.0) continue;
    for (double& v : theta.values()) v /= peak;
    return theta;
  }
}

BinaryTensor quantize_latent(const DenseTensor& theta, const LinkSpec& link, Rng& rng) {
  DenseTensor y(theta.dims());
  for (std::size_t i = 0; i < theta.size(); ++i) y[i] = theta[i] + link.sample(rng) >= 0.0 ? 1.0 : 0.0;
  return BinaryTensor(std::move(y));
}

BinaryTensor sample_bernoulli(const DenseTensor& theta, const LinkSpec& link, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseTensor y(theta.dims());
  for (std::size_t i = 0; i < theta.size(); ++i) y[i] = u(rng) < link.f(theta[i]) ? 1.0 : 0.0;
  return BinaryTensor(std::move(y));
}

BinaryTensor sample_bernoulli(const DenseTensor& prob, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseTensor y(prob.dims());
  for (std::size_t i = 0; i < prob.size(); ++i) y[i] = u(rng) < prob[i] ? 1.0 : 0.0;
  return BinaryTensor(std::move(y));
}

std::string_view to_string(BlockMean m) {
  switch (m) {
    case BlockMean::combinatorial:
      return "combinatorial";
    case BlockMean::additive:
      return "additive";
    case BlockMean::multiplicative:
      return "multiplicative";
  }
  return "?";
}

BlockMean parse_block_mean(std::string_view name) {
  if (name == "combinatorial") return BlockMean::combinatorial;
  if (name == "additive") return BlockMean::additive;
  if (name == "multiplicative") return BlockMean::multiplicative;
  throw ParseError("unknown block mean model '" + std::string(name) + "'");
}

BlockSample gen_block_tensor(const BlockModelSpec& spec, Rng& rng) {
  const std::size_t K = spec.dims.size();
  const std::size_t B = spec.n_blocks;
  if (B < 1) throw Error("need at least one block");
  for (std::size_t d : spec.dims) {
    if (B > d) throw Error("more blocks than indices in a mode");
  }
  BlockSample out;
  for (std::size_t d : spec.dims) out.membership.push_back(draw_membership(d, B, rng));

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Dims core_dims(K, B);
  DenseTensor core(core_dims);
  if (spec.mean_model == BlockMean::combinatorial) {
    for (double& c : core.values()) c = u(rng);
  } else {
    std::vector<std::vector<double>> parts(K, std::vector<double>(B));
    for (auto& p : parts) {
      for (double& v : p) v = u(rng);
    }
    const bool additive = spec.mean_model == BlockMean::additive;
    std::vector<std::size_t> idx(K, 0);
    for (std::size_t flat = 0; flat < core.size(); ++flat) {
      std::size_t rem = flat;
      for (std::size_t m = K; m-- > 0;) {
        idx[m] = rem % B;
        rem /= B;
      }
      double v = additive ? 0.0 : 1.0;
      for (std::size_t m = 0; m < K; ++m) v = additive ? v + parts[m][idx[m]] : v * parts[m][idx[m]];
      core[flat] = v;
    }
  }

  out.latent = DenseTensor(spec.dims);
  out.prob = DenseTensor(spec.dims);
  const LinkSpec probit(LinkFamily::probit, 1.0);
  std::vector<std::size_t> idx(K, 0);
  std::vector<std::size_t> block(K, 0);
  for (std::size_t flat = 0; flat < out.latent.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t m = K; m-- > 0;) {
      idx[m] = rem % spec.dims[m];
      rem /= spec.dims[m];
      block[m] = out.membership[m][idx[m]];
    }
    const double c = core.at(block);
    out.latent[flat] = c;
    out.prob[flat] = probit.f(c);
  }
  out.y = sample_bernoulli(out.prob, rng);
  return out;
}

BooleanSample gen_boolean_tensor(const BooleanModelSpec& spec, Rng& rng) {
  if (spec.boolean_rank < 1) throw Error("boolean rank must be at least 1");
  const auto R = static_cast<Eigen::Index>(spec.boolean_rank);
  std::vector<Matrix> probs;
  for (std::size_t d : spec.dims) {
    Matrix p(static_cast<Eigen::Index>(d), R);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index r = 0; r < R; ++r) p(i, r) = beta_draw(spec.beta_a, spec.beta_b, rng);
    }
    probs.push_back(std::move(p));
  }
  return boolean_from_probs(probs, spec.flip_prob, rng);
}

BooleanSample boolean_from_probs(const std::vector<Matrix>& probs, double flip_prob, Rng& rng) {
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) throw Error("flip probability must lie in [0, 0.5)");
  const CpFactors shape(probs);
  const Dims dims = shape.dims();
  const std::size_t K = dims.size();
  const auto R = static_cast<Eigen::Index>(shape.rank());
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> z;
  for (const auto& p : probs) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zm(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index r = 0; r < R; ++r) zm(i, r) = u(rng) < p(i, r);
    }
    z.push_back(std::move(zm));
  }

  BooleanSample out;
  DenseTensor y(dims);
  out.prob = DenseTensor(dims);
  std::vector<Eigen::Index> idx(K, 0);
  for (std::size_t flat = 0; flat < y.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t m = K; m-- > 0;) {
      idx[m] = static_cast<Eigen::Index>(rem % dims[m]);
      rem /= dims[m];
    }
    double none = 1.0;
    bool any = false;
    for (Eigen::Index r = 0; r < R; ++r) {
      double prod = 1.0;
      bool all = true;
      for (std::size_t m = 0; m < K; ++m) {
        prod *= probs[m](idx[m], r);
        all = all && z[m](idx[m], r);
      }
      none *= 1.0 - prod;
      any = any || all;
    }
    const double q = 1.0 - none;
    y[flat] = any ? 1.0 : 0.0;
    out.prob[flat] = (1.0 - flip_prob) * q + flip_prob * (1.0 - q);
  }
  out.y = flip_noise(BinaryTensor(std::move(y)), flip_prob, rng);
  return out;
}

BinaryTensor flip_noise(const BinaryTensor& y, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 0.5)) throw Error("flip probability must lie in [0, 0.5)");
  BinaryTensor out = y;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (u(rng) < p) out.base[i] = 1.0 - out.base[i];
  }
  return out;
}

double rmse(const DenseTensor& est_prob, const DenseTensor& true_prob) { return loss(est_prob, true_prob); }

double mer(const DenseTensor& est_prob, const DenseTensor& true_prob) {
  if (est_prob.dims() != true_prob.dims()) throw DimensionMismatch("tensor dimensions differ");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < est_prob.size(); ++i) {
    if ((est_prob[i] >= 0.5) != (true_prob[i] >= 0.5)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(est_prob.size());
}

double relative_loss(const DenseTensor& theta_hat, const DenseTensor& theta_true) {
  return frobenius_norm(theta_hat - theta_true) / frobenius_norm(theta_true);
}

double auc(std::vector<Scored> scores) {
  std::size_t pos = 0;
  for (const auto& s : scores) pos += s.label ? 1 : 0;
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabels("AUC needs both classes");
  std::sort(scores.begin(), scores.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < scores.size()) {
    std::size_t j = i;
    while (j < scores.size() && scores[j].score == scores[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scores[k].label) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

}  // namespace bintensor
