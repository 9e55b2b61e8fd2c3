#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "bintensor/links.hpp"
#include "bintensor/tensor.hpp"

namespace bintensor {

// Theta = sum_r a_r^(1) o ... o a_r^(K) with Uniform[-1, 1] factor entries,
// rescaled to max-norm 1.
DenseTensor gen_cp_signal(const Dims& dims, std::size_t rank, Rng& rng);

// y = 1{theta + eps >= 0} with eps drawn from the link's noise distribution.
BinaryTensor quantize_latent(const DenseTensor& theta, const LinkSpec& link, Rng& rng);

// y ~ Bernoulli(f(theta)), drawn cell by cell from uniforms.
BinaryTensor sample_bernoulli(const DenseTensor& theta, const LinkSpec& link, Rng& rng);

// y ~ Bernoulli(p) for a probability tensor p.
BinaryTensor sample_bernoulli(const DenseTensor& prob, Rng& rng);

enum class BlockMean { combinatorial, additive, multiplicative };
std::string_view to_string(BlockMean m);
BlockMean parse_block_mean(std::string_view name);

struct BlockModelSpec {
  Dims dims{50, 50, 50};
  std::size_t n_blocks = 5;
  BlockMean mean_model = BlockMean::combinatorial;
};

struct BlockSample {
  BinaryTensor y;
  DenseTensor prob;    // Phi(latent)
  DenseTensor latent;  // block means on the probit scale, expanded to full size
  std::vector<std::vector<std::size_t>> membership;  // per mode, block of each index
};

BlockSample gen_block_tensor(const BlockModelSpec& spec, Rng& rng);

struct BooleanModelSpec {
  Dims dims{50, 50, 50};
  std::size_t boolean_rank = 5;
  double beta_a = 2.0;
  double beta_b = 4.0;
  double flip_prob = 0.1;
};

struct BooleanSample {
  BinaryTensor y;
  DenseTensor prob;  // expectation of y after flipping
};

BooleanSample gen_boolean_tensor(const BooleanModelSpec& spec, Rng& rng);

// Same model from given factor probabilities (one d_k x R matrix per mode):
// y = OR_r AND_k z_r^(k), z ~ Bernoulli(p), then flipped.
BooleanSample boolean_from_probs(const std::vector<Matrix>& probs, double flip_prob, Rng& rng);

// Each cell independently replaced by 1 - y with probability p.
BinaryTensor flip_noise(const BinaryTensor& y, double p, Rng& rng);

double rmse(const DenseTensor& est_prob, const DenseTensor& true_prob);
// Fraction of cells where 1{est >= 0.5} differs from 1{truth >= 0.5}.
double mer(const DenseTensor& est_prob, const DenseTensor& true_prob);
double relative_loss(const DenseTensor& theta_hat, const DenseTensor& theta_true);

struct Scored {
  double score;
  bool label;
};
// Mann-Whitney AUC with midranks for ties. Throws DegenerateLabels when a
// class is absent.
double auc(std::vector<Scored> scores);

}  // namespace bintensor
