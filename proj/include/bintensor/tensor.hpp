#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bintensor {

using Dims = std::vector<std::size_t>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

std::size_t num_elements(const Dims& dims);

// Row-major strides (last index fastest).
Dims row_major_strides(const Dims& dims);

// Order-K dense array, row-major. Holds data tensors and parameter tensors alike.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Dims dims, double fill = 0.0);
  DenseTensor(Dims dims, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> index) const;
  double at(std::span<const std::size_t> index) const { return values_[flat_index(index)]; }
  double& at(std::span<const std::size_t> index) { return values_[flat_index(index)]; }

  bool operator==(const DenseTensor&) const = default;

 private:
  Dims dims_;
  std::vector<double> values_;
};

// Dense bitmap of observed cells (the index set of non-missing entries).
class ObservationMask {
 public:
  ObservationMask() = default;
  explicit ObservationMask(Dims dims, bool observed = true);
  ObservationMask(Dims dims, std::vector<std::uint8_t> bits);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return bits_.size(); }
  bool observed(std::size_t flat) const { return bits_[flat] != 0; }
  void set(std::size_t flat, bool value) { bits_[flat] = value ? 1 : 0; }
  std::size_t count() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  // Throws EmptySlab when some mode-k slab has no observed cell.
  void check_slabs() const;

  bool operator==(const ObservationMask&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> bits_;
};

// Binary data tensor with an optional mask; unobserved cells are never read
// by likelihood computations.
struct BinaryTensor {
  DenseTensor base;
  std::optional<ObservationMask> mask;

  BinaryTensor() = default;
  explicit BinaryTensor(DenseTensor values, std::optional<ObservationMask> m = std::nullopt);

  const Dims& dims() const { return base.dims(); }
  std::size_t size() const { return base.size(); }
  bool observed(std::size_t flat) const { return !mask || mask->observed(flat); }
  std::size_t num_observed() const { return mask ? mask->count() : base.size(); }
  bool label(std::size_t flat) const { return base[flat] != 0.0; }
};

// CP factor matrices A_1..A_K, each d_k x R. Under the normalized convention
// the first K-1 have unit-norm columns and the weights live in A_K.
struct CpFactors {
  std::vector<Matrix> factors;

  CpFactors() = default;
  explicit CpFactors(std::vector<Matrix> f);

  std::size_t order() const { return factors.size(); }
  std::size_t rank() const { return factors.empty() ? 0 : static_cast<std::size_t>(factors[0].cols()); }
  Dims dims() const;
  // Column norms of the last factor.
  Vector weights() const;
};

// Mode-k matricization, rows indexed by mode k. Columns follow
// Y_(k) = A_k (A_K (.) ... (.) A_{k+1} (.) A_{k-1} (.) ... (.) A_1)^T, i.e. among the
// remaining modes the lowest-numbered index varies fastest. Modes are 0-based.
Matrix unfold(const DenseTensor& t, std::size_t mode);
DenseTensor fold(const Matrix& m, std::size_t mode, const Dims& dims);

// Maps every flat (row-major) tensor index to its unfolding coordinates.
struct UnfoldMap {
  std::vector<std::uint32_t> row;
  std::vector<std::uint32_t> col;
};
UnfoldMap unfold_map(const Dims& dims, std::size_t mode);

// Khatri-Rao product of every factor except `mode`, ordered to match unfold.
Matrix khatri_rao_excluding(const CpFactors& f, std::size_t mode);

DenseTensor cp_reconstruct(const CpFactors& f);

double frobenius_norm(const DenseTensor& t);
double max_norm(const DenseTensor& t);
// (prod d_k)^{-1/2} ||a - b||_F
double loss(const DenseTensor& a, const DenseTensor& b);

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);

namespace serial {
DenseTensor cp_reconstruct(const CpFactors& f);
}  // namespace serial

}  // namespace bintensor
