#include "bintensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

void check_dims(const Dims& dims) {
  if (dims.size() < 2) throw DimensionMismatch("tensor order must be at least 2");
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionMismatch("every dimension must be positive");
  }
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order) {
    throw ModeOutOfRange("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(order));
  }
}

// Column strides of the mode-k unfolding: lowest remaining mode fastest.
Dims unfold_col_strides(const Dims& dims, std::size_t mode) {
  Dims strides(dims.size(), 0);
  std::size_t s = 1;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (m == mode) continue;
    strides[m] = s;
    s *= dims[m];
  }
  return strides;
}

// Row-major odometer over a multi-index.
bool advance(std::vector<std::size_t>& idx, const Dims& dims) {
  for (std::size_t m = dims.size(); m-- > 0;) {
    if (++idx[m] < dims[m]) return true;
    idx[m] = 0;
  }
  return false;
}

// Shared body of cp_reconstruct: fills the d_K-long fibre for prefix p.
struct Reconstructor {
  const CpFactors& f;
  Dims dims;
  Matrix last_t;  // R x d_K, column i is row i of A_K
  std::size_t prefixes;

  explicit Reconstructor(const CpFactors& cp) : f(cp), dims(cp.dims()) {
    last_t = f.factors.back().transpose();
    prefixes = num_elements(dims) / dims.back();
  }

  void fill(std::size_t p, std::span<double> out, Vector& u) const {
    const std::size_t K = dims.size();
    u.setOnes();
    std::size_t rem = p;
    for (std::size_t m = K - 1; m-- > 0;) {
      const std::size_t i = rem % dims[m];
      rem /= dims[m];
      u.array() *= f.factors[m].row(static_cast<Eigen::Index>(i)).transpose().array();
    }
    const std::size_t dK = dims.back();
    for (std::size_t i = 0; i < dK; ++i) {
      out[p * dK + i] = last_t.col(static_cast<Eigen::Index>(i)).dot(u);
    }
  }
};

}  // namespace

std::size_t num_elements(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Dims row_major_strides(const Dims& dims) {
  Dims strides(dims.size(), 1);
  for (std::size_t m = dims.size(); m-- > 1;) strides[m - 1] = strides[m] * dims[m];
  return strides;
}

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  values_.assign(num_elements(dims_), fill);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.size() != num_elements(dims_)) {
    throw DimensionMismatch("value count " + std::to_string(values_.size()) +
                            " does not match dimensions");
  }
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw DimensionMismatch("index order mismatch");
  std::size_t flat = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (index[m] >= dims_[m]) throw DimensionMismatch("index out of range");
    flat = flat * dims_[m] + index[m];
  }
  return flat;
}

ObservationMask::ObservationMask(Dims dims, bool observed) : dims_(std::move(dims)) {
  check_dims(dims_);
  bits_.assign(num_elements(dims_), observed ? 1 : 0);
}

ObservationMask::ObservationMask(Dims dims, std::vector<std::uint8_t> bits)
    : dims_(std::move(dims)), bits_(std::move(bits)) {
  check_dims(dims_);
  if (bits_.size() != num_elements(dims_)) throw DimensionMismatch("mask size mismatch");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t ObservationMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void ObservationMask::check_slabs() const {
  const std::size_t K = dims_.size();
  std::vector<std::vector<std::size_t>> seen(K);
  for (std::size_t m = 0; m < K; ++m) seen[m].assign(dims_[m], 0);
  std::vector<std::size_t> idx(K, 0);
  std::size_t flat = 0;
  do {
    if (bits_[flat]) {
      for (std::size_t m = 0; m < K; ++m) ++seen[m][idx[m]];
    }
    ++flat;
  } while (advance(idx, dims_));
  for (std::size_t m = 0; m < K; ++m) {
    for (std::size_t j = 0; j < dims_[m]; ++j) {
      if (seen[m][j] == 0) throw EmptySlab(m, j);
    }
  }
}

BinaryTensor::BinaryTensor(DenseTensor values, std::optional<ObservationMask> m)
    : base(std::move(values)), mask(std::move(m)) {
  if (mask && mask->dims() != base.dims()) throw DimensionMismatch("mask dims differ from data");
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!observed(i)) continue;
    const double v = base[i];
    if (v != 0.0 && v != 1.0) throw ParseError("binary tensor holds a value outside {0,1}");
  }
}

CpFactors::CpFactors(std::vector<Matrix> f) : factors(std::move(f)) {
  if (factors.size() < 2) throw DimensionMismatch("CP model needs at least two factors");
  const auto R = factors[0].cols();
  if (R < 1) throw DimensionMismatch("rank must be at least 1");
  for (const auto& a : factors) {
    if (a.cols() != R) throw DimensionMismatch("factor matrices disagree on rank");
    if (a.rows() < 1) throw DimensionMismatch("empty factor matrix");
  }
}

Dims CpFactors::dims() const {
  Dims d;
  d.reserve(factors.size());
  for (const auto& a : factors) d.push_back(static_cast<std::size_t>(a.rows()));
  return d;
}

Vector CpFactors::weights() const { return factors.back().colwise().norm().transpose(); }

UnfoldMap unfold_map(const Dims& dims, std::size_t mode) {
  check_mode(mode, dims.size());
  const Dims cstr = unfold_col_strides(dims, mode);
  const std::size_t n = num_elements(dims);
  UnfoldMap map;
  map.row.resize(n);
  map.col.resize(n);
  std::vector<std::size_t> idx(dims.size(), 0);
  std::size_t flat = 0;
  do {
    std::size_t c = 0;
    for (std::size_t m = 0; m < dims.size(); ++m) c += idx[m] * cstr[m];
    map.row[flat] = static_cast<std::uint32_t>(idx[mode]);
    map.col[flat] = static_cast<std::uint32_t>(c);
    ++flat;
  } while (advance(idx, dims));
  return map;
}

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  const Dims& dims = t.dims();
  check_mode(mode, dims.size());
  const auto map = unfold_map(dims, mode);
  Matrix out(static_cast<Eigen::Index>(dims[mode]),
             static_cast<Eigen::Index>(t.size() / dims[mode]));
  for (std::size_t i = 0; i < t.size(); ++i) out(map.row[i], map.col[i]) = t[i];
  return out;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Dims& dims) {
  check_dims(dims);
  check_mode(mode, dims.size());
  const std::size_t n = num_elements(dims);
  if (static_cast<std::size_t>(m.rows()) != dims[mode] ||
      static_cast<std::size_t>(m.rows() * m.cols()) != n) {
    throw DimensionMismatch("matrix shape does not match the requested unfolding");
  }
  const auto map = unfold_map(dims, mode);
  DenseTensor out(dims);
  for (std::size_t i = 0; i < n; ++i) out[i] = m(map.row[i], map.col[i]);
  return out;
}

Matrix khatri_rao_excluding(const CpFactors& f, std::size_t mode) {
  check_mode(mode, f.order());
  const auto R = static_cast<Eigen::Index>(f.rank());
  Matrix out = Matrix::Ones(1, R);
  // Lower modes vary fastest: row = i_low + d_low * (rows of the higher part).
  for (std::size_t m = 0; m < f.order(); ++m) {
    if (m == mode) continue;
    const Matrix& a = f.factors[m];
    Matrix next(out.rows() * a.rows(), R);
    for (Eigen::Index hi = 0; hi < a.rows(); ++hi) {
      for (Eigen::Index lo = 0; lo < out.rows(); ++lo) {
        next.row(hi * out.rows() + lo) = out.row(lo).cwiseProduct(a.row(hi));
      }
    }
    out = std::move(next);
  }
  return out;
}

DenseTensor cp_reconstruct(const CpFactors& f) {
  const Reconstructor rec(f);
  DenseTensor out(rec.dims);
  std::span<double> values = out.values();
  const auto P = static_cast<std::ptrdiff_t>(rec.prefixes);
#pragma omp parallel
  {
    Vector u(static_cast<Eigen::Index>(f.rank()));
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < P; ++p) rec.fill(static_cast<std::size_t>(p), values, u);
  }
  return out;
}

namespace serial {

DenseTensor cp_reconstruct(const CpFactors& f) {
  const Reconstructor rec(f);
  DenseTensor out(rec.dims);
  Vector u(static_cast<Eigen::Index>(f.rank()));
  for (std::size_t p = 0; p < rec.prefixes; ++p) rec.fill(p, out.values(), u);
  return out;
}

}  // namespace serial

double frobenius_norm(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

double max_norm(const DenseTensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw DimensionMismatch("tensor dimensions differ");
  DenseTensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double loss(const DenseTensor& a, const DenseTensor& b) {
  return frobenius_norm(a - b) / std::sqrt(static_cast<double>(a.size()));
}

}  // namespace bintensor
