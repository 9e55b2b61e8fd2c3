#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bintensor/decomp.hpp"
#include "bintensor/tensor.hpp"

namespace bintensor::io {

// How cells missing from a sparse file are treated.
enum class Absent { mask, zero };

// Tensor text format. Header: `K d_1 ... d_K [sparse]`. Dense body: one value
// per line in row-major order, `NA` marks an unobserved cell. Sparse body:
// `i_1 ... i_K v` with 1-based indices.
DenseTensor read_dense_tensor(std::istream& in, std::optional<ObservationMask>* mask = nullptr,
                              Absent absent = Absent::mask);
BinaryTensor read_binary_tensor(std::istream& in, Absent absent = Absent::mask);
BinaryTensor read_binary_tensor(const std::filesystem::path& path, Absent absent = Absent::mask);

void write_tensor(std::ostream& out, const DenseTensor& t, const ObservationMask* mask = nullptr);
void write_tensor(const std::filesystem::path& path, const BinaryTensor& t);
void write_tensor_sparse(std::ostream& out, const BinaryTensor& t);

// Index tuples, one per line, 1-based in the file and returned 0-based.
std::vector<std::vector<std::size_t>> read_index_list(std::istream& in, std::size_t order);

// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);
double parse_double(const std::string& s);

struct FactorManifest {
  std::string link;
  double sigma = 1.0;
  std::size_t rank = 0;
  Dims dims;
  double alpha = 0.0;
  double final_loglik = 0.0;
  double bic = 0.0;
  std::size_t n_observed = 0;
  int n_iterations = 0;
  bool converged = false;
  int start_index = 0;
};

// mode_1.csv .. mode_K.csv (A_K holds the weights), lambda.csv and manifest.txt.
void write_factors(const std::filesystem::path& dir, const CpFactors& factors,
                   const FactorManifest& manifest);
CpFactors read_factors(const std::filesystem::path& dir, FactorManifest* manifest = nullptr);

void write_trace(const std::filesystem::path& path, const std::vector<double>& trace);

// Flat key=value text with [section] headers; `#` starts a comment.
using ConfigSection = std::map<std::string, std::string>;
std::map<std::string, ConfigSection> parse_config(std::istream& in);
std::map<std::string, ConfigSection> read_config(const std::filesystem::path& path);

// Simple CSV table of already formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bintensor::io
