#include "bintensor/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <fstream>
#include <sstream>

#include "bintensor/errors.hpp"

namespace bintensor::io {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (!line.empty() && line[0] != '#') return true;
  }
  return false;
}

std::size_t parse_size(const std::string& s, std::size_t lineno) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(lineno) + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (next_content_line(in, line, lineno)) {
    std::vector<double> row;
    for (const auto& c : split_csv_line(line)) row.push_back(parse_double(c));
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw ParseError(path.string() + ": ragged row at line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t == "inf" || t == "Inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  if (t == "-inf" || t == "-Inf") return -std::numeric_limits<double>::infinity();
  if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  // 10^x shorthand for grids on a log scale.
  if (t.rfind("10^", 0) == 0) return std::pow(10.0, parse_double(t.substr(3)));
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw ParseError("not a number: '" + s + "'");
  return v;
}

DenseTensor read_dense_tensor(std::istream& in, std::optional<ObservationMask>* mask, Absent absent) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_content_line(in, line, lineno)) throw ParseError("empty tensor file");
  auto head = split_ws(line);
  bool sparse = false;
  if (!head.empty() && head.back() == "sparse") {
    sparse = true;
    head.pop_back();
  }
  if (head.empty()) throw ParseError("missing tensor header");
  const std::size_t K = parse_size(head[0], lineno);
  if (K < 2 || head.size() != K + 1) {
    throw ParseError("header must read `K d_1 ... d_K`; got '" + line + "'");
  }
  Dims dims(K);
  for (std::size_t m = 0; m < K; ++m) {
    dims[m] = parse_size(head[m + 1], lineno);
    if (dims[m] == 0) throw ParseError("zero dimension in header");
  }
  const std::size_t n = num_elements(dims);
  DenseTensor t(dims);
  ObservationMask obs(dims, !sparse || absent == Absent::zero);
  bool any_missing = false;

  if (!sparse) {
    std::size_t count = 0;
    while (next_content_line(in, line, lineno)) {
      if (count >= n) throw ParseError("more values than the header declares (line " + std::to_string(lineno) + ")");
      if (line == "NA" || line == "na") {
        obs.set(count, false);
        any_missing = true;
      } else {
        t[count] = parse_double(line);
      }
      ++count;
    }
    if (count != n) {
      throw ParseError("header declares " + std::to_string(n) + " values but body has " + std::to_string(count));
    }
  } else {
    std::vector<std::size_t> idx(K);
    while (next_content_line(in, line, lineno)) {
      const auto tok = split_ws(line);
      if (tok.size() != K + 1) throw ParseError("line " + std::to_string(lineno) + ": expected K indices and a value");
      for (std::size_t m = 0; m < K; ++m) {
        const std::size_t i = parse_size(tok[m], lineno);
        if (i < 1 || i > dims[m]) throw ParseError("line " + std::to_string(lineno) + ": index out of range");
        idx[m] = i - 1;
      }
      const std::size_t flat = t.flat_index(idx);
      t[flat] = parse_double(tok[K]);
      obs.set(flat, true);
    }
    any_missing = absent == Absent::mask && obs.count() < n;
  }
  if (mask) {
    if (any_missing) *mask = std::move(obs);
    else mask->reset();
  }
  return t;
}

BinaryTensor read_binary_tensor(std::istream& in, Absent absent) {
  std::optional<ObservationMask> mask;
  DenseTensor t = read_dense_tensor(in, &mask, absent);
  return BinaryTensor(std::move(t), std::move(mask));
}

BinaryTensor read_binary_tensor(const fs::path& path, Absent absent) {
  std::ifstream in = open_in(path);
  return read_binary_tensor(in, absent);
}

void write_tensor(std::ostream& out, const DenseTensor& t, const ObservationMask* mask) {
  out << t.order();
  for (std::size_t d : t.dims()) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (mask && !mask->observed(i)) out << "NA\n";
    else out << format_double(t[i]) << '\n';
  }
}

void write_tensor(const fs::path& path, const BinaryTensor& t) {
  std::ofstream out = open_out(path);
  write_tensor(out, t.base, t.mask ? &*t.mask : nullptr);
}

void write_tensor_sparse(std::ostream& out, const BinaryTensor& t) {
  const Dims& dims = t.dims();
  out << dims.size();
  for (std::size_t d : dims) out << ' ' << d;
  out << " sparse\n";
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    if (!t.observed(flat)) continue;
    std::size_t rem = flat;
    for (std::size_t m = dims.size(); m-- > 0;) {
      idx[m] = rem % dims[m];
      rem /= dims[m];
    }
    for (std::size_t i : idx) out << i + 1 << ' ';
    out << format_double(t.base[flat]) << '\n';
  }
}

std::vector<std::vector<std::size_t>> read_index_list(std::istream& in, std::size_t order) {
  std::vector<std::vector<std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (next_content_line(in, line, lineno)) {
    const auto tok = split_ws(line);
    if (tok.size() != order) throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(order) + " indices");
    std::vector<std::size_t> idx(order);
    for (std::size_t m = 0; m < order; ++m) {
      const std::size_t i = parse_size(tok[m], lineno);
      if (i < 1) throw ParseError("line " + std::to_string(lineno) + ": indices are 1-based");
      idx[m] = i - 1;
    }
    out.push_back(std::move(idx));
  }
  return out;
}

void write_factors(const fs::path& dir, const CpFactors& factors, const FactorManifest& manifest) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < factors.order(); ++k) {
    write_matrix_csv(dir / ("mode_" + std::to_string(k + 1) + ".csv"), factors.factors[k]);
  }
  {
    std::ofstream out = open_out(dir / "lambda.csv");
    const Vector w = factors.weights();
    for (Eigen::Index r = 0; r < w.size(); ++r) out << format_double(w[r]) << '\n';
  }
  std::ofstream out = open_out(dir / "manifest.txt");
  out << "link=" << manifest.link << '\n';
  out << "sigma=" << format_double(manifest.sigma) << '\n';
  out << "rank=" << manifest.rank << '\n';
  out << "order=" << factors.order() << '\n';
  out << "dims=";
  for (std::size_t k = 0; k < manifest.dims.size(); ++k) out << (k ? "," : "") << manifest.dims[k];
  out << '\n';
  out << "alpha=" << format_double(manifest.alpha) << '\n';
  out << "final_loglik=" << format_double(manifest.final_loglik) << '\n';
  out << "bic=" << format_double(manifest.bic) << '\n';
  out << "n_observed=" << manifest.n_observed << '\n';
  out << "iterations=" << manifest.n_iterations << '\n';
  out << "converged=" << (manifest.converged ? "true" : "false") << '\n';
  out << "start_index=" << manifest.start_index << '\n';
}

CpFactors read_factors(const fs::path& dir, FactorManifest* manifest) {
  std::ifstream in = open_in(dir / "manifest.txt");
  ConfigSection kv;
  std::string line;
  std::size_t lineno = 0;
  while (next_content_line(in, line, lineno)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("manifest line " + std::to_string(lineno) + " lacks '='");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (!kv.count("order")) throw ParseError("manifest lacks 'order'");
  const std::size_t K = parse_size(kv["order"], 0);
  std::vector<Matrix> mats;
  for (std::size_t k = 0; k < K; ++k) mats.push_back(read_matrix_csv(dir / ("mode_" + std::to_string(k + 1) + ".csv")));
  CpFactors f(std::move(mats));
  if (manifest) {
    FactorManifest m;
    m.link = kv["link"];
    m.sigma = kv.count("sigma") ? parse_double(kv["sigma"]) : 1.0;
    m.rank = f.rank();
    m.dims = f.dims();
    m.alpha = kv.count("alpha") ? parse_double(kv["alpha"]) : 0.0;
    m.final_loglik = kv.count("final_loglik") ? parse_double(kv["final_loglik"]) : 0.0;
    m.bic = kv.count("bic") ? parse_double(kv["bic"]) : 0.0;
    m.n_observed = kv.count("n_observed") ? parse_size(kv["n_observed"], 0) : 0;
    m.n_iterations = kv.count("iterations") ? std::stoi(kv["iterations"]) : 0;
    m.converged = kv["converged"] == "true";
    m.start_index = kv.count("start_index") ? std::stoi(kv["start_index"]) : 0;
    *manifest = std::move(m);
  }
  return f;
}

void write_trace(const fs::path& path, const std::vector<double>& trace) {
  std::ofstream out = open_out(path);
  out << "iteration,loglik\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << format_double(trace[i]) << '\n';
}

std::map<std::string, ConfigSection> parse_config(std::istream& in) {
  std::map<std::string, ConfigSection> out;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (next_content_line(in, line, lineno)) {
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string value = trim(line.substr(eq + 1));
    if (const auto hash = value.find('#'); hash != std::string::npos) value = trim(value.substr(0, hash));
    out[section][trim(line.substr(0, eq))] = value;
  }
  return out;
}

std::map<std::string, ConfigSection> read_config(const fs::path& path) {
  std::ifstream in = open_in(path);
  return parse_config(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t j = 0; j < table.header.size(); ++j) out << (j ? "," : "") << table.header[j];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out = open_out(path);
  write_csv(out, table);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(trim(line));
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_csv(in);
}

}  // namespace bintensor::io
