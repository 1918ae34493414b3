#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "holm/bio.hpp"

namespace holm {

namespace fs = std::filesystem;

// Thrown on malformed input files; the message carries file:line:column.
class parse_error : public std::runtime_error {
 public:
  parse_error(const fs::path& file, long line, long column, const std::string& what)
      : std::runtime_error(file.string() + ":" + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what) {}
};

namespace detail {

struct Token {
  std::string text;
  long column;  // 1-based start position in the line
};

inline std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), static_cast<long>(start) + 1});
  }
  return out;
}

inline long long to_int(const Token& t, const fs::path& file, long line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.text.c_str(), &end, 10);
  if (errno != 0 || end == t.text.c_str() || *end != '\0')
    throw parse_error(file, line, t.column, "expected integer, got '" + t.text + "'");
  return v;
}

inline double to_double(const Token& t, const fs::path& file, long line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.text.c_str(), &end);
  if (errno == ERANGE || end == t.text.c_str() || *end != '\0')
    throw parse_error(file, line, t.column, "expected number, got '" + t.text + "'");
  return v;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace detail

// MatrixMarket coordinate files, integer general, 1-based indices.
inline IntMatrix read_matrix_market(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line))
    throw parse_error(file, 1, 1, "empty file, expected MatrixMarket header");
  ++lineno;
  {
    auto toks = detail::tokenize(line);
    const char* expect[] = {"%%matrixmarket", "matrix", "coordinate", "integer",
                            "general"};
    for (int i = 0; i < 5; ++i) {
      if (static_cast<int>(toks.size()) <= i ||
          detail::lower(toks[i].text) != expect[i])
        throw parse_error(file, 1, toks.size() > static_cast<size_t>(i) ? toks[i].column : 1,
                          "expected header '%%MatrixMarket matrix coordinate "
                          "integer general'");
    }
  }

  long rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  IntMatrix A;
  std::map<std::pair<long, long>, bool> seen;
  long entries = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (!have_size) {
      if (toks.size() != 3)
        throw parse_error(file, lineno, toks[0].column,
                          "expected 'rows cols nnz' size line");
      rows = detail::to_int(toks[0], file, lineno);
      cols = detail::to_int(toks[1], file, lineno);
      nnz = detail::to_int(toks[2], file, lineno);
      if (rows < 1 || cols < 1 || nnz < 0)
        throw parse_error(file, lineno, toks[0].column, "invalid matrix size");
      A = IntMatrix::Zero(rows, cols);
      have_size = true;
      continue;
    }
    if (toks.size() != 3)
      throw parse_error(file, lineno, toks[0].column, "expected 'i j value' entry");
    const long i = detail::to_int(toks[0], file, lineno);
    const long j = detail::to_int(toks[1], file, lineno);
    const long long v = detail::to_int(toks[2], file, lineno);
    if (i < 1 || i > rows)
      throw parse_error(file, lineno, toks[0].column,
                        "row index " + std::to_string(i) + " outside [1, " +
                            std::to_string(rows) + "]");
    if (j < 1 || j > cols)
      throw parse_error(file, lineno, toks[1].column,
                        "column index " + std::to_string(j) + " outside [1, " +
                            std::to_string(cols) + "]");
    if (seen[{i, j}])
      throw parse_error(file, lineno, toks[0].column,
                        "duplicate entry (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
    seen[{i, j}] = true;
    A(i - 1, j - 1) = static_cast<int>(v);
    ++entries;
  }
  if (!have_size) throw parse_error(file, lineno + 1, 1, "missing size line");
  if (entries != nnz)
    throw parse_error(file, lineno + 1, 1,
                      "header declares " + std::to_string(nnz) +
                          " entries, file has " + std::to_string(entries));
  return A;
}

inline void write_matrix_market(const fs::path& file, const IntMatrix& A) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  long nnz = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) nnz += A(i, j) != 0;
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << A.rows() << ' ' << A.cols() << ' ' << nnz << '\n';
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0)
        out << i + 1 << ' ' << j + 1 << ' ' << A(i, j) << '\n';
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

// Plain-text vectors: one value per line, '#' starts a comment line.
inline Vector read_vector(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<double> vals;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty() || toks[0].text[0] == '#') continue;
    if (toks.size() > 1 && toks[1].text[0] != '#')
      throw parse_error(file, lineno, toks[1].column, "expected one value per line");
    vals.push_back(detail::to_double(toks[0], file, lineno));
  }
  Vector v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

inline void write_vector(const fs::path& file, const Vector& v) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

// Manifest: JSON object naming the network and pointing at its data files.
// Relative paths are resolved against the manifest's own directory.
struct ProblemManifest {
  std::string name;
  fs::path F, R, k;
  std::optional<fs::path> l0;
  std::optional<fs::path> c0;
};

inline ProblemManifest load_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error(file.string() + ": expected a JSON object");
  const auto need = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string())
      throw std::runtime_error(file.string() + ": missing string field \"" +
                               key + "\"");
    return j[key].get<std::string>();
  };
  ProblemManifest man;
  man.name = need("name");
  const fs::path dir = file.has_parent_path() ? file.parent_path() : fs::path(".");
  const auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : dir / q;
  };
  man.F = resolve(need("F"));
  man.R = resolve(need("R"));
  man.k = resolve(need("k"));
  const bool has_l0 = j.contains("l0"), has_c0 = j.contains("c0");
  if (has_l0 == has_c0)
    throw std::runtime_error(file.string() +
                             ": give exactly one of \"l0\" and \"c0\"");
  if (has_l0) man.l0 = resolve(need("l0"));
  if (has_c0) man.c0 = resolve(need("c0"));
  return man;
}

struct LoadResult {
  std::optional<BioNetwork> network;
  Diagnostics diagnostics;
  bool ok() const { return network.has_value(); }
};

// Load and validate a network.  File and parse problems become error
// diagnostics rather than exceptions, so callers always get the full list.
inline LoadResult load_network(const ProblemManifest& man) {
  LoadResult out;
  BioNetwork net;
  net.name = man.name;
  Vector c0;
  try {
    net.F = read_matrix_market(man.F);
    net.R = read_matrix_market(man.R);
    net.k = read_vector(man.k);
    if (man.l0) net.l0 = read_vector(*man.l0);
    if (man.c0) c0 = read_vector(*man.c0);
  } catch (const std::exception& e) {
    out.diagnostics.push_back({Diagnostic::Level::Error, e.what()});
    return out;
  }
  if (net.F.rows() != net.R.rows() || net.F.cols() != net.R.cols()) {
    out.diagnostics.push_back(
        {Diagnostic::Level::Error,
         "dimensions: F is " + std::to_string(net.F.rows()) + "x" +
             std::to_string(net.F.cols()) + " but R is " +
             std::to_string(net.R.rows()) + "x" + std::to_string(net.R.cols())});
    return out;
  }
  derive_network(net);
  if (man.c0) {
    const int m = net.species();
    if (c0.size() != m) {
      out.diagnostics.push_back(
          {Diagnostic::Level::Error,
           "dimensions: c0 has " + std::to_string(c0.size()) +
               " entries, expected m = " + std::to_string(m)});
      return out;
    }
    for (Eigen::Index i = 0; i < c0.size(); ++i)
      if (!(c0[i] > 0))
        out.diagnostics.push_back({Diagnostic::Level::Error,
                                   "c0 positive: c0(" + std::to_string(i + 1) +
                                       ") = " + std::to_string(c0[i])});
    if (has_errors(out.diagnostics)) return out;
    net.l0 = net.L * c0;
  }
  validate_network(net, out.diagnostics);
  if (!has_errors(out.diagnostics)) out.network = std::move(net);
  return out;
}

inline LoadResult load_network(const fs::path& manifest_file) {
  try {
    return load_network(load_manifest(manifest_file));
  } catch (const std::exception& e) {
    LoadResult out;
    out.diagnostics.push_back({Diagnostic::Level::Error, e.what()});
    return out;
  }
}

// Write a network back out as manifest + data files; returns the manifest path.
inline fs::path save_network(const BioNetwork& net, const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix_market(dir / "F.mtx", net.F);
  write_matrix_market(dir / "R.mtx", net.R);
  write_vector(dir / "k.txt", net.k);
  write_vector(dir / "l0.txt", net.l0);
  nlohmann::json j{{"name", net.name},
                   {"F", "F.mtx"},
                   {"R", "R.mtx"},
                   {"k", "k.txt"},
                   {"l0", "l0.txt"}};
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write " + manifest.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + manifest.string());
  return manifest;
}

}  // namespace holm
