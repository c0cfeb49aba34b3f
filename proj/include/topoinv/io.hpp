#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "topoinv/error.hpp"
#include "topoinv/hamiltonian.hpp"

namespace topoinv {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline json model_to_json(const BlochHamiltonianSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["dim"] = spec.dim;
  j["terms"] = json::array();
  for (const auto& t : spec.terms) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) row.push_back({t.matrix(r, c).real(), t.matrix(r, c).imag()});
      rows.push_back(row);
    }
    j["terms"].push_back({{"vector", {t.vector[0], t.vector[1]}}, {"matrix", rows}});
  }
  j["parameters"] = json::object();
  for (const auto& [k, v] : spec.parameters) j["parameters"][k] = v;
  return j;
}

namespace detail {

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::SchemaError, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::SchemaError, where + ": missing key '" + key + "'");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorKind::SchemaError, where + ": expected a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw Error(ErrorKind::SchemaError, where + ": expected an integer");
  return v.get<int>();
}

}  // namespace detail

/// Parses and validates a model document, including the Hermiticity pairing.
inline BlochHamiltonianSpec model_from_json(const json& j) {
  using detail::field;
  BlochHamiltonianSpec spec;
  const json& name = field(j, "name", "model");
  if (!name.is_string()) throw Error(ErrorKind::SchemaError, "name: expected a string");
  spec.name = name.get<std::string>();
  spec.dim = detail::integer(field(j, "dim", "model"), "dim");
  if (spec.dim <= 0) throw Error(ErrorKind::SchemaError, "dim: must be positive");
  const json& terms = field(j, "terms", "model");
  if (!terms.is_array()) throw Error(ErrorKind::SchemaError, "terms: expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "terms[" + std::to_string(i) + "]";
    const json& vec = field(terms[i], "vector", where);
    if (!vec.is_array() || vec.size() != 2) throw Error(ErrorKind::SchemaError, where + ".vector: expected [int, int]");
    HoppingTerm t;
    t.vector = {detail::integer(vec[0], where + ".vector"), detail::integer(vec[1], where + ".vector")};
    const json& m = field(terms[i], "matrix", where);
    if (!m.is_array() || m.size() != static_cast<std::size_t>(spec.dim)) {
      throw Error(ErrorKind::SchemaError, where + ".matrix: expected " + std::to_string(spec.dim) + " rows");
    }
    t.matrix = Mat(spec.dim, spec.dim);
    for (int r = 0; r < spec.dim; ++r) {
      const json& row = m[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.dim)) {
        throw Error(ErrorKind::SchemaError, where + ".matrix[" + std::to_string(r) + "]: wrong row length");
      }
      for (int c = 0; c < spec.dim; ++c) {
        const json& z = row[static_cast<std::size_t>(c)];
        const std::string zw = where + ".matrix[" + std::to_string(r) + "][" + std::to_string(c) + "]";
        if (!z.is_array() || z.size() != 2) throw Error(ErrorKind::SchemaError, zw + ": expected [re, im]");
        t.matrix(r, c) = cplx(detail::number(z[0], zw), detail::number(z[1], zw));
      }
    }
    spec.terms.push_back(std::move(t));
  }
  if (j.contains("parameters")) {
    const json& p = j["parameters"];
    if (!p.is_object()) throw Error(ErrorKind::SchemaError, "parameters: expected an object");
    for (auto it = p.begin(); it != p.end(); ++it) spec.parameters[it.key()] = detail::number(it.value(), "parameters." + it.key());
  }
  validate_hermitian_pairing(spec);
  return spec;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

/// Parses JSON text; syntax errors become ParseError with line and column.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline BlochHamiltonianSpec load_model(const std::string& path) {
  return model_from_json(parse_json_text(read_text(path), path));
}

inline void save_model(const std::string& path, const BlochHamiltonianSpec& spec) {
  write_text(path, model_to_json(spec).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweeps and results
// ---------------------------------------------------------------------------

struct ParameterRange {
  std::string name;
  double start = 0.0;
  double stop = 0.0;
  int count = 1;

  double value(int i) const { return count == 1 ? start : start + (stop - start) * i / (count - 1); }
};

struct SweepJob {
  std::string model;
  std::map<std::string, double> base_parameters;
  std::vector<ParameterRange> ranges;
  int grid = 64;
  int grid_t = 32;
  std::vector<std::string> invariants{"chern", "delta", "kappa"};
  std::string output;

  void validate() const {
    if (ranges.empty()) throw Error(ErrorKind::BadConfig, "sweep needs at least one parameter range");
    for (const auto& r : ranges) {
      if (r.count < 1) throw Error(ErrorKind::BadConfig, "range '" + r.name + "' has count < 1");
      if (!std::isfinite(r.start) || !std::isfinite(r.stop)) {
        throw Error(ErrorKind::BadConfig, "range '" + r.name + "' is not finite");
      }
    }
  }

  /// Cartesian product of the ranges, first range varying slowest.
  std::vector<std::map<std::string, double>> points() const {
    validate();
    std::vector<std::map<std::string, double>> out{base_parameters};
    for (const auto& r : ranges) {
      std::vector<std::map<std::string, double>> next;
      for (const auto& p : out) {
        for (int i = 0; i < r.count; ++i) {
          auto q = p;
          q[r.name] = r.value(i);
          next.push_back(std::move(q));
        }
      }
      out = std::move(next);
    }
    return out;
  }
};

/// One CSV row. Missing invariants are written as empty cells; `status`
/// carries per-row failures (GapClosure, Unsnapped, ...).
struct ResultRow {
  std::string model;
  std::vector<double> parameter_values;
  std::optional<long> chern;
  std::optional<long> delta;
  std::optional<int> kappa;
  std::optional<double> berry_phase_t0;  // argument of the Berry phase in (-pi, pi]
  std::optional<double> berry_phase_tpi;
  double residual_max = 0.0;
  std::string status = "ok";
};

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

inline std::string results_csv(const std::vector<std::string>& parameter_names, const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "model";
  for (const auto& n : parameter_names) os << "," << n;
  os << ",chern,delta,kappa,berry_phase_T0,berry_phase_Tpi,residual_max,status\n";
  for (const auto& r : rows) {
    os << r.model;
    for (double v : r.parameter_values) os << "," << format_double(v);
    os << ",";
    if (r.chern) os << *r.chern;
    os << ",";
    if (r.delta) os << *r.delta;
    os << ",";
    if (r.kappa) os << *r.kappa;
    os << ",";
    if (r.berry_phase_t0) os << format_double(*r.berry_phase_t0);
    os << ",";
    if (r.berry_phase_tpi) os << format_double(*r.berry_phase_tpi);
    os << "," << format_double(r.residual_max) << "," << r.status << "\n";
  }
  return os.str();
}

/// Writes the CSV to `path` and the configuration to `path + ".json"`.
inline void save_results(const std::string& path, const std::vector<std::string>& parameter_names,
                         const std::vector<ResultRow>& rows, const json& config) {
  write_text(path, results_csv(parameter_names, rows));
  write_text(path + ".json", config.dump(2) + "\n");
}

}  // namespace topoinv
