#pragma once

// JSON file formats: instances, solutions, channel matrices, eigenvalue lists,
// spectral reports, tolerance profiles and sweep specifications. Every
// document carries "schema_version" and "kind"; complex numbers are [re, im]
// pairs and matrices are flat row-major arrays of pairs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "decoupling/decouple.hpp"
#include "decoupling/model.hpp"
#include "decoupling/riccati.hpp"
#include "decoupling/verify.hpp"

namespace decoupling::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct InstanceMetadata {
  std::optional<std::uint64_t> seed;
  std::optional<double> gap;
  std::optional<double> coupling_scale;
};

struct InstanceFile {
  TwoChannelHamiltonian hamiltonian;
  InstanceMetadata metadata;
};

// ---------------------------------------------------------------------------
// reading helpers

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

/// Parses JSON text, reporting syntax errors with line and column.
inline json parse_json(const std::string& text, const std::string& source) {
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
    throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                      ": " + e.what());
  }
}

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::Parse, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::Parse, where + ": missing field '" + key + "'");
  return *it;
}

inline double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorCode::Parse, where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::Parse, where + ": non-finite number");
  return d;
}

inline std::int64_t as_count(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw Error(ErrorCode::Parse, where + ": expected an integer");
  return v.get<std::int64_t>();
}

inline void check_schema(const json& doc, const std::string& kind, const std::string& source) {
  const auto version = as_count(field(doc, "schema_version", source), source + ": schema_version");
  if (version != kSchemaVersion)
    throw Error(ErrorCode::Parse, source + ": unsupported schema_version " + std::to_string(version));
  if (auto it = doc.find("kind"); it != doc.end() && *it != kind)
    throw Error(ErrorCode::Parse, source + ": expected kind '" + kind + "'");
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::Parse, where + ": expected [re, im] pair");
  return {as_double(v[0], where + "[0]"), as_double(v[1], where + "[1]")};
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(complex_to_json(m(i, j)));
  return arr;
}

inline ComplexMatrix matrix_from_json(const json& v, Eigen::Index rows, Eigen::Index cols,
                                      const std::string& where) {
  if (!v.is_array()) throw Error(ErrorCode::Parse, where + ": expected an array of [re, im] pairs");
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw Error(ErrorCode::Parse, where + ": expected " + std::to_string(rows * cols) +
                                      " entries, found " + std::to_string(v.size()));
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto idx = static_cast<std::size_t>(i * cols + j);
      m(i, j) = complex_from_json(v[idx], where + "[" + std::to_string(idx) + "]");
    }
  return m;
}

inline json vector_to_json(const ComplexVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v(i)));
  return arr;
}

// ---------------------------------------------------------------------------
// instances

inline ordered_json instance_to_json(const InstanceFile& f) {
  const auto& h = f.hamiltonian;
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "two_channel_instance";
  doc["n1"] = h.n1();
  doc["n2"] = h.n2();
  doc["a1"] = matrix_to_json(h.a1());
  doc["a2"] = matrix_to_json(h.a2());
  doc["b12"] = matrix_to_json(h.b12());
  ordered_json meta = ordered_json::object();
  if (f.metadata.seed) meta["seed"] = *f.metadata.seed;
  if (f.metadata.gap) meta["gap"] = *f.metadata.gap;
  if (f.metadata.coupling_scale) meta["coupling_scale"] = *f.metadata.coupling_scale;
  doc["metadata"] = meta;
  return doc;
}

inline std::string dump_instance(const InstanceFile& f) { return instance_to_json(f).dump(2) + "\n"; }

inline InstanceFile parse_instance(const std::string& text, const std::string& source = "instance") {
  const json doc = parse_json(text, source);
  check_schema(doc, "two_channel_instance", source);
  const auto n1 = as_count(field(doc, "n1", source), source + ": n1");
  const auto n2 = as_count(field(doc, "n2", source), source + ": n2");
  if (n1 < 1 || n2 < 1) throw Error(ErrorCode::Parse, source + ": n1 and n2 must be at least 1");
  ComplexMatrix a1 = matrix_from_json(field(doc, "a1", source), n1, n1, source + ": a1");
  ComplexMatrix a2 = matrix_from_json(field(doc, "a2", source), n2, n2, source + ": a2");
  ComplexMatrix b12 = matrix_from_json(field(doc, "b12", source), n1, n2, source + ": b12");

  InstanceMetadata meta;
  if (auto it = doc.find("metadata"); it != doc.end() && it->is_object()) {
    if (auto s = it->find("seed"); s != it->end()) {
      if (!s->is_number_unsigned()) throw Error(ErrorCode::Parse, source + ": metadata.seed must be a non-negative integer");
      meta.seed = s->get<std::uint64_t>();
    }
    if (auto g = it->find("gap"); g != it->end()) meta.gap = as_double(*g, source + ": metadata.gap");
    if (auto c = it->find("coupling_scale"); c != it->end())
      meta.coupling_scale = as_double(*c, source + ": metadata.coupling_scale");
  }
  try {
    return {TwoChannelHamiltonian(std::move(a1), std::move(a2), std::move(b12)), meta};
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.what());
  }
}

inline InstanceFile read_instance(const std::filesystem::path& path) {
  return parse_instance(read_text(path), path.string());
}

inline void write_instance(const std::filesystem::path& path, const InstanceFile& f) {
  write_text(path, dump_instance(f));
}

// ---------------------------------------------------------------------------
// solutions and channel outputs

inline ordered_json solution_to_json(const RiccatiSolution& s) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "riccati_solution";
  doc["alpha"] = s.alpha.value();
  doc["rows"] = s.q.rows();
  doc["cols"] = s.q.cols();
  doc["q"] = matrix_to_json(s.q);
  doc["iterations_used"] = s.iterations_used;
  doc["fixed_point_residual"] = s.fixed_point_residual;
  doc["riccati_residual"] = s.riccati_residual;
  doc["q_operator_norm"] = s.q_operator_norm;
  doc["max_iterate_norm"] = s.max_iterate_norm;
  doc["admissible"] = s.admissible;
  doc["admissibility_bound"] = s.admissibility_bound;
  return doc;
}

/// The fields needed to rebuild a channel: alpha and Q. Diagnostics are read
/// back when present.
inline RiccatiSolution parse_solution(const std::string& text, const std::string& source = "solution") {
  const json doc = parse_json(text, source);
  check_schema(doc, "riccati_solution", source);
  RiccatiSolution s;
  const auto alpha = as_count(field(doc, "alpha", source), source + ": alpha");
  if (alpha != 1 && alpha != 2) throw Error(ErrorCode::Parse, source + ": alpha must be 1 or 2");
  s.alpha = ChannelIndex(static_cast<int>(alpha));
  const auto rows = as_count(field(doc, "rows", source), source + ": rows");
  const auto cols = as_count(field(doc, "cols", source), source + ": cols");
  if (rows < 1 || cols < 1) throw Error(ErrorCode::Parse, source + ": rows and cols must be at least 1");
  s.q = matrix_from_json(field(doc, "q", source), rows, cols, source + ": q");
  const auto opt = [&](const char* key, double& out) {
    if (auto it = doc.find(key); it != doc.end() && it->is_number()) out = it->get<double>();
  };
  opt("fixed_point_residual", s.fixed_point_residual);
  opt("riccati_residual", s.riccati_residual);
  opt("q_operator_norm", s.q_operator_norm);
  opt("max_iterate_norm", s.max_iterate_norm);
  opt("admissibility_bound", s.admissibility_bound);
  if (auto it = doc.find("iterations_used"); it != doc.end() && it->is_number_integer())
    s.iterations_used = it->get<int>();
  if (auto it = doc.find("admissible"); it != doc.end() && it->is_boolean()) s.admissible = it->get<bool>();
  return s;
}

inline RiccatiSolution read_solution(const std::filesystem::path& path) {
  return parse_solution(read_text(path), path.string());
}

inline ordered_json matrix_document(const std::string& name, int alpha, const ComplexMatrix& m) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "matrix";
  doc["name"] = name;
  doc["alpha"] = alpha;
  doc["rows"] = m.rows();
  doc["cols"] = m.cols();
  doc["entries"] = matrix_to_json(m);
  return doc;
}

inline ordered_json eigenvalues_document(const DecoupledChannel& ch) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "eigenvalues";
  doc["alpha"] = ch.alpha.value();
  doc["values"] = vector_to_json(ch.eigenvalues);
  return doc;
}

// ---------------------------------------------------------------------------
// tolerance profiles

/// Accepts either a flat {name: value} object or {"tolerances": {...}}.
inline void apply_tolerances(const json& doc, ToleranceProfile& tol, const std::string& source) {
  const json* obj = &doc;
  if (doc.is_object() && doc.contains("tolerances")) obj = &doc.at("tolerances");
  if (!obj->is_object()) throw Error(ErrorCode::Parse, source + ": expected a tolerance object");
  for (auto it = obj->begin(); it != obj->end(); ++it) {
    if (it.key() == "schema_version" || it.key() == "kind") continue;
    tol.set(it.key(), as_double(it.value(), source + ": " + it.key()));
  }
}

inline ToleranceProfile read_tolerance_profile(const std::filesystem::path& path) {
  ToleranceProfile tol;
  apply_tolerances(parse_json(read_text(path), path.string()), tol, path.string());
  return tol;
}

inline ordered_json tolerances_to_json(const ToleranceProfile& tol) {
  ordered_json obj = ordered_json::object();
  tol.for_each([&](const char* name, const double& v) { obj[name] = v; });
  return obj;
}

// ---------------------------------------------------------------------------
// reports

namespace detail {
inline ordered_json opt_number(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}
inline ordered_json real_array(const std::vector<double>& v) {
  ordered_json arr = ordered_json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}
}  // namespace detail

/// Stable key order; no timestamps, so equal inputs give identical bytes.
inline ordered_json report_to_json(const SpectralReport& r, const ToleranceProfile& tol) {
  using detail::opt_number;
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "spectral_report";
  doc["instance_digest"] = r.instance_digest;
  doc["n1"] = r.n1;
  doc["n2"] = r.n2;

  ordered_json adm;
  adm["d0"] = r.gap.d0;
  adm["b_hs_norm"] = r.gap.b_hs_norm;
  adm["unit_ball_margin"] = r.gap.unit_ball_margin;
  adm["delta"] = r.delta;
  adm["bound"] = r.admissibility.bound;
  adm["admissible"] = r.admissibility.admissible;
  adm["guaranteed"] = r.guaranteed;
  doc["admissibility"] = adm;

  ordered_json ric;
  ric["status"] = r.solver_status;
  ric["iterations"] = r.iterations;
  ric["fixed_point_residual"] = opt_number(r.fixed_point_residual);
  ric["riccati_residual"] = opt_number(r.riccati_residual);
  ric["q_operator_norm"] = opt_number(r.q_operator_norm);
  ric["max_iterate_norm"] = opt_number(r.max_iterate_norm);
  doc["riccati"] = ric;

  doc["basic_equation_residual"] = opt_number(r.basic_equation_residual);
  doc["original_problem_max_residual"] = opt_number(r.original_problem_max_residual);
  doc["diagonalization_offdiag_norm"] = opt_number(r.diagonalization_offdiag_norm);
  doc["unitarity_defect"] = opt_number(r.unitarity_defect);
  doc["self_adjointness_defect"] = opt_number(r.self_adjointness_defect);
  doc["invariance_residual"] = opt_number(r.invariance_residual);
  doc["x_min_eigenvalue"] = opt_number(r.x_min_eigenvalue);
  doc["spectrum_match_max_error"] = opt_number(r.spectrum_match_max_error);
  doc["three_way_max_error"] = opt_number(r.three_way_max_error);
  doc["spectrum_disjoint_gap"] = opt_number(r.spectrum_disjoint_gap);
  doc["reality_max_imag"] = opt_number(r.reality_max_imag);
  doc["biorthogonality_max_offdiag"] = opt_number(r.biorthogonality_max_offdiag);
  doc["completeness_defect"] = opt_number(r.completeness_defect);
  doc["cross_channel_difference"] = opt_number(r.cross_channel_difference);

  ordered_json spectra;
  spectra["full"] = detail::real_array(r.spectrum_full);
  spectra["channel1"] = detail::real_array(r.spectrum_channel1);
  spectra["channel2"] = detail::real_array(r.spectrum_channel2);
  doc["spectra"] = spectra;

  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) {
    ordered_json e;
    e["name"] = c.name;
    e["claim"] = c.claim;
    e["value"] = opt_number(c.value);
    e["comparison"] = c.comparison;
    e["threshold"] = c.threshold;
    e["passed"] = c.passed;
    if (!c.error.empty()) e["error"] = c.error;
    checks.push_back(e);
  }
  doc["checks"] = checks;
  doc["tolerances"] = tolerances_to_json(tol);
  doc["scope"] = ordered_json::array(
      {"finite-dimensional instances only: every spectrum is discrete",
       "continuous-spectrum completeness terms, wave operators and scattering operators are not "
       "evaluated",
       "results outside the admissibility bound are labeled non-guaranteed"});
  doc["verdict"] = r.verdict ? "pass" : "fail";
  return doc;
}

inline std::string dump_report(const SpectralReport& r, const ToleranceProfile& tol) {
  return report_to_json(r, tol).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepSpec {
  std::vector<std::int64_t> n1;
  std::vector<std::int64_t> n2;
  std::vector<double> gap;
  std::vector<double> coupling_scale;
  std::vector<std::uint64_t> seeds;
  SolverConfig solver;
  ToleranceProfile tolerances;
  std::optional<std::string> output;
  std::optional<unsigned> workers;

  std::size_t cardinality() const {
    return n1.size() * n2.size() * gap.size() * coupling_scale.size() * seeds.size();
  }
};

inline SolverConfig parse_solver_config(const json& obj, const std::string& where) {
  SolverConfig cfg;
  if (!obj.is_object()) throw Error(ErrorCode::Parse, where + ": expected an object");
  if (auto it = obj.find("delta"); it != obj.end()) cfg.delta = as_double(*it, where + ".delta");
  if (auto it = obj.find("max_iterations"); it != obj.end())
    cfg.max_iterations = static_cast<int>(as_count(*it, where + ".max_iterations"));
  if (auto it = obj.find("residual_tol"); it != obj.end())
    cfg.residual_tol = as_double(*it, where + ".residual_tol");
  if (auto it = obj.find("divergence_guard"); it != obj.end())
    cfg.divergence_guard = as_double(*it, where + ".divergence_guard");
  if (auto it = obj.find("allow_inadmissible"); it != obj.end()) {
    if (!it->is_boolean()) throw Error(ErrorCode::Parse, where + ".allow_inadmissible: expected a boolean");
    cfg.allow_inadmissible = it->get<bool>();
  }
  return cfg;
}

inline SweepSpec parse_sweep_spec(const std::string& text, const std::string& source = "sweep") {
  const json doc = parse_json(text, source);
  check_schema(doc, "sweep_spec", source);
  SweepSpec s;
  const auto list = [&](const char* key) -> const json& {
    const json& v = field(doc, key, source);
    if (!v.is_array()) throw Error(ErrorCode::Parse, source + ": " + key + " must be an array");
    return v;
  };
  for (const auto& v : list("n1")) s.n1.push_back(as_count(v, source + ": n1"));
  for (const auto& v : list("n2")) s.n2.push_back(as_count(v, source + ": n2"));
  for (const auto& v : list("gap")) s.gap.push_back(as_double(v, source + ": gap"));
  for (const auto& v : list("coupling_scale"))
    s.coupling_scale.push_back(as_double(v, source + ": coupling_scale"));
  for (const auto& v : list("seeds")) {
    if (!v.is_number_unsigned()) throw Error(ErrorCode::Parse, source + ": seeds must be non-negative integers");
    s.seeds.push_back(v.get<std::uint64_t>());
  }
  if (auto it = doc.find("solver"); it != doc.end()) s.solver = parse_solver_config(*it, source + ": solver");
  if (auto it = doc.find("tolerances"); it != doc.end()) apply_tolerances(*it, s.tolerances, source);
  if (auto it = doc.find("output"); it != doc.end()) {
    if (!it->is_string()) throw Error(ErrorCode::Parse, source + ": output must be a string");
    s.output = it->get<std::string>();
  }
  if (auto it = doc.find("workers"); it != doc.end()) {
    const auto w = as_count(*it, source + ": workers");
    if (w < 1) throw Error(ErrorCode::Parse, source + ": workers must be at least 1");
    s.workers = static_cast<unsigned>(w);
  }
  return s;
}

}  // namespace decoupling::io
