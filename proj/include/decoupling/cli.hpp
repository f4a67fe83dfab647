#pragma once

// Command implementations behind the `decouple` executable. Each command
// returns a process exit code; argument parsing lives in tools/.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "decoupling/decouple.hpp"
#include "decoupling/io.hpp"
#include "decoupling/model.hpp"
#include "decoupling/riccati.hpp"
#include "decoupling/verify.hpp"

namespace decoupling::cli {

/// Stable exit codes.
enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kInvalidParams = 2,
  kIoOrParse = 3,
  kNotConverged = 4,
  kDiverged = 5,
  kInadmissible = 6,
  kNumericalFailure = 7,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams:
    case ErrorCode::DimensionMismatch: return kInvalidParams;
    case ErrorCode::Parse:
    case ErrorCode::Io:
    case ErrorCode::NotHermitian: return kIoOrParse;
    case ErrorCode::NotConverged: return kNotConverged;
    case ErrorCode::Diverged: return kDiverged;
    case ErrorCode::Inadmissible: return kInadmissible;
    default: return kNumericalFailure;
  }
}

inline constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  verification failed (a report check did not pass)\n"
    "  2  invalid parameters\n"
    "  3  I/O, parse or validation error (e.g. non-Hermitian channel block)\n"
    "  4  fixed-point iteration did not converge\n"
    "  5  fixed-point iteration diverged\n"
    "  6  instance outside the admissibility bound (use --allow-inadmissible)\n"
    "  7  numerical failure (singular resolvent, non-real spectrum, ...)\n";

struct GlobalOptions {
  std::optional<std::string> tol_profile;
  std::string output = ".";
  bool quiet = false;
};

struct Console {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  template <typename F>
  void say(F&& f) const {
    if (!quiet) f(out);
  }
};

inline ToleranceProfile load_tolerances(const GlobalOptions& g,
                                        const std::vector<std::string>& overrides) {
  ToleranceProfile tol = g.tol_profile ? io::read_tolerance_profile(*g.tol_profile) : ToleranceProfile{};
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidParams, "tolerance override '" + kv + "' is not name=value");
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidParams, "tolerance override '" + kv + "' has a bad value");
    }
    tol.set(kv.substr(0, eq), value);
  }
  return tol;
}

inline void print_gap_report(std::ostream& os, const GapReport& g) {
  os << std::setprecision(17);
  os << "d0                 " << g.d0 << "\n"
     << "||B12||_2          " << g.b_hs_norm << "\n"
     << "unit-ball margin   " << g.unit_ball_margin << "\n"
     << "sigma(A1)          [" << g.sigma1.minCoeff() << ", " << g.sigma1.maxCoeff() << "]\n"
     << "sigma(A2)          [" << g.sigma2.minCoeff() << ", " << g.sigma2.maxCoeff() << "]\n";
}

/// Aligned text table: one row per check.
inline void print_report_summary(std::ostream& os, const SpectralReport& r) {
  os << "instance " << r.instance_digest << " (" << r.n1 << "+" << r.n2 << ")"
     << (r.guaranteed ? "" : "  [non-guaranteed]") << "\n";
  os << "solver   " << r.solver_status << ", " << r.iterations << " iterations\n";
  std::size_t width = 0;
  for (const auto& c : r.checks) width = std::max(width, c.name.size());
  for (const auto& c : r.checks) {
    os << "  " << (c.passed ? "PASS" : "FAIL") << "  " << std::left
       << std::setw(static_cast<int>(width)) << c.name << std::right << "  ";
    if (c.value) {
      os << std::scientific << std::setprecision(3) << std::setw(11) << *c.value << " " << c.comparison
         << " " << c.threshold << std::defaultfloat;
    } else {
      os << "n/a (" << c.error << ")";
    }
    os << "  " << c.claim << "\n";
  }
  os << "verdict  " << (r.verdict ? "PASS" : "FAIL") << "\n";
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  GeneratorParams params;
  std::optional<std::string> file;
};

inline int cmd_generate(const GlobalOptions& g, const GenerateOptions& o, const Console& con) {
  try {
    io::InstanceFile f{generate_instance(o.params), {o.params.seed, o.params.gap, o.params.coupling_scale}};
    const std::filesystem::path path =
        o.file ? std::filesystem::path(*o.file) : std::filesystem::path(g.output) / "instance.json";
    io::write_instance(path, f);
    con.say([&](std::ostream& os) {
      os << "wrote " << path.string() << "\n";
      print_gap_report(os, gap_report(f.hamiltonian));
    });
    return kOk;
  } catch (const Error& e) {
    con.err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    con.err << e.what() << "\n";
    return kIoOrParse;
  }
}

// ---------------------------------------------------------------------------

struct SolveOptions {
  std::string instance;
  SolverConfig solver;
  /// "1", "2" or "both".
  std::string channel = "both";
  bool independent_solve = false;
};

inline void write_channel_outputs(const std::filesystem::path& dir, const RiccatiSolution& sol,
                                  const DecoupledChannel& ch) {
  const std::string a = std::to_string(sol.alpha.value());
  io::write_text(dir / ("q" + a + ".json"), io::solution_to_json(sol).dump(2) + "\n");
  io::write_text(dir / ("h" + a + ".json"),
                 io::matrix_document("h_alpha", sol.alpha.value(), ch.h_alpha).dump(2) + "\n");
  io::write_text(dir / ("w" + a + ".json"),
                 io::matrix_document("w_alpha", sol.alpha.value(), ch.w_alpha).dump(2) + "\n");
  io::write_text(dir / ("eigenvalues" + a + ".json"), io::eigenvalues_document(ch).dump(2) + "\n");
}

inline int cmd_solve(const GlobalOptions& g, const SolveOptions& o, const Console& con) {
  try {
    if (o.channel != "1" && o.channel != "2" && o.channel != "both")
      throw Error(ErrorCode::InvalidParams, "--channel must be 1, 2 or both");
    const io::InstanceFile f = io::read_instance(o.instance);
    const auto& h = f.hamiltonian;

    std::vector<RiccatiSolution> solutions;
    const bool want1 = o.channel != "2";
    const bool want2 = o.channel != "1";
    if (want2 && o.independent_solve) {
      if (want1) solutions.push_back(solve(h, kChannel1, o.solver));
      solutions.push_back(solve(h, kChannel2, o.solver));
    } else {
      const RiccatiSolution s1 = solve(h, kChannel1, o.solver);
      if (want1) solutions.push_back(s1);
      if (want2) solutions.push_back(conjugate_solution(h, s1));
    }

    // Build everything before writing so failures leave no partial output.
    std::vector<DecoupledChannel> channels;
    for (const auto& s : solutions) channels.push_back(build_channel(h, s));
    const std::filesystem::path dir(g.output);
    for (std::size_t i = 0; i < solutions.size(); ++i) write_channel_outputs(dir, solutions[i], channels[i]);

    con.say([&](std::ostream& os) {
      for (std::size_t i = 0; i < solutions.size(); ++i) {
        const auto& s = solutions[i];
        os << "channel " << s.alpha.value() << ": " << s.iterations_used << " iterations, "
           << std::scientific << std::setprecision(3) << "fixed-point residual "
           << s.fixed_point_residual << ", Riccati residual " << s.riccati_residual << ", ||Q|| "
           << s.q_operator_norm << (s.admissible ? "" : " [non-guaranteed]") << std::defaultfloat
           << "\n  eigenvalues:";
        os << std::setprecision(17);
        for (Eigen::Index j = 0; j < channels[i].eigenvalues.size(); ++j)
          os << " " << channels[i].eigenvalues(j).real();
        os << "\n";
      }
      os << "wrote outputs to " << dir.string() << "\n";
    });
    return kOk;
  } catch (const Error& e) {
    con.err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    con.err << e.what() << "\n";
    return kIoOrParse;
  }
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::string instance;
  SolverConfig solver;
  std::vector<std::string> tolerance_overrides;
  std::optional<std::string> q_file;
  std::optional<std::string> report_file;
  bool independent_solve = true;
  bool summary = true;
};

inline int cmd_verify(const GlobalOptions& g, const VerifyOptions& o, const Console& con) {
  try {
    const ToleranceProfile tol = load_tolerances(g, o.tolerance_overrides);
    const io::InstanceFile f = io::read_instance(o.instance);
    ReportOptions ro;
    ro.independent_channel2 = o.independent_solve;
    if (o.q_file) ro.q_override = channel1_q(io::read_solution(*o.q_file));
    const SpectralReport r = full_report(f.hamiltonian, o.solver, tol, ro);
    const std::filesystem::path path = o.report_file ? std::filesystem::path(*o.report_file)
                                                     : std::filesystem::path(g.output) / "report.json";
    io::write_text(path, io::dump_report(r, tol));
    if (o.summary) con.say([&](std::ostream& os) { print_report_summary(os, r); });
    return r.verdict ? kOk : kVerificationFailed;
  } catch (const Error& e) {
    con.err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    con.err << e.what() << "\n";
    return kIoOrParse;
  }
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string spec;
  std::optional<unsigned> workers;
};

struct SweepRow {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  double gap = 0.0;
  double coupling_scale = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  double max_defect = 0.0;
  std::string verdict;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string sweep_point_name(const SweepRow& row) {
  std::ostringstream os;
  os << "report_n1-" << row.n1 << "_n2-" << row.n2 << "_gap-" << format_number(row.gap) << "_c-"
     << format_number(row.coupling_scale) << "_seed-" << row.seed << ".json";
  return os.str();
}

/// Verdict column: pass/fail, with ":non-guaranteed" appended outside the
/// admissibility bound, or "error:<code>" when the point could not be run.
inline SweepRow run_sweep_point(SweepRow row, const io::SweepSpec& spec,
                                const std::filesystem::path& dir) {
  try {
    GeneratorParams p;
    p.n1 = row.n1;
    p.n2 = row.n2;
    p.gap = row.gap;
    p.coupling_scale = row.coupling_scale;
    p.seed = row.seed;
    const TwoChannelHamiltonian h = generate_instance(p);
    const SpectralReport r = full_report(h, spec.solver, spec.tolerances);
    io::write_text(dir / sweep_point_name(row), io::dump_report(r, spec.tolerances));
    row.iterations = r.iterations;
    row.max_defect = r.max_defect();
    if (r.guaranteed) {
      row.verdict = r.verdict ? "pass" : "fail";
    } else {
      const bool ran = r.solver_status == "converged";
      row.verdict = std::string(ran && r.checks_passed_except_admissibility() ? "pass" : "fail") +
                    ":non-guaranteed";
    }
  } catch (const Error& e) {
    row.verdict = "error:" + std::string(to_string(e.code()));
  }
  return row;
}

inline int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, const Console& con) {
  try {
    const io::SweepSpec spec = io::parse_sweep_spec(io::read_text(o.spec), o.spec);
    if (spec.cardinality() == 0) throw Error(ErrorCode::InvalidParams, "sweep grid is empty");
    const std::filesystem::path dir(spec.output.value_or(g.output));
    std::filesystem::create_directories(dir);

    std::vector<SweepRow> rows;
    for (auto n1 : spec.n1)
      for (auto n2 : spec.n2)
        for (double gap : spec.gap)
          for (double c : spec.coupling_scale)
            for (auto seed : spec.seeds) rows.push_back({n1, n2, gap, c, seed, 0, 0.0, ""});

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(
        o.workers.value_or(spec.workers.value_or(hw)), static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = run_sweep_point(rows[i], spec, dir);
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();

    std::ostringstream csv;
    csv << "n1,n2,gap,coupling_scale,seed,iterations,max_defect,verdict\n";
    for (const auto& r : rows)
      csv << r.n1 << "," << r.n2 << "," << format_number(r.gap) << "," << format_number(r.coupling_scale)
          << "," << r.seed << "," << r.iterations << "," << format_number(r.max_defect) << ","
          << r.verdict << "\n";
    io::write_text(dir / "summary.csv", csv.str());

    const bool all_pass = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) {
      return r.verdict == "pass" || r.verdict == "pass:non-guaranteed";
    });
    con.say([&](std::ostream& os) {
      os << csv.str() << rows.size() << " grid points, summary in " << (dir / "summary.csv").string() << "\n";
    });
    return all_pass ? kOk : kVerificationFailed;
  } catch (const Error& e) {
    con.err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    con.err << e.what() << "\n";
    return kIoOrParse;
  }
}

}  // namespace decoupling::cli
