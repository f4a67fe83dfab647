#pragma once

// Machine-checkable report over every spectral identity the decoupling is
// supposed to satisfy. Failed checks are recorded, not thrown.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "decoupling/decouple.hpp"
#include "decoupling/linalg.hpp"
#include "decoupling/model.hpp"
#include "decoupling/riccati.hpp"

namespace decoupling {

/// max |<psi_j, dual_k> - delta_jk| over all pairs.
inline double check_biorthogonality(const DecoupledChannel& ch) {
  const Eigen::Index n = ch.right_vectors.cols();
  // gram(k, j) = dual_k* psi_j
  const ComplexMatrix gram = ch.left_duals.adjoint() * ch.right_vectors;
  double offdiag = 0.0, diag = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      if (j == k) diag = std::max(diag, std::abs(gram(k, j) - 1.0));
      else offdiag = std::max(offdiag, std::abs(gram(k, j)));
    }
  return std::max(offdiag, diag);
}

/// ||sum_j psi_j dual_j* - I||_HS.
inline double check_completeness(const DecoupledChannel& ch) {
  const Eigen::Index n = ch.h_alpha.rows();
  if (ch.right_vectors.cols() < n || ch.left_duals.cols() < n)
    throw Error(ErrorCode::IncompleteEigensystem,
                std::to_string(ch.right_vectors.cols()) + " eigenpairs resolved, " +
                    std::to_string(n) + " required");
  return hilbert_schmidt_norm(ch.right_vectors * ch.left_duals.adjoint() -
                              ComplexMatrix::Identity(n, n));
}

/// Tolerances for each report check. Entries marked "scaled" are multiplied
/// by the instance scale named next to them.
struct ToleranceProfile {
  double ball_slack = 1e-12;
  double fixed_point = 1e-10;        // scaled by max(1, ||B||_2)
  double riccati = 1e-10;            // scaled by max(1, ||B||_2)
  double basic_equation = 1e-10;     // scaled by max(1, ||B||_2)
  double original_problem = 1e-9;
  double diagonalization = 1e-10;    // scaled by ||H||_HS
  double unitarity = 1e-10;
  double self_adjointness = 1e-10;   // scaled by ||H||_HS
  double invariance = 1e-10;         // scaled by ||H||_HS
  double x_positivity = 1e-12;
  double spectrum_match = 1e-9;      // scaled by max(1, ||H||)
  double three_way = 1e-9;           // scaled by max(1, ||H||)
  double reality = 1e-10;            // scaled by max(1, ||H||)
  double biorthogonality = 1e-10;
  double completeness = 1e-9;
  double cross_channel = 1e-9;

  template <typename F>
  void for_each(F&& f) {
    f("ball_slack", ball_slack);
    f("fixed_point", fixed_point);
    f("riccati", riccati);
    f("basic_equation", basic_equation);
    f("original_problem", original_problem);
    f("diagonalization", diagonalization);
    f("unitarity", unitarity);
    f("self_adjointness", self_adjointness);
    f("invariance", invariance);
    f("x_positivity", x_positivity);
    f("spectrum_match", spectrum_match);
    f("three_way", three_way);
    f("reality", reality);
    f("biorthogonality", biorthogonality);
    f("completeness", completeness);
    f("cross_channel", cross_channel);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ToleranceProfile*>(this)->for_each(
        [&](const char* name, double& v) { f(name, static_cast<const double&>(v)); });
  }

  /// Sets one tolerance by name; throws InvalidParams on unknown names or
  /// non-positive values.
  void set(const std::string& name, double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw Error(ErrorCode::InvalidParams, "tolerance '" + name + "' must be positive");
    bool found = false;
    for_each([&](const char* key, double& v) {
      if (name == key) {
        v = value;
        found = true;
      }
    });
    if (!found) throw Error(ErrorCode::InvalidParams, "unknown tolerance '" + name + "'");
  }
};

/// One line of the report. `value` is unset when the check could not be
/// evaluated, in which case `error` says why.
struct CheckResult {
  std::string name;
  std::string claim;
  std::optional<double> value;
  double threshold = 0.0;
  /// "<=" : pass when value <= threshold; ">" : pass when value > threshold.
  std::string comparison = "<=";
  bool passed = false;
  std::string error;
};

struct ReportOptions {
  /// Re-solve channel 2 independently and compare with the conjugate solution.
  bool independent_channel2 = true;
  /// Use this Q_{21} instead of solving.
  std::optional<ComplexMatrix> q_override;
};

struct SpectralReport {
  std::string instance_digest;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  GapReport gap;
  double delta = 1.0;
  Admissibility admissibility;
  bool guaranteed = false;
  bool solver_ran = false;
  std::string solver_status;
  int iterations = 0;
  std::optional<double> max_iterate_norm;
  std::optional<double> q_operator_norm;
  std::optional<double> fixed_point_residual;
  std::optional<double> riccati_residual;
  std::optional<double> basic_equation_residual;
  std::optional<double> original_problem_max_residual;
  std::optional<double> diagonalization_offdiag_norm;
  std::optional<double> unitarity_defect;
  std::optional<double> self_adjointness_defect;
  std::optional<double> invariance_residual;
  std::optional<double> x_min_eigenvalue;
  std::optional<double> spectrum_match_max_error;
  std::optional<double> three_way_max_error;
  std::optional<double> spectrum_disjoint_gap;
  std::optional<double> reality_max_imag;
  std::optional<double> biorthogonality_max_offdiag;
  std::optional<double> completeness_defect;
  std::optional<double> cross_channel_difference;
  std::vector<double> spectrum_full;
  std::vector<double> spectrum_channel1;
  std::vector<double> spectrum_channel2;
  std::vector<CheckResult> checks;
  bool verdict = false;

  /// True when every check other than admissibility passed.
  bool checks_passed_except_admissibility() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) {
      return c.passed || c.name == "admissibility";
    });
  }

  /// Largest raw defect among the residual-type checks (0 when none ran).
  double max_defect() const {
    double m = 0.0;
    for (const auto& c : checks)
      if (c.comparison == "<=" && c.value && c.name != "ball_membership" &&
          c.name != "x_positivity")
        m = std::max(m, *c.value);
    return m;
  }
};

/// SHA-256 over n1, n2 and the row-major real/imaginary parts of a1, a2, b12.
inline std::string instance_digest(const TwoChannelHamiltonian& h) {
  std::vector<unsigned char> bytes;
  const auto put = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes.insert(bytes.end(), c, c + n);
  };
  const std::int64_t dims[2] = {static_cast<std::int64_t>(h.n1()), static_cast<std::int64_t>(h.n2())};
  put(dims, sizeof dims);
  for (const ComplexMatrix* m : {&h.a1(), &h.a2(), &h.b12()})
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        const double parts[2] = {(*m)(i, j).real(), (*m)(i, j).imag()};
        put(parts, sizeof parts);
      }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  std::ostringstream out;
  out << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(md[i]);
  return out.str();
}

namespace detail {

inline std::vector<double> sorted_real_parts(const ComplexVector& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i).real();
  std::sort(out.begin(), out.end());
  return out;
}

inline double sorted_max_error(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

/// Runs the solver for both channels, builds the decoupled channels and the
/// block transform, and evaluates every check against `tol`.
inline SpectralReport full_report(const TwoChannelHamiltonian& h, const SolverConfig& cfg,
                                  const ToleranceProfile& tol, const ReportOptions& opts = {}) {
  SpectralReport r;
  r.instance_digest = instance_digest(h);
  r.n1 = h.n1();
  r.n2 = h.n2();
  r.gap = gap_report(h);
  r.delta = cfg.delta;
  r.admissibility = check_admissibility(h, cfg.delta);
  r.guaranteed = r.admissibility.admissible && r.admissibility.d0 > 0.0;

  const ComplexMatrix full = assemble_full(h);
  const double b_scale = std::max(1.0, r.gap.b_hs_norm);
  const double h_hs = hilbert_schmidt_norm(full);
  const double h_scale = std::max(1.0, operator_norm(full));

  const auto add = [&](std::string name, std::string claim, double threshold,
                       std::optional<double>& slot, const std::function<double()>& compute,
                       std::string comparison = "<=") {
    CheckResult c;
    c.name = std::move(name);
    c.claim = std::move(claim);
    c.threshold = threshold;
    c.comparison = std::move(comparison);
    try {
      slot = compute();
      c.value = slot;
      c.passed = c.comparison == "<=" ? (*slot <= threshold) : (*slot > threshold);
    } catch (const Error& e) {
      c.error = e.what();
    }
    r.checks.push_back(std::move(c));
  };

  {
    CheckResult c;
    c.name = "admissibility";
    c.claim = "||B||_2 < d0 * min{1/(1+delta), delta/(1+delta^2)} with separated channel spectra";
    c.value = r.admissibility.bound - r.admissibility.b_hs_norm;
    c.threshold = 0.0;
    c.comparison = ">";
    c.passed = r.guaranteed;
    r.checks.push_back(std::move(c));
  }

  std::optional<RiccatiSolution> sol1;
  if (opts.q_override) {
    RiccatiSolution s;
    s.alpha = kChannel1;
    s.q = *opts.q_override;
    if (s.q.rows() != h.n2() || s.q.cols() != h.n1())
      throw Error(ErrorCode::DimensionMismatch, "supplied Q must be n2 x n1");
    s.admissible = r.admissibility.admissible;
    s.admissibility_bound = r.admissibility.bound;
    s.q_operator_norm = operator_norm(s.q);
    s.max_iterate_norm = s.q_operator_norm;
    s.riccati_residual = riccati_residual(h, kChannel1, s.q);
    try {
      s.fixed_point_residual = hilbert_schmidt_norm(fixed_point_map(h, kChannel1, s.q) - s.q);
    } catch (const Error&) {
      s.fixed_point_residual = std::numeric_limits<double>::infinity();
    }
    sol1 = std::move(s);
    r.solver_ran = false;
    r.solver_status = "supplied";
  } else if (!r.guaranteed && !cfg.allow_inadmissible) {
    r.solver_status = "skipped: inadmissible";
  } else {
    try {
      sol1 = solve(h, kChannel1, cfg);
      r.solver_ran = true;
      r.solver_status = "converged";
    } catch (const NotConvergedError& e) {
      r.solver_ran = true;
      r.iterations = e.iterations();
      r.solver_status = std::string("failed: ") + e.what();
    } catch (const Error& e) {
      r.solver_ran = true;
      r.solver_status = std::string("failed: ") + e.what();
    }
  }

  if (sol1) {
    r.iterations = sol1->iterations_used;
    r.max_iterate_norm = sol1->max_iterate_norm;
  }

  const auto need_solution = [&]() -> const RiccatiSolution& {
    if (!sol1) throw Error(ErrorCode::NotConverged, "no solution available (" + r.solver_status + ")");
    return *sol1;
  };

  std::optional<RiccatiSolution> sol2;
  if (sol1) {
    try {
      sol2 = conjugate_solution(h, *sol1);
    } catch (const Error&) {
    }
  }
  const auto need_solution2 = [&]() -> const RiccatiSolution& {
    need_solution();
    if (!sol2) throw Error(ErrorCode::ResolventSingular, "conjugate solution could not be evaluated");
    return *sol2;
  };

  add("ball_membership", "solution and all iterates lie in the ball ||Q|| <= delta",
      cfg.delta + tol.ball_slack, r.q_operator_norm, [&] {
        const auto& s = need_solution();
        return std::max(s.q_operator_norm, s.max_iterate_norm);
      });
  add("fixed_point_residual", "Q equals the spectral-integral map applied to Q",
      tol.fixed_point * b_scale, r.fixed_point_residual,
      [&] { return need_solution().fixed_point_residual; });
  add("riccati_residual", "Q A_a - A_b Q + Q B_ab Q = B_ba in both channels",
      tol.riccati * b_scale, r.riccati_residual, [&] {
        return std::max(need_solution().riccati_residual, need_solution2().riccati_residual);
      });

  std::optional<DecoupledChannel> ch1, ch2;
  std::string channel_error;
  try {
    if (sol1) ch1 = build_channel(h, *sol1);
    if (sol2) ch2 = build_channel(h, *sol2);
  } catch (const Error& e) {
    channel_error = e.what();
  }
  const auto need_channels = [&]() -> std::pair<const DecoupledChannel&, const DecoupledChannel&> {
    need_solution2();
    if (!ch1 || !ch2) throw Error(ErrorCode::EigFailure, "channel construction failed: " + channel_error);
    return {*ch1, *ch2};
  };

  add("basic_equation", "H_a = A_a + V_a(H_a) with the operator-argument potential",
      tol.basic_equation * b_scale, r.basic_equation_residual, [&] {
        auto [c1, c2] = need_channels();
        return std::max(verify_basic_equation(h, c1), verify_basic_equation(h, c2));
      });
  add("original_problem", "each eigenpair of H_a solves (A_a + V_a(z)) u = z u",
      tol.original_problem, r.original_problem_max_residual, [&] {
        auto [c1, c2] = need_channels();
        double m = 0.0;
        for (const DecoupledChannel* c : {&c1, &c2})
          for (Eigen::Index j = 0; j < c->eigenvalues.size(); ++j)
            m = std::max(m, eigenpair_solves_original(h, *c, j));
        return m;
      });

  std::optional<DecouplingTransform> transform;
  const auto need_transform = [&]() -> const DecouplingTransform& {
    if (!transform) transform = build_transform(h, need_solution());
    return *transform;
  };
  add("block_diagonalization", "Q^{-1} H Q = diag{H1, H2}", tol.diagonalization * h_hs,
      r.diagonalization_offdiag_norm, [&] { return need_transform().offdiag_norm(); });
  add("unitarity", "Q X^{-1/2} is unitary", tol.unitarity, r.unitarity_defect,
      [&] { return need_transform().unitarity_defect(); });
  add("self_adjointness", "H'' = X^{1/2} H' X^{-1/2} is self-adjoint",
      tol.self_adjointness * h_hs, r.self_adjointness_defect, [&] {
        const auto& t = need_transform();
        return hilbert_schmidt_norm(t.h_double_prime - t.h_double_prime.adjoint());
      });
  add("invariant_subspace", "graph {f, Q f} is invariant under H in both channels",
      tol.invariance * h_hs, r.invariance_residual, [&] {
        const auto& s1 = need_solution();
        const auto& s2 = need_solution2();
        return std::max(invariant_subspace(h, s1).invariance_residual(h),
                        invariant_subspace(h, s2).invariance_residual(h));
      });
  add("x_positivity", "X_a = I + Q* Q >= I", 1.0 - tol.x_positivity, r.x_min_eigenvalue,
      [&] {
        const auto& t = need_transform();
        return std::min(hermitian_eig(t.x1).eigenvalues.minCoeff(),
                        hermitian_eig(t.x2).eigenvalues.minCoeff());
      },
      ">");

  const std::vector<double> sigma_full = [&] {
    const RealVector ev = hermitian_eig(full).eigenvalues;
    return std::vector<double>(ev.data(), ev.data() + ev.size());
  }();
  r.spectrum_full = sigma_full;
  if (ch1 && ch2) {
    r.spectrum_channel1 = detail::sorted_real_parts(ch1->direct_eigenvalues);
    r.spectrum_channel2 = detail::sorted_real_parts(ch2->direct_eigenvalues);
  }

  add("spectrum_split", "sigma(H1) + sigma(H2) = sigma(H) as multisets",
      tol.spectrum_match * h_scale, r.spectrum_match_max_error, [&] {
        need_channels();
        return detail::sorted_max_error(detail::concat(r.spectrum_channel1, r.spectrum_channel2),
                                        sigma_full);
      });
  add("three_way_spectrum", "spectra from H', H'' and H agree", tol.three_way * h_scale,
      r.three_way_max_error, [&] {
        auto [c1, c2] = need_channels();
        const auto& t = need_transform();
        std::vector<double> from_prime = detail::concat(
            detail::sorted_real_parts(general_eigenvalues(t.h1_prime())),
            detail::sorted_real_parts(general_eigenvalues(t.h2_prime())));
        const RealVector e1 = hermitian_eig(t.h1_double_prime(), 1e-8 * h_scale).eigenvalues;
        const RealVector e2 = hermitian_eig(t.h2_double_prime(), 1e-8 * h_scale).eigenvalues;
        std::vector<double> from_double(e1.data(), e1.data() + e1.size());
        from_double.insert(from_double.end(), e2.data(), e2.data() + e2.size());
        std::vector<double> from_channels = detail::concat(
            detail::sorted_real_parts(c1.eigenvalues), detail::sorted_real_parts(c2.eigenvalues));
        return std::max({detail::sorted_max_error(from_prime, sigma_full),
                         detail::sorted_max_error(from_double, sigma_full),
                         detail::sorted_max_error(from_channels, sigma_full)});
      });
  add("spectrum_disjoint", "sigma(H1) and sigma(H2) do not intersect", 0.0,
      r.spectrum_disjoint_gap, [&] {
        need_channels();
        return spectral_distance(std::span<const double>(r.spectrum_channel1),
                                 std::span<const double>(r.spectrum_channel2));
      },
      ">");
  add("reality", "the spectra of H1 and H2 are real", tol.reality * h_scale, r.reality_max_imag,
      [&] {
        auto [c1, c2] = need_channels();
        return std::max(c1.direct_eigenvalues.imag().cwiseAbs().maxCoeff(),
                        c2.direct_eigenvalues.imag().cwiseAbs().maxCoeff());
      });
  add("biorthogonality", "<psi_j, dual_k> = delta_jk in both channels", tol.biorthogonality,
      r.biorthogonality_max_offdiag, [&] {
        auto [c1, c2] = need_channels();
        return std::max(check_biorthogonality(c1), check_biorthogonality(c2));
      });
  add("completeness", "sum_j psi_j <., dual_j> = I in both channels", tol.completeness,
      r.completeness_defect, [&] {
        auto [c1, c2] = need_channels();
        return std::max(check_completeness(c1), check_completeness(c2));
      });

  if (opts.independent_channel2 && !opts.q_override) {
    add("cross_channel", "conjugate channel-2 solution matches an independent channel-2 solve",
        tol.cross_channel, r.cross_channel_difference, [&] {
          auto [c1, c2] = need_channels();
          SolverConfig cfg2 = cfg;
          cfg2.allow_inadmissible = true;
          const RiccatiSolution indep = solve(h, kChannel2, cfg2);
          return hilbert_schmidt_norm(h.a2() + h.b21() * indep.q - c2.h_alpha);
        });
  }

  r.verdict = std::all_of(r.checks.begin(), r.checks.end(),
                          [](const CheckResult& c) { return c.passed; });
  return r;
}

}  // namespace decoupling
