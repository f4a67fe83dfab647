// Decouples the smallest possible two-channel Hamiltonian, [[0, 0.5], [0.5, 2]],
// and shows that each energy-independent channel Hamiltonian reproduces one
// eigenvalue of the full matrix.

#include <iomanip>
#include <iostream>

#include "decoupling/decouple.hpp"
#include "decoupling/riccati.hpp"

int main() {
  using namespace decoupling;

  ComplexMatrix a1(1, 1), a2(1, 1), b12(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  b12 << 0.5;
  const TwoChannelHamiltonian h(a1, a2, b12);

  const RiccatiSolution s1 = solve(h, kChannel1, SolverConfig{});
  const RiccatiSolution s2 = conjugate_solution(h, s1);
  const DecoupledChannel c1 = build_channel(h, s1);
  const DecoupledChannel c2 = build_channel(h, s2);

  std::cout << std::setprecision(15);
  std::cout << "Q21 = " << s1.q(0, 0).real() << " after " << s1.iterations_used << " iterations\n";
  std::cout << "H1  = " << c1.h_alpha(0, 0).real() << "\n";
  std::cout << "H2  = " << c2.h_alpha(0, 0).real() << "\n";
  std::cout << "eig(H) = " << hermitian_eig(assemble_full(h)).eigenvalues.transpose() << "\n";
  std::cout << "residual of (A1 + V1(z)) u = z u: " << eigenpair_solves_original(h, c1, 0) << "\n";
}
