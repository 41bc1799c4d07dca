#pragma once

#include "baxq/algebra.hpp"
#include "baxq/reps.hpp"

namespace baxq {

// Six-vertex R-matrix on C^2 (x) C^2, basis (s1 s2) with s = 0,1 and the
// first factor on the slow index:
//   diag(a, b, b, a) plus c on the two middle antidiagonal slots,
//   a = q z - (q z)^{-1} ... specifically a = qz - q^{-1}z^{-1},
//   b = z - z^{-1}, c = q - q^{-1}.
Matrix sixvertex_R(Complex z, Complex q);

// Lax operator on aux (x) C^2, auxiliary index slow. Solved from the
// coproduct exchange conditions as the one-dimensional nullspace of the
// weight-compatible coefficient pattern, then scaled so that the first
// usable diagonal entry equals 1.
struct LaxOperator {
  RepKind kind = RepKind::SpinJ;
  Complex j{0.0, 0.0};
  Complex lambda{0.0, 0.0};
  int aux_dim = 0;
  int boundary_level = 0;  // aux levels >= this carry truncation error
  Matrix mat;              // (2 aux_dim) x (2 aux_dim)
  double nullspace_gap = 0.0;
  double intertwine_residual = 0.0;
  int pinned_index = 0;  // diagonal slot scaled to 1

  // Auxiliary-space block mapping site component s_in to s_out.
  Matrix block(int s_out, int s_in) const;
};

LaxOperator derive_lax(const BorelRep& rep, Complex lambda, Complex q);

// Exchange matrix for the two-site consistency check below, acting on the
// two C^2 site factors. Gauge and argument order are fixed by the site
// conventions of derive_lax; see check_rll.
Matrix rll_reference_R(Complex lambda, Complex mu, Complex q);

// Residual of the exchange identity on aux (x) C^2 (x) C^2:
//   R23 L2(lambda) L3(mu) = L3(mu) L2(lambda) R23
// with R23 = rll_reference_R acting on the site pair. Both Lax operators must
// share the same auxiliary module. Truncated kinds are compared on interior
// auxiliary levels only.
double check_rll(const LaxOperator& L_lambda, const LaxOperator& L_mu, Complex q);

}  // namespace baxq
