#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "baxq/algebra.hpp"

namespace baxq {

enum class RepKind { SpinJ, HighestWeightInf, OscPlus, OscMinus, Reflected };

std::string rep_kind_name(RepKind k);

// Borel-type module data for one auxiliary space. All matrices are stored at
// unit spectral parameter: the beta-raising generator of the module at
// spectral parameter lambda is lambda * E_beta_unit (and, when present, the
// beta-lowering generator is lambda^{-1} * F_beta_unit).
//
// Basis levels k = 0..dim-1. Weight convention: [H, E_alpha] = 2 E_alpha and
// [H, E_beta] = -2 E_beta.
struct BorelRep {
  RepKind kind = RepKind::SpinJ;
  Complex j{0.0, 0.0};  // spin label where meaningful
  int dim = 0;
  // First level whose defining matrix elements are corrupted by truncation.
  // Equals dim for exactly finite modules.
  int boundary_level = 0;
  Matrix E_alpha;
  Matrix E_beta_unit;
  Matrix H;
  std::optional<Matrix> F_alpha;
  std::optional<Matrix> F_beta_unit;

  bool truncated() const { return boundary_level < dim; }
  bool full() const { return F_alpha.has_value(); }
};

// (2j+1)-dimensional spin-j module, 2j a nonnegative integer. Carries the
// full generator set.
BorelRep spin_rep(double j, Complex q);

// Truncation to N levels of the infinite highest-weight module with complex
// label j. Generic j admits only the Borel half.
BorelRep highest_weight_rep(Complex j, int N, Complex q);

// Truncation to N levels of the two q-oscillator modules, sign = +1 or -1.
BorelRep osc_rep(int sign, int N, Complex q);

// Truncation to N levels of the lowering-ordered module whose E_alpha
// annihilates level 0; realizes the tail region of large highest-weight
// modules for |q| < 1.
BorelRep reflected_rep(int N, Complex q);

struct AlgebraCheckReport {
  std::vector<std::pair<std::string, double>> residuals;  // per relation
  double max_interior = 0.0;
  bool pass(double tol) const { return max_interior <= tol; }
};

// Defining-relation residuals for the module: weight brackets, both cubic
// Serre orderings, oscillator contractions for the oscillator kinds, and the
// Cartan pairing when the full generator set is present. Truncated kinds are
// evaluated away from the truncation boundary.
AlgebraCheckReport check_algebra_relations(const BorelRep& rep, Complex q);

struct RepLimitRow {
  double j = 0.0;
  double err_plus = 0.0;   // raising-chain distance to the +oscillator action
  double err_minus = 0.0;  // distance to the -oscillator action
};

// Entrywise distance between the rescaled spin-j beta-raising coefficients
// and the oscillator coefficients, as a function of j. Converges for |q| < 1
// with ratio |q|^4 per unit step of j.
std::vector<RepLimitRow> rep_limit_check(Complex q, Complex lambda, int N,
                                         const std::vector<double>& j_list);

}  // namespace baxq
