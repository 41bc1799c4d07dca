#pragma once

#include <optional>
#include <string>
#include <vector>

#include "baxq/lax.hpp"
#include "baxq/reps.hpp"

namespace baxq {

// Factory over all auxiliary module kinds. N is ignored for SpinJ.
BorelRep make_rep(RepKind kind, Complex j, int N, Complex q);

enum class OpTag { Z, Zj, ZjPlus, Qminus, Qplus, ReflectedT };
std::string op_tag_name(OpTag t);

// Spin sector of a computational basis state: sum of site sz, bit = 1 is +1.
int spin_z(int state, int L);

struct Sector {
  int S = 0;
  std::vector<int> indices;
};
std::vector<Sector> sector_decomposition(int L);
Matrix sector_block(const Matrix& M, const Sector& s);
void add_sector_block(Matrix& M, const Sector& s, const Matrix& B);

// Operator on the 2^L-dimensional quantum space obtained as a twisted
// auxiliary trace of the monodromy built from one Lax operator per site.
struct QuantumOperator {
  OpTag tag = OpTag::Z;
  int L = 0;
  Complex lambda{0.0, 0.0};
  Complex j{0.0, 0.0};
  double twist_sign = 1.0;
  bool primed = false;
  bool infinite_aux = false;
  int trunc_N = 0;
  Matrix mat;
  double s_comm_residual = 0.0;
  double truncation_delta = 0.0;
  std::string warning;
  std::vector<int> tail_mode_count;  // per sector, trace-continued kinds only
};

struct TraceOptions {
  // Level weight e^{i sign k phi}; unset resolves to +1, or -1 for the
  // reflected module.
  std::optional<double> twist_sign;
  int from_level = 0;
  bool check_truncation = true;
};

// Builds the Lax operator for the module, forms the length-L monodromy and
// traces over the auxiliary space with level weights e^{i sign k phi}.
// Finite modules are summed directly. Truncated infinite modules are summed
// by analytic continuation: a plain head below a safe level, then a
// geometric-mode tail fitted from consecutive diagonal samples and validated
// against spare samples.
QuantumOperator transfer_matrix(const BorelRep& rep, Complex lambda,
                                const ModelParams& p,
                                const TraceOptions& opt = {});

// Same monodromy, trace split at `split`: first component sums levels
// < split directly, second continues the sum over levels >= split.
std::pair<QuantumOperator, QuantumOperator> transfer_matrix_split(
    const BorelRep& rep, Complex lambda, const ModelParams& p, int split,
    const TraceOptions& opt = {});

// Sector rescaling mapping a Q-type operator at argument lambda_base * q^m to
// its normalized form: sector S is multiplied by
// lambda_base^{s S/4} q^{s m S/4}, s = -1 for the minus family and +1 for the
// plus family. Powers are principal-branch and split between the two factors.
QuantumOperator normalize_q(const QuantumOperator& op, Complex lambda_base,
                            double shift_m, const ModelParams& p);

struct SectorSpectrum {
  int S = 0;
  Matrix V;     // eigenvectors of the reference block
  Matrix Vinv;
  std::vector<Complex> reference_eigs;
  std::vector<std::vector<Complex>> member_eigs;
  double max_leakage = 0.0;  // off-diagonal weight of members in the basis
};
struct JointSpectrum {
  std::vector<SectorSpectrum> sectors;
};

// Diagonalizes the reference per sector (throws on near-degenerate spectra)
// and expresses each member in that eigenbasis.
JointSpectrum joint_spectrum(const QuantumOperator& reference,
                             const std::vector<const QuantumOperator*>& members,
                             double degeneracy_tol = 1e-8);

}  // namespace baxq
