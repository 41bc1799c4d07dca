#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace baxq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Thrown for mathematically ill-posed inputs (root-of-unity q, resonant twist,
// truncation too small to support a requested continuation, ...).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Global model parameters shared by every computation.
//   q       anisotropy, must avoid roots of unity; |q| < 1 required whenever a
//           truncated infinite-dimensional auxiliary space is traced
//   phi     twist angle; level k of the auxiliary trace carries weight e^{i k phi}
//   L       number of spin-1/2 sites in the quantum space
struct ModelParams {
  Complex q{0.0, 0.0};
  double phi = 0.25;
  int L = 4;
  std::vector<Complex> lambda_grid;
  int trunc_N = 32;
  double tol_rel = 1e-8;
  double tol_limit = 1e-6;
  std::uint64_t seed = 20240801ull;
  std::string lax_pin = "first_diagonal";
  std::string branch = "principal";
  std::string sector_filter = "all";  // "all" or "nonzero"

  static ModelParams defaults();

  // Throws ModelError on invalid inputs. needs_infinite_aux marks runs that
  // trace over a truncated infinite auxiliary space.
  void validate(bool needs_infinite_aux) const;
};

// q-number [x] = (q^x - q^{-x}) / (q - q^{-1}).
Complex qnum(Complex x, Complex q);

// Principal-branch power q^x = exp(x log q).
Complex qpow(Complex q, Complex x);

// lambda shifted by q^m through one code path, so equal shift requests
// produce bitwise-identical cache keys.
Complex shifted_lambda(Complex lambda, Complex q, double m);

// Kronecker product, first factor on the slow (outer) index.
Matrix kron(const Matrix& A, const Matrix& B);

// q^{H} for a diagonal H (diagonal exponentiation, principal branch).
Matrix qexp_diag(const Matrix& H, Complex q);

// Weighted partial trace over the auxiliary factor of a matrix acting on
// aux (x) chain, aux index slow. weights.size() must equal aux_dim.
Matrix twisted_partial_trace(const Matrix& M, int aux_dim, int chain_dim,
                             const std::vector<Complex>& weights);

struct NullspaceResult {
  Matrix basis;               // columns span the numerical nullspace
  RealVector singular_values; // full spectrum, descending
  double gap = 0.0;           // smallest kept / largest discarded singular value
};

// Numerical nullspace: singular values below max_sv / gap_ratio are discarded.
NullspaceResult nullspace(const Matrix& M, double gap_ratio = 1e6);

// || A - B ||_F / max(||A||_F, ||B||_F, tiny).
double rel_residual(const Matrix& A, const Matrix& B);

// Frobenius inner product <A, B> = sum conj(A_ij) B_ij.
Complex frob_inner(const Matrix& A, const Matrix& B);

// Least-squares scalar fit: alpha minimizing ||X - alpha A||_F.
// Returns {alpha, relative residual after the fit}.
std::pair<Complex, double> fit_scalar(const Matrix& X, const Matrix& A);

// Joint fit over a list of blocks: one alpha minimizing sum ||X_i - alpha A_i||^2.
std::pair<Complex, double> fit_scalar_joint(const std::vector<Matrix>& X,
                                            const std::vector<Matrix>& A);

// Two-term fit: (alpha, beta) minimizing ||X - alpha A - beta B||_F.
struct Fit2Result {
  Complex alpha{0.0, 0.0};
  Complex beta{0.0, 0.0};
  double resid = 0.0;
};
Fit2Result fit_two_scalars(const Matrix& X, const Matrix& A, const Matrix& B);
Fit2Result fit_two_scalars_joint(const std::vector<Matrix>& X,
                                 const std::vector<Matrix>& A,
                                 const std::vector<Matrix>& B);

}  // namespace baxq
