#include "baxq/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace baxq {

namespace {
constexpr double kTiny = 1e-300;
}

ModelParams ModelParams::defaults() {
  ModelParams p;
  p.q = 0.8 * std::exp(Complex(0.0, 0.3));
  p.phi = 0.25;
  p.L = 4;
  p.trunc_N = 32;
  p.tol_rel = 1e-8;
  p.tol_limit = 1e-6;
  p.seed = 20240801ull;
  p.lambda_grid.resize(8);
  for (int m = 0; m < 8; ++m) {
    p.lambda_grid[m] =
        (0.75 + 0.08 * m) * std::exp(Complex(0.0, -0.9 + 0.25 * m));
  }
  return p;
}

void ModelParams::validate(bool needs_infinite_aux) const {
  const double aq = std::abs(q);
  if (!(aq > 0.0)) throw ModelError("q must be nonzero");
  if (needs_infinite_aux && !(aq < 1.0))
    throw ModelError("|q| must lie in (0,1) for truncated infinite auxiliary traces");
  if (L < 1 || L > 12) throw ModelError("L out of supported range [1,12]");
  if (trunc_N < 2 || trunc_N > 512) throw ModelError("trunc_N out of range [2,512]");
  if (!(tol_rel > 0.0) || !(tol_limit > 0.0))
    throw ModelError("tolerances must be positive");
  if (lax_pin != "first_diagonal")
    throw ModelError("unsupported lax_pin: " + lax_pin);
  if (branch != "principal") throw ModelError("unsupported branch: " + branch);
  if (sector_filter != "all" && sector_filter != "nonzero")
    throw ModelError("sector_filter must be 'all' or 'nonzero'");

  // Small powers of q^2 may not sit on 1: trace continuations divide by
  // (1 - e^{i phi} q^m) factors and lattice shifts multiply up to ~4L+2N such
  // powers together.
  const int nmax = 4 * L + 2 * trunc_N;
  const double eps10 = 10.0 * std::numeric_limits<double>::epsilon();
  Complex q2n{1.0, 0.0};
  const Complex q2 = q * q;
  for (int n = 1; n <= nmax; ++n) {
    q2n *= q2;
    if (std::abs(q2n - 1.0) <= eps10) {
      std::ostringstream os;
      os << "q is numerically a root of unity: |q^" << 2 * n << " - 1| <= 10 eps";
      throw ModelError(os.str());
    }
    if (std::abs(q2n) < 1e-280) break;  // |q|<1: powers only shrink further
  }

  if (needs_infinite_aux && phi == 0.0 && sector_filter != "nonzero")
    throw ModelError(
        "phi = 0 makes the S = 0 trace singular; set phi != 0 or "
        "sector_filter = nonzero");

  if (lambda_grid.empty()) throw ModelError("lambda_grid must be nonempty");
  for (const Complex& lam : lambda_grid) {
    if (std::abs(lam) < 1e-12)
      throw ModelError("lambda too close to 0");
    if (std::abs(lam.imag()) < 1e-12 && lam.real() < 0.0)
      throw ModelError("lambda on the negative real axis is excluded");
  }
}

Complex qnum(Complex x, Complex q) {
  const Complex d = q - 1.0 / q;
  return (qpow(q, x) - qpow(q, -x)) / d;
}

Complex qpow(Complex q, Complex x) {
  if (x == Complex(0.0, 0.0)) return Complex(1.0, 0.0);
  return std::exp(x * std::log(q));
}

Complex shifted_lambda(Complex lambda, Complex q, double m) {
  if (m == 0.0) return lambda;
  return lambda * qpow(q, Complex(m, 0.0));
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Matrix qexp_diag(const Matrix& H, Complex q) {
  Matrix out = Matrix::Zero(H.rows(), H.cols());
  for (Eigen::Index i = 0; i < H.rows(); ++i) out(i, i) = qpow(q, H(i, i));
  return out;
}

Matrix twisted_partial_trace(const Matrix& M, int aux_dim, int chain_dim,
                             const std::vector<Complex>& weights) {
  if (M.rows() != Eigen::Index(aux_dim) * chain_dim || M.rows() != M.cols())
    throw ModelError("twisted_partial_trace: shape mismatch");
  if (static_cast<int>(weights.size()) != aux_dim)
    throw ModelError("twisted_partial_trace: weights size mismatch");
  Matrix out = Matrix::Zero(chain_dim, chain_dim);
  for (int k = 0; k < aux_dim; ++k)
    out += weights[k] * M.block(Eigen::Index(k) * chain_dim,
                                Eigen::Index(k) * chain_dim, chain_dim, chain_dim);
  return out;
}

NullspaceResult nullspace(const Matrix& M, double gap_ratio) {
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinV);
  NullspaceResult r;
  r.singular_values = svd.singularValues();
  const Eigen::Index n = r.singular_values.size();
  if (n == 0) throw ModelError("nullspace: empty matrix");
  const double smax = r.singular_values(0);
  const double thresh = smax / gap_ratio;
  Eigen::Index first_null = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r.singular_values(i) <= thresh) {
      first_null = i;
      break;
    }
  }
  const Eigen::Index null_dim = n - first_null;
  r.basis = Matrix(M.cols(), null_dim);
  for (Eigen::Index c = 0; c < null_dim; ++c)
    r.basis.col(c) = svd.matrixV().col(first_null + c);
  if (null_dim > 0 && first_null > 0) {
    const double largest_null = r.singular_values(first_null);
    r.gap = r.singular_values(first_null - 1) /
            std::max(largest_null, kTiny);
  } else {
    r.gap = 0.0;
  }
  return r;
}

double rel_residual(const Matrix& A, const Matrix& B) {
  const double na = A.norm();
  const double nb = B.norm();
  return (A - B).norm() / std::max({na, nb, kTiny});
}

Complex frob_inner(const Matrix& A, const Matrix& B) {
  return (A.conjugate().cwiseProduct(B)).sum();
}

std::pair<Complex, double> fit_scalar(const Matrix& X, const Matrix& A) {
  return fit_scalar_joint({X}, {A});
}

std::pair<Complex, double> fit_scalar_joint(const std::vector<Matrix>& X,
                                            const std::vector<Matrix>& A) {
  if (X.size() != A.size() || X.empty())
    throw ModelError("fit_scalar_joint: block count mismatch");
  Complex num{0.0, 0.0};
  double den = 0.0;
  double nx2 = 0.0;
  for (size_t i = 0; i < X.size(); ++i) {
    num += frob_inner(A[i], X[i]);
    den += std::norm(A[i].norm());
    nx2 += std::norm(X[i].norm());
  }
  const Complex alpha = (den > kTiny) ? num / den : Complex(0.0, 0.0);
  double r2 = 0.0;
  double scale2 = 0.0;
  for (size_t i = 0; i < X.size(); ++i) {
    r2 += std::norm((X[i] - alpha * A[i]).norm());
    scale2 += std::max(std::norm(X[i].norm()), std::norm((alpha * A[i]).norm()));
  }
  (void)nx2;
  const double resid = std::sqrt(r2) / std::max(std::sqrt(scale2), kTiny);
  return {alpha, resid};
}

Fit2Result fit_two_scalars(const Matrix& X, const Matrix& A, const Matrix& B) {
  return fit_two_scalars_joint({X}, {A}, {B});
}

Fit2Result fit_two_scalars_joint(const std::vector<Matrix>& X,
                                 const std::vector<Matrix>& A,
                                 const std::vector<Matrix>& B) {
  if (X.size() != A.size() || X.size() != B.size() || X.empty())
    throw ModelError("fit_two_scalars_joint: block count mismatch");
  // Normal equations of the 2-column least squares problem.
  Complex aa{0, 0}, ab{0, 0}, bb{0, 0}, ax{0, 0}, bx{0, 0};
  for (size_t i = 0; i < X.size(); ++i) {
    aa += frob_inner(A[i], A[i]);
    ab += frob_inner(A[i], B[i]);
    bb += frob_inner(B[i], B[i]);
    ax += frob_inner(A[i], X[i]);
    bx += frob_inner(B[i], X[i]);
  }
  Eigen::Matrix2cd G;
  G << aa, ab, std::conj(ab), bb;
  Eigen::Vector2cd rhs;
  rhs << ax, bx;
  // Tikhonov floor keeps a degenerate pair (e.g. B identically zero) solvable.
  const double floor = 1e-14 * std::max(std::abs(aa), std::abs(bb));
  G(0, 0) += floor;
  G(1, 1) += floor;
  const Eigen::Vector2cd sol = G.fullPivLu().solve(rhs);
  Fit2Result out;
  out.alpha = sol(0);
  out.beta = sol(1);
  double r2 = 0.0;
  double scale2 = 0.0;
  for (size_t i = 0; i < X.size(); ++i) {
    const Matrix fit = out.alpha * A[i] + out.beta * B[i];
    r2 += std::norm((X[i] - fit).norm());
    scale2 += std::max(std::norm(X[i].norm()), std::norm(fit.norm()));
  }
  out.resid = std::sqrt(r2) / std::max(std::sqrt(scale2), kTiny);
  return out;
}

}  // namespace baxq
