#include "baxq/lax.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

namespace baxq {

namespace {

Matrix site_e10() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

Matrix site_e01() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

Matrix site_sz() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = 1.0;
  return m;
}

struct ExchangePair {
  Matrix D;     // flipped-coproduct action, multiplies L from the left
  Matrix N;     // coproduct action, multiplies L from the right
  bool raising;  // auxiliary action moves levels up (subdiagonal)
};

bool is_subdiagonal(const Matrix& A) {
  double lower = 0.0, upper = 0.0;
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      if (r > c) lower += std::abs(A(r, c));
      if (r < c) upper += std::abs(A(r, c));
    }
  return lower >= upper;
}

// Exchange conditions D L = L N for every generator of the module.
std::vector<ExchangePair> exchange_pairs(const BorelRep& rep, Complex lambda,
                                         Complex q) {
  const int n = rep.dim;
  const Matrix I2 = Matrix::Identity(2, 2);
  const Matrix In = Matrix::Identity(n, n);
  const Matrix E10 = site_e10();
  const Matrix E01 = site_e01();
  const Matrix sz = site_sz();
  const Matrix qsz = qexp_diag(sz, q);
  const Matrix qszi = qexp_diag(-sz, q);
  const Matrix qH = qexp_diag(rep.H, q);
  const Matrix qHi = qexp_diag(-rep.H, q);
  const Matrix Eb = lambda * rep.E_beta_unit;

  std::vector<ExchangePair> out;
  out.push_back({kron(qH, E10) + kron(rep.E_alpha, I2),
                 kron(rep.E_alpha, qsz) + kron(In, E10),
                 is_subdiagonal(rep.E_alpha)});
  out.push_back({kron(qHi, E01) + kron(Eb, I2),
                 kron(Eb, qszi) + kron(In, E01), is_subdiagonal(Eb)});
  if (rep.full()) {
    const Matrix& Fa = *rep.F_alpha;
    const Matrix Fb = (1.0 / lambda) * (*rep.F_beta_unit);
    out.push_back({kron(In, E01) + kron(Fa, qszi),
                   kron(Fa, I2) + kron(qHi, E01), is_subdiagonal(Fa)});
    out.push_back({kron(In, E10) + kron(Fb, qsz),
                   kron(Fb, I2) + kron(qH, E10), is_subdiagonal(Fb)});
  }
  return out;
}

}  // namespace

Matrix sixvertex_R(Complex z, Complex q) {
  const Complex a = q * z - 1.0 / (q * z);
  const Complex b = z - 1.0 / z;
  const Complex c = q - 1.0 / q;
  Matrix R = Matrix::Zero(4, 4);
  R(0, 0) = a;
  R(1, 1) = b;
  R(2, 2) = b;
  R(3, 3) = a;
  R(1, 2) = c;
  R(2, 1) = c;
  return R;
}

Matrix LaxOperator::block(int s_out, int s_in) const {
  Matrix B(aux_dim, aux_dim);
  for (int a = 0; a < aux_dim; ++a)
    for (int b = 0; b < aux_dim; ++b) B(a, b) = mat(2 * a + s_out, 2 * b + s_in);
  return B;
}

LaxOperator derive_lax(const BorelRep& rep, Complex lambda, Complex q) {
  const int n = rep.dim;
  const int dim = 2 * n;
  const Matrix sz = site_sz();

  // Total weight is conserved, so L is supported on equal-weight index pairs.
  std::vector<Complex> w(dim);
  for (int a = 0; a < n; ++a)
    for (int s = 0; s < 2; ++s) w[2 * a + s] = rep.H(a, a) + sz(s, s);

  std::vector<std::pair<int, int>> pattern;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      if (std::abs(w[r] - w[c]) <= 1e-9) pattern.emplace_back(r, c);
  const int n_unk = static_cast<int>(pattern.size());

  const auto pairs = exchange_pairs(rep, lambda, q);

  // A truncated module misses the couplings between the last kept level and
  // the first dropped one, so the exchange system lacks the terms that would
  // reach across the cut. A raising auxiliary action reaches across through
  // L columns at the boundary, a lowering one through boundary rows; those
  // equations are not constraints of the untruncated module and are dropped.
  auto eq_valid = [&](const ExchangePair& gp, int i, int j) {
    if (!rep.truncated()) return true;
    return (gp.raising ? j / 2 : i / 2) < rep.boundary_level;
  };

  struct Fill {
    int row, col;
    Complex v;
  };
  std::map<long long, int> eq_row;
  std::vector<Fill> fills;
  // Distinct generators must not share equation rows, so the slot key is
  // offset by the generator index.
  auto add_fill = [&](const ExchangePair& gp, long long base, int i, int j,
                      int unk, Complex v) {
    if (!eq_valid(gp, i, j) || v == Complex(0.0, 0.0)) return;
    const long long key = base + static_cast<long long>(i) * dim + j;
    auto it = eq_row.find(key);
    int row;
    if (it == eq_row.end()) {
      row = static_cast<int>(eq_row.size());
      eq_row.emplace(key, row);
    } else {
      row = it->second;
    }
    fills.push_back({row, unk, v});
  };

  long long base = 0;
  for (const auto& gp : pairs) {
    for (int p = 0; p < n_unk; ++p) {
      const auto [r, c] = pattern[p];
      for (int i = 0; i < dim; ++i)
        if (gp.D(i, r) != Complex(0.0, 0.0)) add_fill(gp, base, i, c, p, gp.D(i, r));
      for (int j = 0; j < dim; ++j)
        if (gp.N(c, j) != Complex(0.0, 0.0)) add_fill(gp, base, r, j, p, -gp.N(c, j));
    }
    base += static_cast<long long>(dim) * dim;
  }

  const Matrix C0 = [&] {
    Matrix M = Matrix::Zero(static_cast<int>(eq_row.size()), n_unk);
    for (const auto& t : fills) M(t.row, t.col) += t.v;
    return M;
  }();

  // The module coefficients span many orders of magnitude at large dim, so
  // equilibrate before the rank decision. Row scaling leaves the solution
  // set untouched; column scaling is undone on the kernel vector and keeps
  // the small pattern entries at full relative accuracy.
  auto solve_kernel = [&](const RealVector& col_scale_in) {
    Matrix C = C0 * col_scale_in.asDiagonal();
    RealVector col_scale = col_scale_in;
    for (int pass = 0; pass < 3; ++pass) {
      for (Eigen::Index r = 0; r < C.rows(); ++r) {
        const double nr = C.row(r).norm();
        if (nr > 0.0) C.row(r) /= nr;
      }
      for (int c = 0; c < n_unk; ++c) {
        const double nc = C.col(c).norm();
        if (nc > 0.0) {
          C.col(c) /= nc;
          col_scale(c) /= nc;
        }
      }
    }
    const NullspaceResult ns = nullspace(C, 1e6);
    if (ns.basis.cols() != 1) {
      std::ostringstream os;
      os << "derive_lax: nullspace dimension " << ns.basis.cols() << " for "
         << rep_kind_name(rep.kind) << ", singular values tail:";
      const Eigen::Index nsv = ns.singular_values.size();
      for (Eigen::Index i = std::max<Eigen::Index>(0, nsv - 6); i < nsv; ++i)
        os << " " << ns.singular_values(i);
      throw ModelError(os.str());
    }
    Vector w = ns.basis.col(0);
    const double consistency = (C * w).norm() / std::max(C.norm(), 1e-300);
    if (consistency > 1e-10)
      throw ModelError("derive_lax: nullspace vector fails the constraints");
    w = col_scale.asDiagonal() * w;
    return std::pair<Vector, double>(w, ns.gap);
  };

  // First pass finds the kernel direction with correct component magnitudes
  // but uneven relative accuracy when the entries span a huge dynamic range.
  // A second pass with columns scaled by those magnitudes balances the
  // kernel vector, so every component comes out at uniform relative
  // accuracy; this matters for the oscillator families at large dim.
  auto [v, gap1] = solve_kernel(RealVector::Ones(n_unk));
  RealVector mags(n_unk);
  const double vmax = v.cwiseAbs().maxCoeff();
  for (int c = 0; c < n_unk; ++c)
    mags(c) = std::max(std::abs(v(c)), 1e-120 * vmax);
  auto [v2, gap2] = solve_kernel(mags);
  v = v2;
  const double gap = std::min(gap1, gap2);

  LaxOperator L;
  L.kind = rep.kind;
  L.j = rep.j;
  L.lambda = lambda;
  L.aux_dim = n;
  L.boundary_level = rep.boundary_level;
  L.nullspace_gap = gap;
  L.mat = Matrix::Zero(dim, dim);
  for (int p = 0; p < n_unk; ++p) L.mat(pattern[p].first, pattern[p].second) = v(p);

  // Scale so the first usable diagonal entry equals one. Entry magnitudes
  // grow geometrically with the auxiliary level for the oscillator families,
  // so a usable slot is judged against its own level neighborhood, not the
  // global maximum.
  int pin = 0;
  for (; pin < dim; ++pin) {
    const int lo = std::max(0, pin - 2);
    const int hi = std::min(dim, pin + 4);
    const double local =
        L.mat.block(lo, lo, hi - lo, hi - lo).cwiseAbs().maxCoeff();
    if (std::abs(L.mat(pin, pin)) > 1e-6 * local) break;
  }
  if (pin == dim) throw ModelError("derive_lax: no usable diagonal entry to pin");
  L.pinned_index = pin;
  L.mat /= L.mat(pin, pin);

  // Residual of the exchange conditions away from the truncation boundary.
  double worst = 0.0;
  for (const auto& gp : pairs) {
    Matrix lhs = gp.D * L.mat;
    Matrix rhs = L.mat * gp.N;
    if (rep.truncated()) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          if (!eq_valid(gp, i, j)) lhs(i, j) = rhs(i, j) = 0.0;
    }
    worst = std::max(worst, (lhs - rhs).norm() /
                                std::max({lhs.norm(), rhs.norm(), 1e-300}));
  }
  L.intertwine_residual = worst;
  return L;
}

Matrix rll_reference_R(Complex lambda, Complex mu, Complex q) {
  const Complex v = std::sqrt(lambda / mu);
  Matrix R = sixvertex_R(v, q);
  // Diagonal gauge diag(1/v, 1) on the first site factor.
  Matrix D = Matrix::Identity(4, 4);
  D(0, 0) = 1.0 / v;
  D(1, 1) = 1.0 / v;
  return D * R * D.inverse();
}

double check_rll(const LaxOperator& L_lambda, const LaxOperator& L_mu, Complex q) {
  if (L_lambda.aux_dim != L_mu.aux_dim)
    throw ModelError("check_rll: auxiliary dimensions differ");
  const int n = L_lambda.aux_dim;
  const Matrix I2 = Matrix::Identity(2, 2);
  const Matrix In = Matrix::Identity(n, n);

  Matrix swap = Matrix::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = 1.0;
  swap(1, 2) = swap(2, 1) = 1.0;
  const Matrix P23 = kron(In, swap);

  const Matrix L2 = kron(L_lambda.mat, I2);
  const Matrix L3 = P23 * kron(L_mu.mat, I2) * P23;
  const Matrix R23 = kron(In, rll_reference_R(L_lambda.lambda, L_mu.lambda, q));

  Matrix lhs = L2 * L3 * R23;
  Matrix rhs = R23 * L3 * L2;

  const int boundary = std::min(L_lambda.boundary_level, L_mu.boundary_level);
  if (boundary < n) {
    // Two Lax factors reach one level past each endpoint.
    const int keep = std::max(0, boundary - 1);
    for (int i = 0; i < n * 4; ++i)
      for (int j = 0; j < n * 4; ++j)
        if (i / 4 >= keep || j / 4 >= keep) lhs(i, j) = rhs(i, j) = 0.0;
  }
  return (lhs - rhs).norm() / std::max({lhs.norm(), rhs.norm(), 1e-300});
}

}  // namespace baxq
