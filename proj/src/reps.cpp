#include "baxq/reps.hpp"

#include <cmath>

namespace baxq {

namespace {

// (1 - q^{2k}) / (q - q^{-1})^2: beta-raising coefficient of the +oscillator.
Complex beta_plus(int k, Complex q) {
  const Complex d = q - 1.0 / q;
  return (1.0 - qpow(q, 2.0 * k)) / (d * d);
}

// (1 - q^{-2k}) / (q - q^{-1})^2: beta-raising coefficient of the -oscillator.
Complex beta_minus(int k, Complex q) {
  const Complex d = q - 1.0 / q;
  return (1.0 - qpow(q, -2.0 * k)) / (d * d);
}

}  // namespace

std::string rep_kind_name(RepKind k) {
  switch (k) {
    case RepKind::SpinJ: return "spin";
    case RepKind::HighestWeightInf: return "highest_weight";
    case RepKind::OscPlus: return "osc_plus";
    case RepKind::OscMinus: return "osc_minus";
    case RepKind::Reflected: return "reflected";
  }
  return "unknown";
}

BorelRep spin_rep(double j, Complex q) {
  const double two_j = 2.0 * j;
  const int tj = static_cast<int>(std::lround(two_j));
  if (tj < 0 || std::abs(two_j - tj) > 1e-12)
    throw ModelError("spin_rep: 2j must be a nonnegative integer");
  const int dim = tj + 1;
  BorelRep r;
  r.kind = RepKind::SpinJ;
  r.j = Complex(j, 0.0);
  r.dim = dim;
  r.boundary_level = dim;
  r.E_alpha = Matrix::Zero(dim, dim);
  r.E_beta_unit = Matrix::Zero(dim, dim);
  r.H = Matrix::Zero(dim, dim);
  r.F_alpha = Matrix::Zero(dim, dim);
  r.F_beta_unit = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) r.H(k, k) = Complex(2.0 * k - two_j, 0.0);
  for (int k = 1; k < dim; ++k) {
    const Complex c = qnum(Complex(k, 0.0), q) * qnum(Complex(tj + 1 - k, 0.0), q);
    r.E_alpha(k, k - 1) = 1.0;            // raises the level by one
    r.E_beta_unit(k - 1, k) = c;          // lowers the level, weight +2 on H
    (*r.F_alpha)(k - 1, k) = c;
    (*r.F_beta_unit)(k, k - 1) = 1.0;
  }
  return r;
}

BorelRep highest_weight_rep(Complex j, int N, Complex q) {
  if (N < 2) throw ModelError("highest_weight_rep: N < 2");
  BorelRep r;
  r.kind = RepKind::HighestWeightInf;
  r.j = j;
  r.dim = N;
  r.boundary_level = N - 1;
  r.E_alpha = Matrix::Zero(N, N);
  r.E_beta_unit = Matrix::Zero(N, N);
  r.H = Matrix::Zero(N, N);
  for (int k = 0; k < N; ++k) r.H(k, k) = 2.0 * (Complex(k, 0.0) - j);
  for (int k = 1; k < N; ++k) {
    r.E_alpha(k, k - 1) = 1.0;
    r.E_beta_unit(k - 1, k) =
        qnum(Complex(k, 0.0), q) * qnum(2.0 * j + 1.0 - Complex(k, 0.0), q);
  }
  return r;
}

BorelRep osc_rep(int sign, int N, Complex q) {
  if (sign != 1 && sign != -1) throw ModelError("osc_rep: sign must be +-1");
  if (N < 2) throw ModelError("osc_rep: N < 2");
  BorelRep r;
  r.kind = (sign > 0) ? RepKind::OscPlus : RepKind::OscMinus;
  r.j = Complex(0.0, 0.0);
  r.dim = N;
  r.boundary_level = N - 1;
  r.E_alpha = Matrix::Zero(N, N);
  r.E_beta_unit = Matrix::Zero(N, N);
  r.H = Matrix::Zero(N, N);
  for (int k = 0; k < N; ++k) r.H(k, k) = Complex(2.0 * k, 0.0);
  for (int k = 1; k < N; ++k) {
    r.E_alpha(k, k - 1) = 1.0;
    r.E_beta_unit(k - 1, k) = (sign > 0) ? beta_plus(k, q) : beta_minus(k, q);
  }
  return r;
}

BorelRep reflected_rep(int N, Complex q) {
  if (N < 2) throw ModelError("reflected_rep: N < 2");
  BorelRep r;
  r.kind = RepKind::Reflected;
  r.j = Complex(0.0, 0.0);
  r.dim = N;
  r.boundary_level = N - 1;
  r.E_alpha = Matrix::Zero(N, N);
  r.E_beta_unit = Matrix::Zero(N, N);
  r.H = Matrix::Zero(N, N);
  for (int k = 0; k < N; ++k) r.H(k, k) = Complex(-2.0 * k, 0.0);
  for (int k = 1; k < N; ++k) {
    r.E_alpha(k - 1, k) = 1.0;            // alpha-raising lowers the level
    r.E_beta_unit(k, k - 1) = beta_plus(k, q);  // row 0 stays empty
  }
  return r;
}

namespace {

// Relative residual of sum(terms) == rhs on levels < kmax.
double restricted_residual(const std::vector<Matrix>& terms, const Matrix& rhs,
                           int kmax) {
  const Eigen::Index n = rhs.rows();
  const Eigen::Index m = std::min<Eigen::Index>(kmax, n);
  if (m <= 0) return 0.0;
  Matrix sum = Matrix::Zero(n, n);
  double scale = rhs.block(0, 0, m, m).norm();
  for (const Matrix& t : terms) {
    sum += t;
    scale = std::max(scale, t.block(0, 0, m, m).norm());
  }
  const double resid = (sum - rhs).block(0, 0, m, m).norm();
  return resid / std::max(scale, 1e-300);
}

}  // namespace

AlgebraCheckReport check_algebra_relations(const BorelRep& rep, Complex q) {
  AlgebraCheckReport rep_out;
  const Matrix& E = rep.E_alpha;
  const Matrix& Fb = rep.E_beta_unit;  // unit-lambda beta generator
  const Matrix& H = rep.H;
  const int n = rep.dim;
  // Cubic products wander by three levels, quadratic by two.
  const int interior = rep.truncated() ? std::max(0, rep.boundary_level - 4) : n;

  auto add = [&](const std::string& name, double v) {
    rep_out.residuals.emplace_back(name, v);
    rep_out.max_interior = std::max(rep_out.max_interior, v);
  };

  add("weight_alpha", restricted_residual({H * E - E * H}, 2.0 * E, interior));
  add("weight_beta", restricted_residual({H * Fb - Fb * H}, -2.0 * Fb, interior));

  // [3] = q^2 + 1 + q^{-2}
  const Complex q3 = qpow(q, 2.0) + 1.0 + qpow(q, -2.0);
  const Matrix E2 = E * E, E3 = E2 * E;
  const Matrix B2 = Fb * Fb, B3 = B2 * Fb;
  add("serre_alpha",
      restricted_residual({E3 * Fb, -q3 * (E2 * Fb * E), q3 * (E * Fb * E2),
                           -(Fb * E3)},
                          Matrix::Zero(n, n), interior));
  add("serre_beta",
      restricted_residual({B3 * E, -q3 * (B2 * E * Fb), q3 * (Fb * E * B2),
                           -(E * B3)},
                          Matrix::Zero(n, n), interior));

  if (rep.full()) {
    const Matrix& Fa = *rep.F_alpha;
    const Matrix& Fbu = *rep.F_beta_unit;
    const Complex d = q - 1.0 / q;
    const Matrix cart_a = (qexp_diag(H, q) - qexp_diag(-H, q)) / d;
    const Matrix cart_b = (qexp_diag(-H, q) - qexp_diag(H, q)) / d;
    add("pair_alpha", restricted_residual({E * Fa - Fa * E}, cart_a, interior));
    add("pair_beta", restricted_residual({Fb * Fbu - Fbu * Fb}, cart_b, interior));
    add("pair_cross_ab",
        restricted_residual({E * Fbu - Fbu * E}, Matrix::Zero(n, n), interior));
    add("pair_cross_ba",
        restricted_residual({Fb * Fa - Fa * Fb}, Matrix::Zero(n, n), interior));
  }

  if (rep.kind == RepKind::OscPlus || rep.kind == RepKind::OscMinus) {
    const Complex d = q - 1.0 / q;
    const Matrix rhs = Matrix::Identity(n, n) / d;
    if (rep.kind == RepKind::OscPlus) {
      add("oscillator",
          restricted_residual({q * (E * Fb), -(1.0 / q) * (Fb * E)}, rhs, interior));
    } else {
      add("oscillator",
          restricted_residual({q * (Fb * E), -(1.0 / q) * (E * Fb)}, rhs, interior));
    }
  }

  return rep_out;
}

std::vector<RepLimitRow> rep_limit_check(Complex q, Complex lambda, int N,
                                         const std::vector<double>& j_list) {
  std::vector<RepLimitRow> out;
  out.reserve(j_list.size());
  for (double j : j_list) {
    RepLimitRow row;
    row.j = j;
    for (int k = 0; k < N; ++k) {
      const Complex ck(k, 0.0);
      const Complex plus_rescaled = lambda * qpow(q, 2.0 * j + 1.0) *
                                    qnum(ck, q) * qnum(2.0 * j + 1.0 - ck, q);
      const Complex minus_rescaled = lambda * qpow(q, 2.0 * j - 1.0) *
                                     qnum(ck, q) * qnum(1.0 - 2.0 * j - ck, q);
      row.err_plus =
          std::max(row.err_plus, std::abs(plus_rescaled - lambda * beta_plus(k, q)));
      row.err_minus = std::max(row.err_minus,
                               std::abs(minus_rescaled - lambda * beta_minus(k, q)));
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace baxq
