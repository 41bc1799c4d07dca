#include "baxq/transfer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace baxq {

BorelRep make_rep(RepKind kind, Complex j, int N, Complex q) {
  switch (kind) {
    case RepKind::SpinJ: return spin_rep(j.real(), q);
    case RepKind::HighestWeightInf: return highest_weight_rep(j, N, q);
    case RepKind::OscPlus: return osc_rep(+1, N, q);
    case RepKind::OscMinus: return osc_rep(-1, N, q);
    case RepKind::Reflected: return reflected_rep(N, q);
  }
  throw ModelError("make_rep: unknown kind");
}

std::string op_tag_name(OpTag t) {
  switch (t) {
    case OpTag::Z: return "Z";
    case OpTag::Zj: return "Z_j";
    case OpTag::ZjPlus: return "Z_j_plus";
    case OpTag::Qminus: return "Q_minus";
    case OpTag::Qplus: return "Q_plus";
    case OpTag::ReflectedT: return "T_boundary";
  }
  return "unknown";
}

int spin_z(int state, int L) {
  return 2 * std::popcount(static_cast<unsigned>(state)) - L;
}

std::vector<Sector> sector_decomposition(int L) {
  std::vector<Sector> out(L + 1);
  for (int i = 0; i <= L; ++i) out[i].S = -L + 2 * i;
  for (int b = 0; b < (1 << L); ++b)
    out[(spin_z(b, L) + L) / 2].indices.push_back(b);
  return out;
}

Matrix sector_block(const Matrix& M, const Sector& s) {
  const int d = static_cast<int>(s.indices.size());
  Matrix B(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) B(a, b) = M(s.indices[a], s.indices[b]);
  return B;
}

void add_sector_block(Matrix& M, const Sector& s, const Matrix& B) {
  const int d = static_cast<int>(s.indices.size());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) M(s.indices[a], s.indices[b]) += B(a, b);
}

namespace {

// Every Lax block carries a single diagonal: site-diagonal blocks are
// aux-diagonal, site-raising and site-lowering blocks shift the auxiliary
// level by exactly one in a direction fixed by the module.
struct DiagBlock {
  bool zero = true;
  int off = 0;
  Vector vals;  // vals(r) multiplies row r + off of the operand
};

DiagBlock extract_diag(const Matrix& A) {
  const int N = static_cast<int>(A.rows());
  DiagBlock d;
  d.vals = Vector::Zero(N);
  const double big = A.cwiseAbs().maxCoeff();
  if (big <= 0.0) return d;
  const double tol = 1e-13 * big;
  int found = 0;
  for (int off = -(N - 1); off <= N - 1; ++off) {
    double m = 0.0;
    for (int r = std::max(0, -off); r < N - std::max(0, off); ++r)
      m = std::max(m, std::abs(A(r, r + off)));
    if (m > tol) {
      ++found;
      d.off = off;
      d.zero = false;
    }
  }
  if (found > 1) throw ModelError("unexpected Lax block structure");
  if (!d.zero)
    for (int r = 0; r < N; ++r) {
      const int c = r + d.off;
      if (c >= 0 && c < N) d.vals(r) = A(r, c);
    }
  return d;
}

Matrix apply_block(const DiagBlock& blk, const Matrix& U) {
  const int N = static_cast<int>(U.rows());
  Matrix out = Matrix::Zero(N, N);
  if (blk.zero) return out;
  for (int r = 0; r < N; ++r) {
    const int src = r + blk.off;
    if (src >= 0 && src < N && blk.vals(r) != Complex(0.0, 0.0))
      out.row(r) = blk.vals(r) * U.row(src);
  }
  return out;
}

// Site-resolved monodromy blocks: U[bo * 2^L + bi] is the auxiliary-space
// operator between quantum states bi -> bo, site 1 on the least significant
// bit.
struct DPResult {
  int N = 0;
  int L = 0;
  std::vector<Matrix> U;
};

DPResult run_dp(const LaxOperator& lax, int Lsites) {
  DPResult dp;
  dp.N = lax.aux_dim;
  dp.L = Lsites;
  DiagBlock A[2][2];
  for (int so = 0; so < 2; ++so)
    for (int si = 0; si < 2; ++si) A[so][si] = extract_diag(lax.block(so, si));

  std::vector<Matrix> U{Matrix::Identity(dp.N, dp.N)};
  int B = 1;
  for (int n = 0; n < Lsites; ++n) {
    std::vector<Matrix> V(static_cast<size_t>(4) * B * B);
    for (int so = 0; so < 2; ++so)
      for (int si = 0; si < 2; ++si)
        for (int bo = 0; bo < B; ++bo)
          for (int bi = 0; bi < B; ++bi)
            V[static_cast<size_t>(so * B + bo) * (2 * B) + (si * B + bi)] =
                apply_block(A[so][si], U[static_cast<size_t>(bo) * B + bi]);
    U = std::move(V);
    B *= 2;
  }
  dp.U = std::move(U);
  return dp;
}

// Highest auxiliary level whose monodromy diagonal entry is unaffected by the
// truncation: excursions from level k climb at most floor(L/2) levels.
int max_valid_level(const BorelRep& rep, int Lsites) {
  if (!rep.truncated()) return rep.dim - 1;
  return rep.dim - 1 - Lsites / 2;
}

std::vector<std::vector<int>> mode_ladder(int Lsites) {
  auto band = [](int width, int parity_mod) {
    std::vector<int> v;
    for (int m = -width; m <= width; ++m)
      if (parity_mod < 0 || ((m % 2 + 2) % 2) == parity_mod) v.push_back(m);
    return v;
  };
  const int par = Lsites % 2;
  std::vector<std::vector<int>> ladder;
  ladder.push_back(band(Lsites, par));
  ladder.push_back(band(Lsites + 2, par));
  ladder.push_back(band(Lsites + 2, -1));
  ladder.push_back(band(2 * Lsites + 2, -1));
  ladder.push_back(band(2 * Lsites + 4, -1));
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  return ladder;
}

// Monic polynomial with the given roots, coefficients by ascending power.
std::vector<Complex> monic_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> c{Complex(1.0, 0.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

double recurrence_residual(const std::vector<Matrix>& d, int base,
                           const std::vector<Complex>& c) {
  Matrix acc = Matrix::Zero(d[0].rows(), d[0].cols());
  double scale = 0.0;
  for (size_t t = 0; t < c.size(); ++t) {
    acc += c[t] * d[base + t];
    scale += std::abs(c[t]) * d[base + t].norm();
  }
  if (scale < 1e-300) return 0.0;
  return acc.norm() / scale;
}

struct SectorTrace {
  Matrix block;
  int modes = 0;
};

// Head-plus-continued-tail evaluation of sum_{k >= from} z^k d_k for one
// sector stream. The tail is the analytic continuation of the geometric sum
// over the validated mode set.
SectorTrace continued_sector_trace(const DPResult& dp, const Sector& sec,
                                   int from, Complex z, Complex q,
                                   int k_max_valid) {
  const int ds = static_cast<int>(sec.indices.size());
  const int two_L = 1 << dp.L;
  std::vector<Matrix> d(k_max_valid + 1, Matrix(ds, ds));
  for (int k = 0; k <= k_max_valid; ++k)
    for (int a = 0; a < ds; ++a)
      for (int b = 0; b < ds; ++b)
        d[k](a, b) =
            dp.U[static_cast<size_t>(sec.indices[a]) * two_L + sec.indices[b]](k, k);

  const int k0 = std::max(from, dp.L / 2 + 1);
  if (k0 > k_max_valid + 1)
    throw ModelError("trace continuation: trunc_N too small for the head");

  auto zpow = [&](int k) { return qpow(z, Complex(k, 0.0)); };

  SectorTrace out;
  out.block = Matrix::Zero(ds, ds);
  for (int k = from; k < k0; ++k) out.block += zpow(k) * d[k];

  bool any_feasible = false;
  bool resonance_suspected = false;
  for (const auto& W0 : mode_ladder(dp.L)) {
    std::vector<int> W;
    bool had_resonant = false;
    for (int m : W0) {
      if (std::abs(1.0 - z * qpow(q, Complex(m, 0.0))) < 1e-12)
        had_resonant = true;
      else
        W.push_back(m);
    }
    const int T = static_cast<int>(W.size());
    if (k0 + T + 1 > k_max_valid) continue;
    any_feasible = true;
    std::vector<Complex> roots;
    roots.reserve(W.size());
    for (int m : W) roots.push_back(qpow(q, Complex(m, 0.0)));
    const std::vector<Complex> c = monic_from_roots(roots);
    const double r = std::max(recurrence_residual(d, k0, c),
                              recurrence_residual(d, k0 + 1, c));
    if (r > 1e-9) {
      if (had_resonant) resonance_suspected = true;
      continue;
    }
    // Tail value: [sum_t c_t z^{T-t} B_t] / prod_m (1 - z q^m),
    // B_t = sum_{s<t} z^{k0+s} d_{k0+s}.
    Matrix Bt = Matrix::Zero(ds, ds);
    Matrix num = Matrix::Zero(ds, ds);
    for (int t = 1; t <= T; ++t) {
      Bt += zpow(k0 + t - 1) * d[k0 + t - 1];
      num += c[t] * zpow(T - t) * Bt;
    }
    Complex den{1.0, 0.0};
    for (const Complex& w : roots) den *= (1.0 - z * w);
    out.block += num / den;
    out.modes = T;
    return out;
  }
  if (resonance_suspected)
    throw ModelError(
        "trace continuation: twist resonance (a required level weight sits on "
        "1); increase |phi| or restrict sectors");
  if (!any_feasible)
    throw ModelError("trace continuation: trunc_N too small for the mode set");
  throw ModelError("trace continuation: no candidate mode set validates");
}

OpTag tag_for(const BorelRep& rep) {
  switch (rep.kind) {
    case RepKind::SpinJ:
      return (std::abs(rep.j - Complex(0.5, 0.0)) < 1e-12) ? OpTag::Z : OpTag::Zj;
    case RepKind::HighestWeightInf: return OpTag::ZjPlus;
    case RepKind::OscMinus: return OpTag::Qminus;
    case RepKind::OscPlus: return OpTag::Qplus;
    case RepKind::Reflected: return OpTag::ReflectedT;
  }
  throw ModelError("tag_for: unknown kind");
}

// Level-resolved weight-conservation diagnostic: magnitude of off-sector
// monodromy diagonals relative to in-sector ones.
double sector_leak(const DPResult& dp, int k_max_valid) {
  const int two_L = 1 << dp.L;
  double off = 0.0, on = 0.0;
  for (int bo = 0; bo < two_L; ++bo)
    for (int bi = 0; bi < two_L; ++bi) {
      const Matrix& U = dp.U[static_cast<size_t>(bo) * two_L + bi];
      double m = 0.0;
      for (int k = 0; k <= k_max_valid; ++k) m = std::max(m, std::abs(U(k, k)));
      if (spin_z(bo, dp.L) == spin_z(bi, dp.L))
        on = std::max(on, m);
      else
        off = std::max(off, m);
    }
  return off / std::max(on, 1e-300);
}

struct BuildPieces {
  QuantumOperator head;  // plain sum below the split level
  QuantumOperator tail;  // continued sum from the split level
  bool has_head = false;
};

BuildPieces build_from_rep(const BorelRep& rep, Complex lambda,
                           const ModelParams& p, double ts, int from_level,
                           int split) {
  const LaxOperator lax = derive_lax(rep, lambda, p.q);
  const DPResult dp = run_dp(lax, p.L);
  const int two_L = 1 << p.L;
  const int k_max_valid = max_valid_level(rep, p.L);
  const Complex z = std::polar(1.0, ts * p.phi);
  auto zpow = [&](int k) { return qpow(z, Complex(k, 0.0)); };

  auto base_op = [&](OpTag tag) {
    QuantumOperator op;
    op.tag = tag;
    op.L = p.L;
    op.lambda = lambda;
    op.j = rep.j;
    op.twist_sign = ts;
    op.infinite_aux = rep.truncated();
    op.trunc_N = rep.truncated() ? rep.dim : 0;
    op.mat = Matrix::Zero(two_L, two_L);
    return op;
  };

  BuildPieces out;
  out.tail = base_op(tag_for(rep));

  const bool do_split = split > from_level;
  if (do_split) {
    out.has_head = true;
    out.head = base_op(tag_for(rep));
  }
  const int tail_from = do_split ? split : from_level;

  if (do_split) {
    // Finite plain sum over levels [from_level, split).
    const int hi = std::min(split - 1, k_max_valid);
    if (hi < split - 1)
      throw ModelError("transfer split: head reaches corrupted levels");
    for (int bo = 0; bo < two_L; ++bo)
      for (int bi = 0; bi < two_L; ++bi) {
        const Matrix& U = dp.U[static_cast<size_t>(bo) * two_L + bi];
        Complex s{0.0, 0.0};
        for (int k = from_level; k <= hi; ++k) s += zpow(k) * U(k, k);
        out.head.mat(bo, bi) = s;
      }
  }

  if (!rep.truncated()) {
    for (int bo = 0; bo < two_L; ++bo)
      for (int bi = 0; bi < two_L; ++bi) {
        const Matrix& U = dp.U[static_cast<size_t>(bo) * two_L + bi];
        Complex s{0.0, 0.0};
        for (int k = tail_from; k < rep.dim; ++k) s += zpow(k) * U(k, k);
        out.tail.mat(bo, bi) = s;
      }
  } else {
    const auto sectors = sector_decomposition(p.L);
    out.tail.tail_mode_count.assign(sectors.size(), 0);
    for (size_t si = 0; si < sectors.size(); ++si) {
      if (p.sector_filter == "nonzero" && sectors[si].S == 0) {
        out.tail.warning += "sector S=0 skipped; ";
        continue;
      }
      SectorTrace st = continued_sector_trace(dp, sectors[si], tail_from, z,
                                              p.q, k_max_valid);
      out.tail.tail_mode_count[si] = st.modes;
      add_sector_block(out.tail.mat, sectors[si], st.block);
    }
  }

  const double leak = sector_leak(dp, k_max_valid);
  out.tail.s_comm_residual = leak;
  if (out.has_head) out.head.s_comm_residual = leak;
  return out;
}

}  // namespace

QuantumOperator transfer_matrix(const BorelRep& rep, Complex lambda,
                                const ModelParams& p, const TraceOptions& opt) {
  const double ts =
      opt.twist_sign.value_or(rep.kind == RepKind::Reflected ? -1.0 : 1.0);
  p.validate(rep.truncated());
  BuildPieces bp = build_from_rep(rep, lambda, p, ts, opt.from_level, -1);
  QuantumOperator op = std::move(bp.tail);

  if (rep.truncated() && opt.check_truncation) {
    const int modes_used = op.tail_mode_count.empty()
                               ? 0
                               : *std::max_element(op.tail_mode_count.begin(),
                                                   op.tail_mode_count.end());
    const int k0 = std::max(opt.from_level, p.L / 2 + 1);
    const int needed = k0 + modes_used + 2 + p.L / 2;
    const int N2 = std::max(rep.dim / 2, needed);
    if (N2 < rep.dim) {
      try {
        const BorelRep rep2 = make_rep(rep.kind, rep.j, N2, p.q);
        BuildPieces bp2 = build_from_rep(rep2, lambda, p, ts, opt.from_level, -1);
        op.truncation_delta = rel_residual(op.mat, bp2.tail.mat);
        if (op.truncation_delta > p.tol_rel) {
          std::ostringstream os;
          os << "trace disagrees with N=" << N2 << " rebuild by "
             << op.truncation_delta << "; ";
          op.warning += os.str();
        }
      } catch (const ModelError& e) {
        op.warning += std::string("truncation recheck unavailable: ") + e.what() + "; ";
      }
    } else {
      op.warning += "truncation sensitivity unmeasured (trunc_N too small); ";
    }
  }
  return op;
}

std::pair<QuantumOperator, QuantumOperator> transfer_matrix_split(
    const BorelRep& rep, Complex lambda, const ModelParams& p, int split,
    const TraceOptions& opt) {
  const double ts =
      opt.twist_sign.value_or(rep.kind == RepKind::Reflected ? -1.0 : 1.0);
  p.validate(rep.truncated());
  if (split <= 0) throw ModelError("transfer_matrix_split: split must be > 0");
  BuildPieces bp = build_from_rep(rep, lambda, p, ts, 0, split);
  if (!bp.has_head) throw ModelError("transfer_matrix_split: empty head");
  return {std::move(bp.head), std::move(bp.tail)};
}

QuantumOperator normalize_q(const QuantumOperator& op, Complex lambda_base,
                            double shift_m, const ModelParams& p) {
  if (op.tag != OpTag::Qminus && op.tag != OpTag::Qplus)
    throw ModelError("normalize_q: operator is not Q-type");
  const double sgn = (op.tag == OpTag::Qminus) ? -1.0 : 1.0;
  QuantumOperator out = op;
  out.primed = true;
  for (const Sector& sec : sector_decomposition(op.L)) {
    const double e = sgn * sec.S / 4.0;
    const Complex factor =
        qpow(lambda_base, Complex(e, 0.0)) * qpow(p.q, Complex(shift_m * e, 0.0));
    for (int a : sec.indices)
      for (int b : sec.indices) out.mat(a, b) *= factor;
  }
  return out;
}

JointSpectrum joint_spectrum(const QuantumOperator& reference,
                             const std::vector<const QuantumOperator*>& members,
                             double degeneracy_tol) {
  JointSpectrum js;
  for (const Sector& sec : sector_decomposition(reference.L)) {
    SectorSpectrum ss;
    ss.S = sec.S;
    const Matrix R = sector_block(reference.mat, sec);
    Eigen::ComplexEigenSolver<Matrix> es(R);
    if (es.info() != Eigen::Success)
      throw ModelError("joint_spectrum: eigensolver failed");
    const int d = static_cast<int>(R.rows());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    const Vector ev = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
      return ev(a).imag() < ev(b).imag();
    });
    ss.V = Matrix(d, d);
    ss.reference_eigs.resize(d);
    for (int i = 0; i < d; ++i) {
      ss.V.col(i) = es.eigenvectors().col(order[i]);
      ss.reference_eigs[i] = ev(order[i]);
    }
    double max_abs = 0.0;
    for (int i = 0; i < d; ++i) max_abs = std::max(max_abs, std::abs(ss.reference_eigs[i]));
    for (int i = 0; i < d; ++i)
      for (int k = i + 1; k < d; ++k)
        if (std::abs(ss.reference_eigs[i] - ss.reference_eigs[k]) <
            degeneracy_tol * std::max(max_abs, 1e-300)) {
          std::ostringstream os;
          os << "joint_spectrum: reference spectrum degenerate in sector S="
             << sec.S;
          throw ModelError(os.str());
        }
    ss.Vinv = ss.V.partialPivLu().inverse();
    for (const QuantumOperator* m : members) {
      const Matrix D = ss.Vinv * sector_block(m->mat, sec) * ss.V;
      std::vector<Complex> eigs(d);
      for (int i = 0; i < d; ++i) eigs[i] = D(i, i);
      Matrix off = D;
      for (int i = 0; i < d; ++i) off(i, i) = 0.0;
      ss.max_leakage =
          std::max(ss.max_leakage, off.norm() / std::max(D.norm(), 1e-300));
      ss.member_eigs.push_back(std::move(eigs));
    }
    js.sectors.push_back(std::move(ss));
  }
  return js;
}

}  // namespace baxq
