#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "baxq/lax.hpp"
#include "baxq/transfer.hpp"

using namespace baxq;

namespace {

const Complex kQ(0.6, 0.25);
const Complex kLam(0.7, 0.3);

ModelParams base_params(int L, int N, double phi) {
  ModelParams p = ModelParams::defaults();
  p.q = kQ;
  p.phi = phi;
  p.L = L;
  p.trunc_N = N;
  p.lambda_grid = {kLam};
  return p;
}

Complex geo(Complex w) { return Complex(1.0, 0.0) / (Complex(1.0, 0.0) - w); }

// Monodromy over L sites assembled with dense Kronecker products, newest site
// on the most significant bit, traced with level weights w_k. Slow but written
// without any of the block bookkeeping the library uses.
Matrix dense_twisted_trace(const BorelRep& rep, Complex lambda, Complex q,
                           int L, const std::vector<Complex>& w) {
  const LaxOperator lax = derive_lax(rep, lambda, q);
  const int N = lax.aux_dim;
  const int chain = 1 << L;
  Matrix M = Matrix::Identity(N * chain, N * chain);
  for (int site = 0; site < L; ++site) {
    Matrix K = Matrix::Zero(N * chain, N * chain);
    const int lo = 1 << site;
    const int hi = chain / (2 * lo);
    for (int so = 0; so < 2; ++so)
      for (int si = 0; si < 2; ++si) {
        Matrix E = Matrix::Zero(2, 2);
        E(so, si) = 1.0;
        K += kron(lax.block(so, si),
                  kron(Matrix::Identity(hi, hi),
                       kron(E, Matrix::Identity(lo, lo))));
      }
    M = K * M;
  }
  return twisted_partial_trace(M, N, chain, w);
}

}  // namespace

TEST_CASE("sector decomposition partitions the chain basis by weight") {
  const auto secs = sector_decomposition(4);
  REQUIRE(secs.size() == 5);
  const int dims[5] = {1, 4, 6, 4, 1};
  int total = 0;
  for (int i = 0; i < 5; ++i) {
    CHECK(secs[i].S == -4 + 2 * i);
    CHECK(static_cast<int>(secs[i].indices.size()) == dims[i]);
    for (int b : secs[i].indices) CHECK(spin_z(b, 4) == secs[i].S);
    total += static_cast<int>(secs[i].indices.size());
  }
  CHECK(total == 16);
  CHECK(spin_z(0, 4) == -4);
  CHECK(spin_z(0xF, 4) == 4);
  CHECK(spin_z(0b0101, 4) == 0);
}

TEST_CASE("sector blocks embed and extract consistently") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto secs = sector_decomposition(3);
  Matrix M = Matrix::Zero(8, 8);
  std::vector<Matrix> blocks;
  for (const Sector& s : secs) {
    const int d = static_cast<int>(s.indices.size());
    Matrix B(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) B(a, b) = Complex(u(gen), u(gen));
    add_sector_block(M, s, B);
    blocks.push_back(B);
  }
  for (size_t i = 0; i < secs.size(); ++i)
    CHECK(rel_residual(sector_block(M, secs[i]), blocks[i]) < 1e-15);
  // Entries that join different sectors stay empty.
  CHECK(std::abs(M(0, 1)) == 0.0);
  CHECK(std::abs(M(7, 3)) == 0.0);
}

TEST_CASE("module factory dispatches on kind") {
  CHECK(make_rep(RepKind::SpinJ, Complex(1.0, 0.0), 99, kQ).dim == 3);
  CHECK(make_rep(RepKind::OscMinus, Complex(0.0, 0.0), 12, kQ).dim == 12);
  CHECK(make_rep(RepKind::OscPlus, Complex(0.0, 0.0), 9, kQ).dim == 9);
  CHECK(make_rep(RepKind::Reflected, Complex(0.0, 0.0), 7, kQ).kind ==
        RepKind::Reflected);
  CHECK(make_rep(RepKind::HighestWeightInf, Complex(-1.3, 0.2), 10, kQ).dim ==
        10);
  CHECK(op_tag_name(OpTag::Qminus) == "Q_minus");
  CHECK(op_tag_name(OpTag::Z) == "Z");
}

TEST_CASE("finite transfer matrix matches a dense kron reconstruction") {
  ModelParams p = base_params(2, 16, 0.3);
  const BorelRep rep = spin_rep(1.0, kQ);
  const QuantumOperator op = transfer_matrix(rep, kLam, p);
  CHECK(op.tag == OpTag::Zj);
  CHECK(op.infinite_aux == false);
  CHECK(op.tail_mode_count.empty());

  const Complex z = std::polar(1.0, p.phi);
  std::vector<Complex> w(rep.dim);
  for (int k = 0; k < rep.dim; ++k) w[k] = qpow(z, Complex(k, 0.0));
  const Matrix ref = dense_twisted_trace(rep, kLam, kQ, 2, w);
  CHECK(rel_residual(op.mat, ref) < 1e-13);
}

TEST_CASE("head of a split trace matches the dense partial sum") {
  ModelParams p = base_params(2, 24, 0.3);
  const BorelRep rep = osc_rep(-1, p.trunc_N, kQ);
  const auto [head, tail] = transfer_matrix_split(rep, kLam, p, 3);

  const Complex z = std::polar(1.0, p.phi);
  std::vector<Complex> w(rep.dim, Complex(0.0, 0.0));
  for (int k = 0; k < 3; ++k) w[k] = qpow(z, Complex(k, 0.0));
  const Matrix ref = dense_twisted_trace(rep, kLam, kQ, 2, w);
  CHECK(rel_residual(head.mat, ref) < 1e-13);

  const QuantumOperator full = transfer_matrix(rep, kLam, p);
  CHECK(rel_residual(head.mat + tail.mat, full.mat) < 1e-12);
}

TEST_CASE("trivial auxiliary module traces to the identity") {
  ModelParams p = base_params(3, 16, 0.25);
  const QuantumOperator op = transfer_matrix(spin_rep(0.0, kQ), kLam, p);
  CHECK(op.tag == OpTag::Zj);
  CHECK(rel_residual(op.mat, Matrix::Identity(8, 8)) < 1e-14);
}

TEST_CASE("single site continued traces equal their geometric closed forms") {
  // Diagonal entries of the monodromy at one site are the Lax diagonals, so
  // the twisted trace is a geometric series whose continuation has a closed
  // rational value. This pins the continuation machinery to exact numbers.
  ModelParams p = base_params(1, 32, 0.3);
  const Complex z = std::polar(1.0, p.phi);
  const Complex zi = std::polar(1.0, -p.phi);
  const Complex one(1.0, 0.0);

  SUBCASE("lowering family") {
    const QuantumOperator op = transfer_matrix(osc_rep(-1, 32, kQ), kLam, p);
    Matrix ref = Matrix::Zero(2, 2);
    ref(0, 0) = geo(z / kQ);
    ref(1, 1) = geo(z * kQ) - kLam / (kQ * kQ) * geo(z / kQ);
    CHECK(op.tag == OpTag::Qminus);
    CHECK(rel_residual(op.mat, ref) < 5e-12);
  }
  SUBCASE("raising family") {
    const QuantumOperator op = transfer_matrix(osc_rep(+1, 32, kQ), kLam, p);
    Matrix ref = Matrix::Zero(2, 2);
    ref(0, 0) = (geo(z / kQ) - kLam * geo(z * kQ)) / (one - kLam);
    ref(1, 1) = geo(z * kQ) / (one - kLam);
    CHECK(op.tag == OpTag::Qplus);
    CHECK(rel_residual(op.mat, ref) < 5e-12);
  }
  SUBCASE("reflected family carries the opposite twist") {
    const QuantumOperator op = transfer_matrix(reflected_rep(32, kQ), kLam, p);
    Matrix ref = Matrix::Zero(2, 2);
    ref(0, 0) = geo(zi * kQ);
    ref(1, 1) = geo(zi / kQ) - kLam * geo(zi * kQ);
    CHECK(op.tag == OpTag::ReflectedT);
    CHECK(op.twist_sign == -1.0);
    CHECK(rel_residual(op.mat, ref) < 5e-12);

    // The reflected trace reproduces the lowering family up to the
    // sector-dependent weight -e^{i phi} q^S.
    const QuantumOperator qm = transfer_matrix(osc_rep(-1, 32, kQ), kLam, p);
    Matrix dressed = Matrix::Zero(2, 2);
    dressed(0, 0) = -z / kQ * qm.mat(0, 0);
    dressed(1, 1) = -z * kQ * qm.mat(1, 1);
    CHECK(rel_residual(op.mat, dressed) < 5e-12);
  }
}

TEST_CASE("small argument limit resolves sector weights") {
  // At vanishing argument both Q family operators become diagonal with entry
  // 1 / (1 - e^{i phi} q^S) on every basis state of sector S.
  ModelParams p = base_params(3, 32, 0.25);
  const Complex z = std::polar(1.0, p.phi);
  const Complex lam(1e-6, 0.0);
  Matrix ref = Matrix::Zero(8, 8);
  for (int b = 0; b < 8; ++b)
    ref(b, b) = geo(z * qpow(kQ, Complex(spin_z(b, 3), 0.0)));
  const QuantumOperator qm = transfer_matrix(osc_rep(-1, 32, kQ), lam, p);
  const QuantumOperator qp = transfer_matrix(osc_rep(+1, 32, kQ), lam, p);
  CHECK(rel_residual(qm.mat, ref) < 1e-4);
  CHECK(rel_residual(qp.mat, ref) < 1e-4);
}

TEST_CASE("sector normalization applies the documented weights") {
  ModelParams p = base_params(2, 28, 0.3);
  const double m = 2.0;
  const Complex shifted = shifted_lambda(kLam, kQ, m);
  const QuantumOperator raw =
      transfer_matrix(osc_rep(-1, p.trunc_N, kQ), shifted, p);
  const QuantumOperator out = normalize_q(raw, kLam, m, p);
  CHECK(out.primed);
  for (const Sector& sec : sector_decomposition(2)) {
    const Complex f = qpow(kLam, Complex(-sec.S / 4.0, 0.0)) *
                      qpow(kQ, Complex(-m * sec.S / 4.0, 0.0));
    CHECK(rel_residual(sector_block(out.mat, sec),
                       f * sector_block(raw.mat, sec)) < 1e-15);
  }

  const QuantumOperator plus =
      transfer_matrix(osc_rep(+1, p.trunc_N, kQ), shifted, p);
  const QuantumOperator outp = normalize_q(plus, kLam, m, p);
  const auto secs = sector_decomposition(2);
  const Sector& top = secs.back();
  const Complex fp = qpow(kLam, Complex(top.S / 4.0, 0.0)) *
                     qpow(kQ, Complex(m * top.S / 4.0, 0.0));
  CHECK(rel_residual(sector_block(outp.mat, top),
                     fp * sector_block(plus.mat, top)) < 1e-15);

  QuantumOperator wrong = raw;
  wrong.tag = OpTag::Z;
  CHECK_THROWS_AS(normalize_q(wrong, kLam, m, p), ModelError);
}

TEST_CASE("continued trace is stable under deeper truncation") {
  ModelParams p24 = base_params(3, 24, 0.25);
  ModelParams p40 = base_params(3, 40, 0.25);
  const QuantumOperator a = transfer_matrix(osc_rep(-1, 24, kQ), kLam, p24);
  const QuantumOperator b = transfer_matrix(osc_rep(-1, 40, kQ), kLam, p40);
  CHECK(rel_residual(a.mat, b.mat) < 1e-10);
  CHECK(a.tail_mode_count.size() == 4);
  CHECK(a.truncation_delta < 1e-8);
  CHECK(a.warning.empty());
  CHECK(a.s_comm_residual < 1e-8);
}

TEST_CASE("continuation rejects a truncation too small for the head") {
  ModelParams p = base_params(3, 2, 0.25);
  CHECK_THROWS_AS(transfer_matrix(osc_rep(-1, 2, kQ), kLam, p), ModelError);
}

TEST_CASE("joint spectrum shares eigenbases and flags degeneracy") {
  ModelParams p = base_params(2, 24, 0.3);
  const BorelRep half = spin_rep(0.5, kQ);
  const QuantumOperator ref = transfer_matrix(half, kLam, p);
  const QuantumOperator z2 = transfer_matrix(half, Complex(0.2, 0.9), p);
  const QuantumOperator qm = transfer_matrix(osc_rep(-1, 24, kQ), kLam, p);
  const JointSpectrum js = joint_spectrum(ref, {&z2, &qm});
  REQUIRE(js.sectors.size() == 3);
  CHECK(js.sectors[1].reference_eigs.size() == 2);
  CHECK(js.sectors[1].member_eigs.size() == 2);
  for (const SectorSpectrum& ss : js.sectors) CHECK(ss.max_leakage < 1e-8);

  QuantumOperator ident;
  ident.L = 2;
  ident.mat = Matrix::Identity(4, 4);
  CHECK_THROWS_AS(joint_spectrum(ident, {}), ModelError);
}
