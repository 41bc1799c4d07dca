#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "baxq/reps.hpp"

using namespace baxq;

namespace {

const Complex kQ(0.6, 0.25);

double entry_diff(const Matrix& A, const Matrix& B) {
  return (A - B).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("spin one half module") {
  const BorelRep r = spin_rep(0.5, kQ);
  REQUIRE(r.dim == 2);
  CHECK(r.boundary_level == 2);
  CHECK(!r.truncated());
  CHECK(r.full());
  CHECK(std::abs(r.H(0, 0) - Complex(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(r.H(1, 1) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(r.E_alpha(1, 0) - 1.0) < 1e-15);
  CHECK(std::abs(r.E_alpha(0, 1)) == 0.0);
  // [1][1] = 1 regardless of q
  CHECK(std::abs(r.E_beta_unit(0, 1) - 1.0) < 1e-14);
}

TEST_CASE("spin-1 raising chain at rational q") {
  const Complex q2(2.0, 0.0);
  const BorelRep r = spin_rep(1.0, q2);
  REQUIRE(r.dim == 3);
  // [1][2] = [2][1] = 5/2 at q = 2
  CHECK(std::abs(r.E_beta_unit(0, 1) - 2.5) < 1e-14);
  CHECK(std::abs(r.E_beta_unit(1, 2) - 2.5) < 1e-14);
  CHECK(std::abs(r.H(0, 0) + 2.0) < 1e-15);
  CHECK(std::abs(r.H(2, 2) - 2.0) < 1e-15);
}

TEST_CASE("oscillator raising coefficients at rational q") {
  const Complex q2(2.0, 0.0);
  // beta^+_1 = (1 - q^2)/(q - 1/q)^2 = -4/3 at q = 2
  const BorelRep p = osc_rep(+1, 4, q2);
  CHECK(std::abs(p.E_beta_unit(0, 1) - Complex(-4.0 / 3.0, 0.0)) < 1e-14);
  // beta^-_1 = (1 - q^-2)/(q - 1/q)^2 = 1/3 at q = 2
  const BorelRep m = osc_rep(-1, 4, q2);
  CHECK(std::abs(m.E_beta_unit(0, 1) - Complex(1.0 / 3.0, 0.0)) < 1e-14);
  CHECK(std::abs(p.H(2, 2) - 4.0) < 1e-15);
  CHECK(p.truncated());
  CHECK(p.boundary_level == 3);
}

TEST_CASE("highest-weight coefficients continue the spin formula") {
  // j = -1: coefficient at level k is [k][2j+1-k] = -[k][k+1]
  const BorelRep r = highest_weight_rep(Complex(-1.0, 0.0), 6, kQ);
  for (int k = 1; k < 5; ++k) {
    const Complex expect =
        -qnum(Complex(k, 0.0), kQ) * qnum(Complex(k + 1.0, 0.0), kQ);
    CHECK(std::abs(r.E_beta_unit(k - 1, k) - expect) < 1e-13);
  }
  CHECK(!r.full());
}

TEST_CASE("spin module is the head of its highest-weight extension") {
  for (double j : {0.5, 1.0, 1.5}) {
    const int d = static_cast<int>(2.0 * j) + 1;
    const BorelRep fin = spin_rep(j, kQ);
    const BorelRep ext = highest_weight_rep(Complex(j, 0.0), d + 5, kQ);
    CHECK(entry_diff(fin.E_alpha, ext.E_alpha.topLeftCorner(d, d)) < 1e-14);
    CHECK(entry_diff(fin.E_beta_unit, ext.E_beta_unit.topLeftCorner(d, d)) <
          1e-13);
    CHECK(entry_diff(fin.H, ext.H.topLeftCorner(d, d)) < 1e-14);
    // The raising chain vanishes across the head boundary.
    CHECK(std::abs(ext.E_beta_unit(d - 1, d)) < 1e-13);
  }
}

TEST_CASE("tail of a highest-weight module is the reflected-label module") {
  const double j = 1.0;
  const int d = static_cast<int>(2.0 * j) + 1, N = 12;
  const BorelRep big = highest_weight_rep(Complex(j, 0.0), N, kQ);
  const BorelRep ref = highest_weight_rep(Complex(-j - 1.0, 0.0), N - d, kQ);
  const int n = N - d;
  CHECK(entry_diff(big.E_beta_unit.block(d, d, n, n), ref.E_beta_unit) < 1e-12);
  CHECK(entry_diff(big.E_alpha.block(d, d, n, n), ref.E_alpha) < 1e-14);
  CHECK(entry_diff(big.H.block(d, d, n, n), ref.H) < 1e-13);
}

TEST_CASE("oscillator exchange under q to 1/q") {
  const BorelRep p = osc_rep(+1, 6, kQ);
  const BorelRep m = osc_rep(-1, 6, 1.0 / kQ);
  CHECK(entry_diff(p.E_beta_unit, m.E_beta_unit) < 1e-13);
  CHECK(entry_diff(p.E_alpha, m.E_alpha) < 1e-15);
  CHECK(entry_diff(p.H, m.H) < 1e-15);
}

TEST_CASE("reflected module layout") {
  const BorelRep r = reflected_rep(5, kQ);
  CHECK(std::abs(r.E_alpha(0, 1)) > 0.0);   // lowering-ordered raising action
  CHECK(std::abs(r.E_alpha(1, 0)) == 0.0);
  CHECK(std::abs(r.H(1, 1) + 2.0) < 1e-15);
  CHECK(std::abs(r.H(3, 3) + 6.0) < 1e-15);
}

TEST_CASE("defining relations hold on the interior of every kind") {
  const std::vector<std::pair<std::string, BorelRep>> reps = {
      {"spin_1/2", spin_rep(0.5, kQ)},
      {"spin_3/2", spin_rep(1.5, kQ)},
      {"hw", highest_weight_rep(Complex(0.37, 0.21), 14, kQ)},
      {"osc_plus", osc_rep(+1, 14, kQ)},
      {"osc_minus", osc_rep(-1, 14, kQ)},
      {"reflected", reflected_rep(14, kQ)},
  };
  for (const auto& [name, rep] : reps) {
    const AlgebraCheckReport rp = check_algebra_relations(rep, kQ);
    INFO(name);
    CHECK(rp.max_interior < 1e-12);
    CHECK(rp.pass(1e-12));
    CHECK(!rp.residuals.empty());
  }
}

TEST_CASE("defining relations across a q sample") {
  for (const Complex q : {Complex(0.8, 0.1), Complex(0.45, -0.6),
                          Complex(0.92, 0.0)}) {
    CHECK(check_algebra_relations(spin_rep(2.0, q), q).max_interior < 1e-12);
    CHECK(check_algebra_relations(osc_rep(+1, 10, q), q).max_interior < 1e-12);
  }
}

TEST_CASE("rescaled spin coefficients approach the oscillator chain") {
  const Complex q(0.6, 0.0);
  const std::vector<RepLimitRow> rows =
      rep_limit_check(q, Complex(1.0, 0.0), 8, {2.0, 3.0, 4.0, 5.0});
  REQUIRE(rows.size() == 4);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].err_plus < rows[i - 1].err_plus);
    CHECK(rows[i].err_minus < rows[i - 1].err_minus);
    // One unit of j contracts the error by |q|^4.
    const double ratio = rows[i].err_plus / rows[i - 1].err_plus;
    CHECK(ratio == doctest::Approx(std::pow(0.6, 4.0)).epsilon(0.25));
  }
}

TEST_CASE("module factory rejects bad labels") {
  CHECK_THROWS_AS(spin_rep(0.7, kQ), ModelError);   // 2j must be integral
  CHECK_THROWS_AS(spin_rep(-0.5, kQ), ModelError);
  CHECK_THROWS_AS(osc_rep(0, 6, kQ), ModelError);
  CHECK_THROWS_AS(osc_rep(+1, 1, kQ), ModelError);
  CHECK_THROWS_AS(highest_weight_rep(Complex(1.0, 0.0), 1, kQ), ModelError);
}
