#include <doctest.h>

#include "qsw/decoder.hpp"
#include "test_helpers.hpp"

using namespace qsw;
using namespace qsw::testing;

TEST_CASE("position tests: trivial decode") {
  TestOperator base = TestOperator::identity(qubits({"A", "M"}));
  DecoderBundle bundle = position_tests(base, {"M"}, 1, "Out");
  CHECK(bundle.system.total_dim() == 4);
  // The isometry decodes position 1 with certainty.
  Ket psi = random_haar_ket(bundle.system, 3);
  Ket out = apply_on(psi, bundle.pgm_isometry);
  // Outcome register must be |1>.
  DensityOperator marg = partial_trace(out, {"Out"});
  CHECK(std::abs(marg.matrix(1, 1).real() - 1.0) < 1e-9);
}

TEST_CASE("position tests: rank-1 base, hand-assembled") {
  // base = |00><00| on (A, M); 2 positions.
  RegisterSystem am = qubits({"A", "M"});
  cmat proj = cmat::Zero(4, 4);
  proj(0, 0) = 1.0;
  TestOperator base(am, proj);
  DecoderBundle bundle = position_tests(base, {"M"}, 2, "Out");
  CHECK(bundle.system.total_dim() == 8);

  // Pi_1 = |0><0|_A x |0><0|_M1 x I_M2, Pi_2 = |0><0|_A x I_M1 x |0><0|_M2.
  cmat pi1 = cmat::Zero(8, 8), pi2 = cmat::Zero(8, 8);
  for (Index m2 = 0; m2 < 2; ++m2) pi1(m2, m2) = 1.0;             // A=0,M1=0
  for (Index m1 = 0; m1 < 2; ++m1) pi2(m1 * 2, m1 * 2) = 1.0;     // A=0,M2=0
  CHECK((bundle.lifted_tests[0].matrix - pi1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((bundle.lifted_tests[1].matrix - pi2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((bundle.total.matrix - (pi1 + pi2)).cwiseAbs().maxCoeff() < 1e-12);

  // Isometry: 8x... matrix has orthonormal columns by construction.
  bundle.pgm_isometry.validate();
  cmat g = bundle.pgm_isometry.matrix.adjoint() * bundle.pgm_isometry.matrix;
  CHECK((g - cmat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pgm isometry is an isometry on random bases") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DensityOperator r = random_mixed(qubits({"A", "M"}), seed * 3);
    DensityOperator s = random_mixed(qubits({"A", "M"}), seed * 3 + 1);
    auto res = optimal_test(r, s, 0.3);
    DecoderBundle bundle = position_tests(*res.witness, {"M"}, 2, "Out");
    cmat g = bundle.pgm_isometry.matrix.adjoint() * bundle.pgm_isometry.matrix;
    CHECK((g - cmat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("decode failure mass is bounded by the uncovered test mass") {
  // The failure branch is I - supp(Pi^A). Since each lifted test sits below
  // the support projector, 1 - max_j Tr(Pi_j rho) dominates the failure
  // probability, as does 1 - Tr(Pi^A rho)/n (the sum can exceed the support).
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DensityOperator r = random_mixed(qubits({"A", "M"}), seed * 13);
    DensityOperator s = random_mixed(qubits({"A", "M"}), seed * 13 + 1);
    auto res = optimal_test(r, s, 0.4);
    DecoderBundle bundle = position_tests(*res.witness, {"M"}, 2, "Out");
    Ket input = random_haar_ket(bundle.system, seed * 13 + 2);
    Ket decoded = apply_on(input, bundle.pgm_isometry);
    DensityOperator outcome = partial_trace(decoded, {"Out"});
    const double p_fail = outcome.matrix(0, 0).real();
    double best_single = 0.0;
    for (const auto& t : bundle.lifted_tests)
      best_single = std::max(best_single, expectation(input, t));
    CHECK(p_fail <= 1.0 - best_single + 1e-8);
    const double covered = expectation(input, bundle.total);
    CHECK(p_fail <= 1.0 - covered / double(bundle.n_pos) + 1e-8);
  }
}

TEST_CASE("confusion diagonal is uniform for product states with full tests") {
  Ket prod = tensor({random_haar_ket(RegisterSystem::single("A", 2), 1),
                     random_haar_ket(RegisterSystem::single("M", 2), 2),
                     random_haar_ket(RegisterSystem::single("B", 2), 3),
                     random_haar_ket(RegisterSystem::single("N", 2), 4)});
  TestOperator full_a = TestOperator::identity(qubits({"A", "M"}));
  TestOperator full_b = TestOperator::identity(qubits({"B", "N"}));
  DecoderBundle ba = position_tests(full_a, {"M"}, 2, "J2p");
  DecoderBundle bb = position_tests(full_b, {"N"}, 2, "K2p");
  ConfusionMatrix cm = confusion_matrix(prod, ba, bb, maximally_mixed("M", 2),
                                        maximally_mixed("N", 2));
  for (Index j = 1; j <= 2; ++j)
    for (Index k = 1; k <= 2; ++k)
      for (Index jt = 1; jt <= 2; ++jt)
        for (Index kt = 1; kt <= 2; ++kt)
          CHECK(cm.block(j, k)(jt, kt) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("hayashi-nagaoka residual") {
  {
    cmat s = cmat::Identity(4, 4);
    cmat t = cmat::Zero(4, 4);
    CHECK(std::abs(hayashi_nagaoka_residual(s, t)) < 1e-12);
  }
  {
    cmat s = cmat::Zero(3, 3);
    cmat t = random_contraction(3, 5) * 2.0;
    CHECK(hayashi_nagaoka_residual(s, t) >= -1e-9);
  }
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Index d = 2 + Index(seed % 7);
    cmat s = random_contraction(d, seed * 2);
    cmat t = random_contraction(d, seed * 2 + 1) * (0.5 + double(seed % 3));
    CHECK(hayashi_nagaoka_residual(s, t) >= -1e-9);
  }
}

TEST_CASE("tensor-test operator inequality") {
  // I - P x Q <= I x (I-Q) + (I-P) x I for 0 <= P,Q <= I.
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Index d1 = 2 + Index(seed % 3), d2 = 2 + Index((seed / 3) % 3);
    cmat p = random_contraction(d1, seed * 11);
    cmat q = random_contraction(d2, seed * 11 + 1);
    const Index d = d1 * d2;
    cmat kron_pq = cmat::Zero(d, d);
    for (Index i = 0; i < d1; ++i)
      for (Index j = 0; j < d1; ++j)
        kron_pq.block(i * d2, j * d2, d2, d2) = p(i, j) * q;
    cmat id = cmat::Identity(d, d);
    cmat lhs = id - kron_pq;
    cmat rhs = cmat::Zero(d, d);
    for (Index i = 0; i < d1; ++i)
      rhs.block(i * d2, i * d2, d2, d2) += cmat::Identity(d2, d2) - q;
    cmat imp = cmat::Identity(d1, d1) - p;
    for (Index i = 0; i < d1; ++i)
      for (Index j = 0; j < d1; ++j)
        rhs.block(i * d2, j * d2, d2, d2) += imp(i, j) * cmat::Identity(d2, d2);
    CHECK(min_eig_herm(rhs - lhs) >= -1e-10);
  }
}

namespace {

// A micro instance with strongly correlated (A,M) and (B,N) pairs so the
// rate preconditions can hold at r = 1.
Ket correlated_psi(std::uint64_t seed) {
  Ket raw = near_product_ket(qubits({"A", "M", "B", "N"}), seed, 0.0);
  // Overwrite with Bell pairs on (A,M) and (B,N), slightly perturbed.
  Ket bell_am = bell_pair("A", "M");
  Ket bell_bn = bell_pair("B", "N");
  Ket prod = tensor(bell_am, bell_bn).reordered(raw.system.names());
  Ket noise = random_haar_ket(raw.system, seed * 7 + 1);
  cvec v = std::sqrt(0.98) * prod.amps + std::sqrt(0.02) * noise.amps;
  v /= v.norm();
  return Ket(raw.system, v);
}

}  // namespace

TEST_CASE("confusion matrix rows sum to one") {
  Ket psi = correlated_psi(3);
  DensityOperator sig = maximally_mixed("M", 2);
  DensityOperator ome = maximally_mixed("N", 2);
  auto ra = optimal_test(partial_trace(psi, {"A", "M"}),
                         tensor(partial_trace(psi, {"A"}), sig), 0.3);
  auto rb = optimal_test(partial_trace(psi, {"B", "N"}),
                         tensor(partial_trace(psi, {"B"}), with_names(ome, {"N"})), 0.3);
  DecoderBundle ba = position_tests(*ra.witness, {"M"}, 2, "J2p");
  DecoderBundle bb = position_tests(*rb.witness, {"N"}, 2, "K2p");
  ConfusionMatrix cm = confusion_matrix(psi, ba, bb, sig, ome);
  for (Index j = 1; j <= 2; ++j)
    for (Index k = 1; k <= 2; ++k) {
      CHECK(cm.row_sum(j, k) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(cm.block(j, k).minCoeff() >= -1e-12);
    }

  // Diagonal average equals 1 - wrong-decode mass at (1,1) by symmetry.
  const double diag = cm.diagonal_average();
  const double wrong = cm.row_sum(1, 1) - cm.block(1, 1)(1, 1);
  CHECK(diag == doctest::Approx(1.0 - wrong).epsilon(1e-9));
}

TEST_CASE("decode fidelity check on micro instances") {
  int holds = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Ket psi = correlated_psi(seed);
    DensityOperator sig = maximally_mixed("M", 2);
    DensityOperator ome = maximally_mixed("N", 2);
    const double eps2 = 0.75;
    auto rep = decode_fidelity_check(psi, {"A"}, {"M"}, {"B"}, {"N"}, sig, ome, eps2, 1, 1);
    CHECK(rep.f2 >= 0.0);
    CHECK(rep.f2 <= 1.0 + 1e-9);
    if (rep.precondition_a && rep.precondition_b) {
      ++holds;
      CHECK(rep.f2 >= rep.bound - 1e-7);
      // Lemma 1: the fidelity dominates the average diagonal.
      CHECK(std::sqrt(rep.f2) >= rep.diag_lower - 1e-8);
      // Decoding error chain with the optimal-test witnesses.
      CHECK(rep.wrong_decode_mass <= rep.chain_bound + 1e-7);
    }
  }
  CHECK(holds >= 3);  // the construction is correlated enough most of the time
}

TEST_CASE("decode fidelity: single position with a full-mass test is exact") {
  // With one position and Tr(Pi Psi_AM) = 1 the decode is noiseless.
  Ket psi = tensor(bell_pair("A", "M"), bell_pair("B", "N"));
  DensityOperator sig = maximally_mixed("M", 2);
  DensityOperator ome = maximally_mixed("N", 2);
  auto rep = decode_fidelity_check(psi, {"A"}, {"M"}, {"B"}, {"N"}, sig, ome, 0.45, 0, 0);
  CHECK(rep.f2 >= 1.0 - 24.0 * 0.45 * 0.45 - 1e-7);
}

TEST_CASE("decode fidelity cross-checks against the confusion matrix") {
  // Cross-check F^2 against the confusion-matrix Lemma-1 lower bound and
  // against an independently computed overlap for a product psi.
  Ket psi = tensor(bell_pair("A", "M"), bell_pair("B", "N"));
  DensityOperator sig = maximally_mixed("M", 2);
  DensityOperator ome = maximally_mixed("N", 2);
  auto rep = decode_fidelity_check(psi, {"A"}, {"M"}, {"B"}, {"N"}, sig, ome, 0.75, 1, 1);
  // For Bell pairs the optimal test keeps the maximally entangled subspace;
  // the decode fidelity must dominate the Lemma-1 average.
  CHECK(std::sqrt(rep.f2) >= rep.diag_lower - 1e-8);
  CHECK(rep.wrong_decode_mass <= rep.chain_bound + 1e-7);
}
