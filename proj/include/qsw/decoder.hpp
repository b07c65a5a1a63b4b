#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qsw/divergences.hpp"
#include "qsw/states.hpp"

namespace qsw {

// Coherent position-based decoding. A base hypothesis test on (A, M) is
// lifted to tests Pi_j acting on (A, M_j) out of n position slots, and the
// square-root-measurement isometry
//   sum_j sqrt(Pi^{-1/2} Pi_j Pi^{-1/2}) (x) |j>  +  sqrt(I - Pi^0) (x) |0>
// writes the decoded position (0 = failure) into an outcome register.
struct DecoderBundle {
  TestOperator base_test;
  Index n_pos = 1;
  Index first_slot = 1;                    // absolute index of the first slot
  std::vector<std::string> position_names; // names inside base_test that get copies
  std::vector<std::string> common_names;   // the non-replicated part (e.g. A)
  RegisterSystem system;                   // [common..., slots...]
  std::vector<TestOperator> lifted_tests;  // Pi_j on `system`, j = 1..n_pos
  TestOperator total;                      // sum of lifted tests
  LinearMapOnRegisters pgm_isometry;       // system -> system + outcome register
  std::string outcome_name;
};

std::string slot_register_name(const std::string& base, Index slot);

DecoderBundle position_tests(const TestOperator& base,
                             const std::vector<std::string>& which_register,
                             Index n_pos, const std::string& outcome_name,
                             Index first_slot = 1);

// All decoding probabilities p_{(jt,kt)|(j,k)} of the four trace formulas,
// including the failure row/column 0.
struct ConfusionMatrix {
  Index n_a = 1, n_b = 1;
  // entry(j,k) is an (n_a+1) x (n_b+1) matrix over decoded outcomes
  // (index 0 = failure).
  std::vector<Eigen::MatrixXd> blocks;

  Eigen::MatrixXd& block(Index j, Index k) {
    return blocks[static_cast<size_t>((j - 1) * n_b + (k - 1))];
  }
  const Eigen::MatrixXd& block(Index j, Index k) const {
    return blocks[static_cast<size_t>((j - 1) * n_b + (k - 1))];
  }
  double row_sum(Index j, Index k) const { return block(j, k).sum(); }
  double diagonal_average() const;
};

ConfusionMatrix confusion_matrix(const Ket& psi_abmn, const DecoderBundle& bundle_a,
                                 const DecoderBundle& bundle_b,
                                 const DensityOperator& sigma_m,
                                 const DensityOperator& omega_n);

struct DecodeFidelityReport {
  double dh_a = 0.0, dh_b = 0.0;   // D_H^{eps2^2} terms
  Index r_a = 0, r_b = 0;
  bool precondition_a = false, precondition_b = false;
  double f2 = 0.0;                 // F^2(mu3, mu4)
  double bound = 0.0;              // 1 - 24 eps2^2
  double diag_lower = 0.0;        // average confusion diagonal (fidelity floor)
  double wrong_decode_mass = 0.0;  // sum over (jt,kt) != (j,k) given (1,1)
  double chain_bound = 0.0;        // 4 eps2^2 + 4 2^{r_a - dh_a} + 4 2^{r_b - dh_b}
  ConfusionMatrix confusion;
};

// Builds mu^(2), applies the two decoding isometries, compares against the
// ideal mu^(4); the base tests are the optimal_test witnesses at eps2^2.
// When the r-preconditions hold the fidelity bound is asserted; otherwise
// the report just carries the measurements.
DecodeFidelityReport decode_fidelity_check(const Ket& psi_abmn,
                           const std::vector<std::string>& a_names,
                           const std::vector<std::string>& m_names,
                           const std::vector<std::string>& b_names,
                           const std::vector<std::string>& n_names,
                           const DensityOperator& sigma_m, const DensityOperator& omega_n,
                           double eps2, Index r_a, Index r_b);

// Minimum eigenvalue of 2(I-S) + 4T - (I - (S+T)^{-1/2} S (S+T)^{-1/2});
// nonnegative up to numerics for 0 <= S <= I, T >= 0.
double hayashi_nagaoka_residual(const cmat& s, const cmat& t);

}  // namespace qsw
