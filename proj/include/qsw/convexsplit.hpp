#pragma once

#include <optional>

#include "qsw/divergences.hpp"
#include "qsw/states.hpp"

namespace qsw {

// Tripartite convex-split instance. rho/rho_prime live on registers
// (R, A, B) (each slot may itself be a grouped register of the caller's
// choosing); sigma is a state on A, omega on B. r_a/r_b are log2 copy
// counts, so the split uses 2^r_a A-slots and 2^r_b B-slots.
struct ConvexSplitInstance {
  DensityOperator rho_rab;
  DensityOperator rho_prime_rab;
  DensityOperator sigma_a;
  DensityOperator omega_b;
  Index r_a = 1;  // log2 copies on the A side (>= 1 per the lemma)
  Index r_b = 1;
  double delta = 0.1;
  double epsilon = 0.1;

  std::string reg_r, reg_a, reg_b;  // register names inside rho_rab

  void validate() const;
};

struct ConvexSplitReport {
  double k1 = 0.0;  // D_max(rho'_RAB || rho_R x sigma x omega)
  double k2 = 0.0;  // D_max(rho'_RA  || rho_R x sigma)
  double k3 = 0.0;  // D_max(rho'_RB  || rho_R x omega)
  double dmax_r = 0.0;     // D_max(rho'_R || rho_R)
  bool delta_check = false;  // rho'_R <= 2^delta rho_R
  double delta_eff = 0.0;    // smallest delta making all four conditions hold
  double certified_p = 0.0;  // epsilon + 2 sqrt(delta_eff)
  double relent_bound = 0.0; // log(2^d + 2^{k2-Ra} + 2^{k3-Rb} + 2^{k1-Ra-Rb})
  std::optional<double> exact_p;
  std::optional<double> exact_relent;
};

// Instance-name helpers for the split registers: A1..A_{2^r_a}, B1..
std::string split_slot_name(const std::string& base, Index i);

// tau = 2^{-r_a-r_b} sum_{i,j} rho_{R A_i B_j} x sigma^{(others)} x omega^{(others)}
// on registers [R, A1.., B1..]. Dense; capped at total dimension 2^13.
DensityOperator build_convex_split_state(const ConvexSplitInstance& inst);

// The proof's four-term marginal of tau' on (R, A_i, B_j), built from
// rho_prime with exact coefficients.
DensityOperator pair_marginal(const ConvexSplitInstance& inst);

// Analytic side: the three D_max terms, delta_eff, the certified purified
// distance epsilon + 2 sqrt(delta_eff) and the relative-entropy bound.
ConvexSplitReport certified_bound(const ConvexSplitInstance& inst);

// Dense side: builds tau and fills exact_p / exact_relent; asserts
// exact_p <= epsilon + 2 sqrt(delta_eff) + 1e-7.
ConvexSplitReport verify_lemma(const ConvexSplitInstance& inst);

}  // namespace qsw
