#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "qsw/convexsplit.hpp"
#include "qsw/decoder.hpp"
#include "qsw/divergences.hpp"
#include "qsw/states.hpp"

namespace qsw {

// One instance of the redistribution task: |psi> pure over the six named
// registers (dimension-1 registers encode absent systems), the reference
// states sigma/omega for the dummy slots, and the three error parameters.
struct ProtocolInstance {
  Ket psi;  // pure on R, A, M, B, N, C
  std::optional<DensityOperator> psi_prime;  // on >= {R,A,B,M,N}; default: psi itself
  DensityOperator sigma_m;  // single register matching reg_m's dimension
  DensityOperator omega_n;
  double eps1 = 0.05;
  double eps2 = 0.1;
  double delta = 0.01;

  std::string reg_r = "R", reg_a = "A", reg_m = "M", reg_b = "B", reg_n = "N",
              reg_c = "C";

  void validate() const;
  DensityOperator psi_prime_or_default() const;

  // The coding theorem's hypothesis; rates are still computable when it
  // fails, but guaranteed_error is then vacuous (>= 1).
  bool hypothesis_satisfied() const {
    return eps1 + 5.0 * eps2 + 2.0 * std::sqrt(delta) < 1.0;
  }
};

// Everything on the right-hand side of the rate displays, evaluated exactly,
// plus the chosen integer rates. R_a/R_b are the doubled rates (so always
// even); the physical qubit counts are R/2.
struct Certificate {
  std::array<double, 3> dmax_terms{};  // (RABM | RAB x sigma), (RABN | ...), (RABMN | ...)
  std::array<double, 2> dh_terms{};    // D_H^{eps2^2} on (AM) and (BN)
  Index r_a = 0, r_b = 0;
  bool r_a_clamped = false, r_b_clamped = false;
  Index R_a = 0, R_b = 0;  // doubled rates, 2 * qubit count
  double qubits_c_to_a = 0.0, qubits_c_to_b = 0.0;
  double guaranteed_error = 0.0;  // eps1 + 5 eps2 + 2 sqrt(delta)
  double dmax_rab = 0.0;          // D_max(psi'_RAB || psi_RAB)
  bool delta_condition_ok = false;  // psi'_RAB <= 2^delta psi_RAB
  bool hypothesis_ok = false;       // eps1 + 5 eps2 + 2 sqrt(delta) < 1
};

struct RunOptions {
  // Micro-run overrides: exponents of the J1/K1 blocks and of the per-block
  // position counts. When set, the transcript reports measured (not
  // guaranteed) error.
  std::optional<Index> block_exp_a, block_exp_b;
  std::optional<Index> pos_exp_a, pos_exp_b;
  bool keep_states = false;
  int theta_opt_rounds = 2;  // alternating Uhlmann rounds for theta'
};

struct Transcript {
  Index block_exp_a = 0, block_exp_b = 0;  // log2 |J1|, log2 |K1|
  Index pos_exp_a = 0, pos_exp_b = 0;      // log2 per-block positions
  bool rates_overridden = false;

  double qubit_cost_a = 0.0, qubit_cost_b = 0.0;  // block_exp / 2 each

  double gap_split = 0.0;      // P(xi', mu)
  double f_split = 0.0;        // F(xi', mu)
  double f_split_marginal = 0.0;  // F of the shared marginals (Uhlmann equality)
  double gap_decode = 0.0;     // P(mu3, mu4)
  double final_p = 0.0;        // P(Phi, Psi x theta1' x theta2'), optimized theta'
  double final_p_display = 0.0;  // same with the closed-form theta' candidates
  double chain_bound = 0.0;    // gap_split + gap_decode

  std::map<std::string, std::string> owners;  // register -> party tag
  std::optional<Ket> final_state;
  bool reversed = false;
};

struct EndToEndReport {
  double delta_eff = 0.0;
  bool delta_flagged = false;      // delta_eff > instance delta
  double split_bound = 0.0;        // eps1 + 2 sqrt(delta_eff)
  double decode_bound = 0.0;       // 5 eps2
  double total_bound = 0.0;        // eps1 + 5 eps2 + 2 sqrt(delta_eff)
  bool split_ok = false, decode_ok = false, total_ok = false, chain_ok = false;
  bool all_ok = false;
};

// Evaluates the three D_max and two D_H terms and returns minimal integer
// rates meeting the rate displays plus the convex-split feasibility of the
// chosen integer r_a/r_b. Sum slack is distributed to equalize the two
// sides' margins.
Certificate plan_rates(const ProtocolInstance& inst);

// Steps 1-5 of the coding theorem on dense micro instances.
Transcript run_task2(const ProtocolInstance& inst, const Certificate& cert,
                     const RunOptions& opts = {});

// The time-reversed protocol: inverse maps in reverse order starting from
// Psi (x) theta1' (x) theta2'. The final purified distance agrees with the
// forward run's (unitary-dilation bookkeeping keeps lost norm as error).
Transcript run_task1(const ProtocolInstance& inst, const Certificate& cert,
                     const RunOptions& opts = {});

EndToEndReport verify_end_to_end(const ProtocolInstance& inst, const Certificate& cert,
                                 const Transcript& transcript);

// The tripartite convex-split instance induced by a protocol run: R-slot is
// the grouped (R,A,B), the split slots are M vs sigma and N vs omega.
ConvexSplitInstance induced_split_instance(const ProtocolInstance& inst,
                                           Index total_exp_a, Index total_exp_b);

}  // namespace qsw
