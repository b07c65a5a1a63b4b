#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsw/linalg.hpp"
#include "qsw/registers.hpp"

namespace qsw {

// Unit vector tagged with a register system (register 0 most significant).
struct Ket {
  RegisterSystem system;
  cvec amps;

  Ket() = default;
  Ket(RegisterSystem sys, cvec a) : system(std::move(sys)), amps(std::move(a)) {}

  static Ket basis(const RegisterSystem& sys, Index flat);

  double norm() const { return amps.norm(); }
  void validate() const;  // throws ShapeError on bad layout or norm

  Ket reordered(const std::vector<std::string>& names) const;
};

// Hermitian PSD matrix tagged with a register system. Trace is 1 unless the
// producing operation documents sub-normalized output.
struct DensityOperator {
  RegisterSystem system;
  cmat matrix;

  DensityOperator() = default;
  DensityOperator(RegisterSystem sys, cmat m)
      : system(std::move(sys)), matrix(std::move(m)) {}

  double trace() const { return matrix.trace().real(); }
  void validate(bool allow_subnormalized = false) const;

  DensityOperator reordered(const std::vector<std::string>& names) const;
};

// Operator with 0 <= Pi <= I used for hypothesis tests and position decoding.
struct TestOperator {
  RegisterSystem system;
  cmat matrix;

  TestOperator() = default;
  TestOperator(RegisterSystem sys, cmat m)
      : system(std::move(sys)), matrix(std::move(m)) {}

  static TestOperator identity(const RegisterSystem& sys);
  void validate() const;
};

// Linear map between register sets; matrix has prod(codomain dims) rows and
// prod(domain dims) columns.
struct LinearMapOnRegisters {
  std::vector<Register> domain;
  std::vector<Register> codomain;
  cmat matrix;
  bool isometry = false;
  bool unitary = false;

  Index domain_dim() const;
  Index codomain_dim() const;
  void validate() const;  // checks shape and the isometry/unitary flags

  LinearMapOnRegisters adjoint() const;  // swaps domain/codomain
};

LinearMapOnRegisters swap_map(const Register& x, const Register& y);
LinearMapOnRegisters identity_map(const std::vector<Register>& regs);

// ---- tensor products ------------------------------------------------------

Ket tensor(const std::vector<Ket>& kets);
DensityOperator tensor(const std::vector<DensityOperator>& ops);
Ket tensor(const Ket& a, const Ket& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
TestOperator tensor(const TestOperator& a, const TestOperator& b);

DensityOperator to_density(const Ket& k);

// Same amplitudes/matrix with registers renamed positionally.
Ket with_names(const Ket& k, const std::vector<std::string>& names);
DensityOperator with_names(const DensityOperator& op, const std::vector<std::string>& names);

// Reorders `group` to the front and fuses it into one register.
DensityOperator merge_registers(const DensityOperator& op,
                                const std::vector<std::string>& group,
                                const std::string& merged_name);

// ---- marginals -------------------------------------------------------------

// Marginal on `keep` (set semantics; output order follows the input system).
DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep);
DensityOperator partial_trace(const Ket& psi, const std::vector<std::string>& keep);

// Tr(op x I * rho) for op living on a subset of rho's registers.
double expectation(const DensityOperator& rho, const TestOperator& op);
double expectation(const Ket& psi, const TestOperator& op);

// op on a subset embedded into `full` (dense; small systems only).
TestOperator embed(const TestOperator& op, const RegisterSystem& full);

// ---- purification / fidelity ----------------------------------------------

// Spectral purification with purifier dimension = rank(rho).
Ket purify(const DensityOperator& rho, const std::string& purifier_name);

struct FidelityResult {
  double fidelity;           // F in [0,1]
  double purified_distance;  // sqrt(1 - F^2)
};

FidelityResult fidelity_pd(const DensityOperator& rho, const DensityOperator& sigma);
FidelityResult fidelity_pd(const Ket& a, const Ket& b);
FidelityResult fidelity_pd(const Ket& a, const DensityOperator& b);

// Fidelity of the `keep`-marginals of two pure states, computed as the trace
// norm of the cross coefficient matrix (no square roots of near-zero
// eigenvalues, so accurate to ~1e-14 even for rank-deficient marginals).
FidelityResult marginal_fidelity_pd(const Ket& a, const Ket& b,
                                    const std::vector<std::string>& keep);

// ---- subsystem application -------------------------------------------------

// Applies the map on its domain registers (identity elsewhere) without
// materializing I (x) M. Registers renamed/dropped/appended per the map's
// codomain; untouched registers keep their positions, fresh codomain
// registers are appended in map order. Kets require an isometry unless
// `allow_nonisometry` (contraction semantics: output may be sub-normalized).
Ket apply_on(const Ket& psi, const LinearMapOnRegisters& map,
             bool allow_nonisometry = false);
DensityOperator apply_on(const DensityOperator& rho, const LinearMapOnRegisters& map);

// ---- spectral parts --------------------------------------------------------

// Projectors onto the nonnegative / negative eigenspaces of a Hermitian
// operator; the +/- zero band (1e-10 relative) goes to the positive side.
std::pair<TestOperator, TestOperator> pos_neg_parts(const RegisterSystem& sys,
                                                    const cmat& hermitian);

// ---- Uhlmann ----------------------------------------------------------------

// Both kets are pure; registers shared by name form the common part. Returns
// V mapping sigma's private registers to rho's private registers such that
// F((I (x) V)|sigma>, |rho>) = F(rho_shared, sigma_shared).
LinearMapOnRegisters uhlmann_isometry(const Ket& rho_pure, const Ket& sigma_pure);

// Same with an explicit shared set (private registers may then share names;
// identically named private registers are treated as distinct on the two
// sides).
LinearMapOnRegisters uhlmann_isometry(const Ket& rho_pure, const Ket& sigma_pure,
                                      const std::vector<std::string>& shared);

}  // namespace qsw
