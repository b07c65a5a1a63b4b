#include "qsw/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace qsw {

namespace {
constexpr Index kDenseCap = Index(1) << 13;

DensityOperator renamed_density(const DensityOperator& op,
                                const std::vector<std::string>& names) {
  std::vector<Register> regs;
  for (Index i = 0; i < op.system.size(); ++i)
    regs.push_back({names[static_cast<size_t>(i)], op.system.at(i).dim});
  return DensityOperator(RegisterSystem(regs), op.matrix);
}

Ket renamed_ket(const Ket& k, const std::vector<std::string>& names) {
  std::vector<Register> regs;
  for (Index i = 0; i < k.system.size(); ++i)
    regs.push_back({names[static_cast<size_t>(i)], k.system.at(i).dim});
  return Ket(RegisterSystem(regs), k.amps);
}
}  // namespace

std::string slot_register_name(const std::string& base, Index slot) {
  return base + std::to_string(slot);
}

double ConfusionMatrix::diagonal_average() const {
  double acc = 0.0;
  for (Index j = 1; j <= n_a; ++j)
    for (Index k = 1; k <= n_b; ++k) acc += block(j, k)(j, k);
  return acc / double(n_a * n_b);
}

DecoderBundle position_tests(const TestOperator& base,
                             const std::vector<std::string>& which_register,
                             Index n_pos, const std::string& outcome_name,
                             Index first_slot) {
  if (n_pos < 1) throw DomainError("position_tests: n_pos must be >= 1");
  base.validate();

  DecoderBundle bundle;
  bundle.base_test = base;
  bundle.n_pos = n_pos;
  bundle.first_slot = first_slot;
  bundle.position_names = which_register;
  bundle.outcome_name = outcome_name;

  std::unordered_set<std::string> moving(which_register.begin(), which_register.end());
  for (const auto& r : base.system.registers())
    if (!moving.count(r.name)) bundle.common_names.push_back(r.name);
  for (const auto& n : which_register) base.system.position(n);  // validate names

  std::vector<Register> regs;
  for (const auto& n : bundle.common_names) regs.push_back({n, base.system.dim_of(n)});
  for (Index s = first_slot; s < first_slot + n_pos; ++s)
    for (const auto& n : which_register)
      regs.push_back({slot_register_name(n, s), base.system.dim_of(n)});
  bundle.system = RegisterSystem(regs);
  if (bundle.system.total_dim() > kDenseCap)
    throw CapacityError("position_tests: lifted system exceeds the dense cap");

  for (Index s = first_slot; s < first_slot + n_pos; ++s) {
    // base test with its moving registers renamed to slot s.
    std::vector<std::string> names;
    for (const auto& r : base.system.registers())
      names.push_back(moving.count(r.name) ? slot_register_name(r.name, s) : r.name);
    std::vector<Register> slot_regs;
    for (Index i = 0; i < base.system.size(); ++i)
      slot_regs.push_back({names[static_cast<size_t>(i)], base.system.at(i).dim});
    TestOperator slot_test(RegisterSystem(slot_regs), base.matrix);
    bundle.lifted_tests.push_back(embed(slot_test, bundle.system));
  }

  cmat total = cmat::Zero(bundle.system.total_dim(), bundle.system.total_dim());
  for (const auto& t : bundle.lifted_tests) total += t.matrix;
  bundle.total = TestOperator(bundle.system, hermitize(total));

  const cmat inv_sqrt = mat_inv_sqrt_psd(bundle.total.matrix);
  const cmat supp = support_projector(bundle.total.matrix);
  const Index d = bundle.system.total_dim();
  const Index outcome_dim = n_pos + 1;

  cmat iso = cmat::Zero(d * outcome_dim, d);
  // Failure branch carries outcome 0.
  cmat fail = mat_sqrt_psd(cmat::Identity(d, d) - supp);
  for (Index row = 0; row < d; ++row)
    for (Index col = 0; col < d; ++col)
      iso(row * outcome_dim + 0, col) = fail(row, col);
  for (Index j = 1; j <= n_pos; ++j) {
    cmat tj = hermitize(inv_sqrt * bundle.lifted_tests[static_cast<size_t>(j - 1)].matrix *
                        inv_sqrt);
    cmat sq = mat_sqrt_psd(tj);
    for (Index row = 0; row < d; ++row)
      for (Index col = 0; col < d; ++col)
        iso(row * outcome_dim + j, col) = sq(row, col);
  }

  LinearMapOnRegisters map;
  for (const auto& r : bundle.system.registers()) map.domain.push_back(r);
  map.codomain = map.domain;
  map.codomain.push_back({outcome_name, outcome_dim});
  map.matrix = std::move(iso);
  map.isometry = true;
  map.validate();
  bundle.pgm_isometry = std::move(map);
  return bundle;
}

namespace {

// T-operator of decoded outcome jt for a bundle: jt = 0 is the failure
// operator I - Pi^0, otherwise Pi^{-1/2} Pi_jt Pi^{-1/2}.
std::vector<cmat> decode_povm(const DecoderBundle& bundle) {
  const Index d = bundle.system.total_dim();
  const cmat inv_sqrt = mat_inv_sqrt_psd(bundle.total.matrix);
  const cmat supp = support_projector(bundle.total.matrix);
  std::vector<cmat> povm;
  povm.push_back(cmat::Identity(d, d) - supp);
  for (Index j = 1; j <= bundle.n_pos; ++j)
    povm.push_back(hermitize(inv_sqrt *
                             bundle.lifted_tests[static_cast<size_t>(j - 1)].matrix *
                             inv_sqrt));
  return povm;
}

}  // namespace

ConfusionMatrix confusion_matrix(const Ket& psi_abmn, const DecoderBundle& bundle_a,
                                 const DecoderBundle& bundle_b,
                                 const DensityOperator& sigma_m,
                                 const DensityOperator& omega_n) {
  const Index na = bundle_a.n_pos, nb = bundle_b.n_pos;
  RegisterSystem full = bundle_a.system.concat(bundle_b.system);
  if (full.total_dim() > kDenseCap)
    throw CapacityError("confusion_matrix: dense dimension cap exceeded");

  auto povm_a = decode_povm(bundle_a);
  auto povm_b = decode_povm(bundle_b);

  // Embed every outcome operator in the joint system once.
  std::vector<cmat> ea, eb;
  for (const auto& m : povm_a)
    ea.push_back(embed(TestOperator(bundle_a.system, m), full).matrix);
  for (const auto& m : povm_b)
    eb.push_back(embed(TestOperator(bundle_b.system, m), full).matrix);

  ConfusionMatrix out;
  out.n_a = na;
  out.n_b = nb;
  out.blocks.assign(static_cast<size_t>(na * nb),
                    Eigen::MatrixXd::Zero(na + 1, nb + 1));

  for (Index j = bundle_a.first_slot; j < bundle_a.first_slot + na; ++j) {
    for (Index k = bundle_b.first_slot; k < bundle_b.first_slot + nb; ++k) {
      // Psi with M -> M_j, N -> N_k; sigma on the other slots.
      std::vector<std::string> names;
      for (const auto& r : psi_abmn.system.registers()) {
        if (std::find(bundle_a.position_names.begin(), bundle_a.position_names.end(),
                      r.name) != bundle_a.position_names.end())
          names.push_back(slot_register_name(r.name, j));
        else if (std::find(bundle_b.position_names.begin(), bundle_b.position_names.end(),
                           r.name) != bundle_b.position_names.end())
          names.push_back(slot_register_name(r.name, k));
        else
          names.push_back(r.name);
      }
      std::vector<DensityOperator> factors;
      factors.push_back(renamed_density(to_density(psi_abmn), names));
      for (Index jj = bundle_a.first_slot; jj < bundle_a.first_slot + na; ++jj)
        if (jj != j) {
          std::vector<std::string> sn;
          for (const auto& n : bundle_a.position_names) sn.push_back(slot_register_name(n, jj));
          factors.push_back(renamed_density(sigma_m, sn));
        }
      for (Index kk = bundle_b.first_slot; kk < bundle_b.first_slot + nb; ++kk)
        if (kk != k) {
          std::vector<std::string> wn;
          for (const auto& n : bundle_b.position_names) wn.push_back(slot_register_name(n, kk));
          factors.push_back(renamed_density(omega_n, wn));
        }
      DensityOperator state = tensor(factors).reordered(full.names());

      auto& blk = out.block(j - bundle_a.first_slot + 1, k - bundle_b.first_slot + 1);
      for (Index jt = 0; jt <= na; ++jt)
        for (Index kt = 0; kt <= nb; ++kt)
          blk(jt, kt) =
              (ea[static_cast<size_t>(jt)] * eb[static_cast<size_t>(kt)] * state.matrix)
                  .trace()
                  .real();
    }
  }
  return out;
}

DecodeFidelityReport decode_fidelity_check(const Ket& psi_abmn,
                           const std::vector<std::string>& a_names,
                           const std::vector<std::string>& m_names,
                           const std::vector<std::string>& b_names,
                           const std::vector<std::string>& n_names,
                           const DensityOperator& sigma_m, const DensityOperator& omega_n,
                           double eps2, Index r_a, Index r_b) {
  if (!(eps2 > 0.0 && eps2 < 1.0)) throw DomainError("decode_fidelity_check: eps2 outside (0,1)");
  DecodeFidelityReport rep;
  rep.r_a = r_a;
  rep.r_b = r_b;
  rep.bound = 1.0 - 24.0 * eps2 * eps2;

  // Base tests: optimal Neyman-Pearson witnesses at eps2^2.
  std::vector<std::string> am = a_names;
  am.insert(am.end(), m_names.begin(), m_names.end());
  std::vector<std::string> bn = b_names;
  bn.insert(bn.end(), n_names.begin(), n_names.end());

  DensityOperator psi_am = partial_trace(psi_abmn, am);
  DensityOperator psi_a = partial_trace(psi_abmn, a_names);
  DensityOperator psi_bn = partial_trace(psi_abmn, bn);
  DensityOperator psi_b = partial_trace(psi_abmn, b_names);

  DensityOperator sig = renamed_density(sigma_m, m_names);
  DensityOperator ome = renamed_density(omega_n, n_names);

  auto ta = optimal_test(psi_am, tensor(psi_a, sig).reordered(psi_am.system.names()),
                         eps2 * eps2);
  auto tb = optimal_test(psi_bn, tensor(psi_b, ome).reordered(psi_bn.system.names()),
                         eps2 * eps2);
  rep.dh_a = ta.value;
  rep.dh_b = tb.value;
  rep.precondition_a = double(r_a) <= rep.dh_a + 2.0 * std::log2(eps2) + 1e-9;
  rep.precondition_b = double(r_b) <= rep.dh_b + 2.0 * std::log2(eps2) + 1e-9;

  const Index na = Index(1) << r_a;
  const Index nb = Index(1) << r_b;
  DecoderBundle bundle_a = position_tests(*ta.witness, m_names, na, "J2p");
  DecoderBundle bundle_b = position_tests(*tb.witness, n_names, nb, "K2p");

  {
    // Pure-state workspace: position registers, slot copies with purifiers
    // (purifier rank <= slot dimension) and both outcome registers.
    const double dm = double(psi_abmn.system.dim_of(m_names));
    const double dn = double(psi_abmn.system.dim_of(n_names));
    const double log_dim = std::log2(double(na * nb)) +
                           std::log2(double((na + 1) * (nb + 1))) +
                           std::log2(double(psi_abmn.system.total_dim()) / (dm * dn)) +
                           2.0 * double(na) * std::log2(dm) +
                           2.0 * double(nb) * std::log2(dn);
    if (log_dim > 17.0 + 1e-9)
      throw CapacityError("decode_fidelity_check: copy counts exceed the dense cap");
  }

  // mu^(2): superposition over the true slot (j,k) with purified dummies.
  Ket sigma_pur = purify(sig, "__sp");
  Ket omega_pur = purify(ome, "__op");
  const Index rs = sigma_pur.system.dim_of("__sp");
  const Index ro = omega_pur.system.dim_of("__op");

  // Canonical register order for the big pure state.
  std::vector<Register> order_regs;
  order_regs.push_back({"J2", na});
  order_regs.push_back({"K2", nb});
  for (const auto& n : a_names) order_regs.push_back({n, psi_abmn.system.dim_of(n)});
  for (const auto& n : b_names) order_regs.push_back({n, psi_abmn.system.dim_of(n)});
  for (Index s = 1; s <= na; ++s)
    for (const auto& n : m_names)
      order_regs.push_back({slot_register_name(n, s), psi_abmn.system.dim_of(n)});
  for (Index s = 1; s <= na; ++s)
    order_regs.push_back({slot_register_name("__sp", s), rs});
  for (Index s = 1; s <= nb; ++s)
    for (const auto& n : n_names)
      order_regs.push_back({slot_register_name(n, s), psi_abmn.system.dim_of(n)});
  for (Index s = 1; s <= nb; ++s)
    order_regs.push_back({slot_register_name("__op", s), ro});
  RegisterSystem big(order_regs);

  cvec mu2 = cvec::Zero(big.total_dim());
  const double w = 1.0 / std::sqrt(double(na * nb));
  for (Index j = 1; j <= na; ++j) {
    for (Index k = 1; k <= nb; ++k) {
      std::vector<Ket> factors;
      factors.push_back(Ket::basis(RegisterSystem::single("J2", na), j - 1));
      factors.push_back(Ket::basis(RegisterSystem::single("K2", nb), k - 1));
      {
        std::vector<std::string> names;
        for (const auto& r : psi_abmn.system.registers()) {
          if (std::find(m_names.begin(), m_names.end(), r.name) != m_names.end())
            names.push_back(slot_register_name(r.name, j));
          else if (std::find(n_names.begin(), n_names.end(), r.name) != n_names.end())
            names.push_back(slot_register_name(r.name, k));
          else
            names.push_back(r.name);
        }
        factors.push_back(renamed_ket(psi_abmn, names));
      }
      factors.push_back(Ket::basis(RegisterSystem::single(slot_register_name("__sp", j), rs), 0));
      for (Index s = 1; s <= na; ++s)
        if (s != j) {
          std::vector<std::string> names;
          for (const auto& n : m_names) names.push_back(slot_register_name(n, s));
          names.push_back(slot_register_name("__sp", s));
          factors.push_back(renamed_ket(sigma_pur, names));
        }
      factors.push_back(
          Ket::basis(RegisterSystem::single(slot_register_name("__op", k), ro), 0));
      for (Index s = 1; s <= nb; ++s)
        if (s != k) {
          std::vector<std::string> names;
          for (const auto& n : n_names) names.push_back(slot_register_name(n, s));
          names.push_back(slot_register_name("__op", s));
          factors.push_back(renamed_ket(omega_pur, names));
        }
      Ket term = tensor(factors).reordered(big.names());
      mu2 += w * term.amps;
    }
  }
  Ket mu2_ket(big, std::move(mu2));

  Ket mu3 = apply_on(apply_on(mu2_ket, bundle_a.pgm_isometry), bundle_b.pgm_isometry);

  // mu^(4): the ideal decode, with outcome registers correlated to (J2,K2).
  cvec mu4 = cvec::Zero(mu3.system.total_dim());
  {
    const RegisterSystem& sys = mu3.system;
    std::vector<Index> digits;
    for (Index idx = 0; idx < mu2_ket.amps.size(); ++idx) {
      if (mu2_ket.amps(idx) == cplx(0.0)) continue;
      big.digits_of(idx, digits);
      const Index j = digits[0] + 1;  // J2 is register 0 of `big`
      const Index k = digits[1] + 1;
      // Extend with outcome digits j, k (appended registers).
      std::vector<Index> full_digits;
      for (const auto& r : sys.registers()) {
        if (r.name == "J2p")
          full_digits.push_back(j);
        else if (r.name == "K2p")
          full_digits.push_back(k);
        else
          full_digits.push_back(digits[static_cast<size_t>(big.position(r.name))]);
      }
      mu4(sys.flat_of(full_digits)) = mu2_ket.amps(idx);
    }
  }
  Ket mu4_ket(mu3.system, std::move(mu4));

  const double f = std::abs(mu3.amps.dot(mu4_ket.amps));
  rep.f2 = f * f;

  rep.confusion = confusion_matrix(psi_abmn, bundle_a, bundle_b, sigma_m, omega_n);
  rep.diag_lower = rep.confusion.diagonal_average();
  rep.wrong_decode_mass = rep.confusion.row_sum(1, 1) - rep.confusion.block(1, 1)(1, 1);
  rep.chain_bound = 4.0 * eps2 * eps2 + 4.0 * std::exp2(double(r_a) - rep.dh_a) +
                    4.0 * std::exp2(double(r_b) - rep.dh_b);

  if (rep.precondition_a && rep.precondition_b && rep.f2 < rep.bound - 1e-7)
    throw NumericalError("decode_fidelity_check: fidelity bound violated");
  return rep;
}

double hayashi_nagaoka_residual(const cmat& s, const cmat& t) {
  if (s.rows() != s.cols() || t.rows() != t.cols() || s.rows() != t.rows())
    throw ShapeError("hayashi_nagaoka_residual: shape mismatch");
  const Index d = s.rows();
  const cmat id = cmat::Identity(d, d);
  const cmat inv_sqrt = mat_inv_sqrt_psd(hermitize(s + t));
  const cmat middle = id - inv_sqrt * s * inv_sqrt;
  const cmat residual = hermitize(2.0 * (id - s) + 4.0 * t - middle);
  return min_eig_herm(residual);
}

}  // namespace qsw
