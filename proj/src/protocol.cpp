#include "qsw/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace qsw {

namespace {

std::string pur_name(const std::string& base, Index i) {
  return base + "p" + std::to_string(i);
}

Index ceil_of(double x) { return static_cast<Index>(std::ceil(x - 1e-9)); }

// ---- ket surgery helpers ----------------------------------------------------

Ket attach_basis(const Ket& psi, const Register& reg, Index value) {
  RegisterSystem sys = psi.system.concat(RegisterSystem::single(reg.name, reg.dim));
  cvec out = cvec::Zero(sys.total_dim());
  for (Index i = 0; i < psi.amps.size(); ++i) out(i * reg.dim + value) = psi.amps(i);
  return Ket(std::move(sys), std::move(out));
}

// Removes register `name`, keeping only the components with digit == value
// (the adjoint of attach_basis; norm may drop).
Ket contract_basis(const Ket& psi, const std::string& name, Index value) {
  const RegisterSystem& sys = psi.system;
  const Index pos = sys.position(name);
  const Index stride = sys.stride(pos);
  const Index dim = sys.at(pos).dim;
  std::vector<Register> regs;
  for (Index i = 0; i < sys.size(); ++i)
    if (i != pos) regs.push_back(sys.at(i));
  RegisterSystem rest(regs);
  cvec out = cvec::Zero(rest.total_dim());
  for (Index i = 0; i < psi.amps.size(); ++i) {
    if ((i / stride) % dim != value) continue;
    out((i / (stride * dim)) * stride + i % stride) = psi.amps(i);
  }
  return Ket(std::move(rest), std::move(out));
}

// Coherent copy |j>_src -> |j>_src |j>_copy (appended register).
Ket attach_copy(const Ket& psi, const std::string& src, const std::string& copy_name) {
  const Index pos = psi.system.position(src);
  const Index stride = psi.system.stride(pos);
  const Index dim = psi.system.at(pos).dim;
  RegisterSystem sys = psi.system.concat(RegisterSystem::single(copy_name, dim));
  cvec out = cvec::Zero(sys.total_dim());
  for (Index i = 0; i < psi.amps.size(); ++i)
    out(i * dim + (i / stride) % dim) = psi.amps(i);
  return Ket(std::move(sys), std::move(out));
}

// Adjoint of attach_copy: keeps components with copy digit == src digit.
Ket contract_copy(const Ket& psi, const std::string& src, const std::string& copy_name) {
  const RegisterSystem& sys = psi.system;
  const Index spos = sys.position(src);
  const Index cpos = sys.position(copy_name);
  const Index sstride = sys.stride(spos), cstride = sys.stride(cpos);
  const Index dim = sys.at(spos).dim;
  std::vector<Register> regs;
  for (Index i = 0; i < sys.size(); ++i)
    if (i != cpos) regs.push_back(sys.at(i));
  RegisterSystem rest(regs);
  cvec out = cvec::Zero(rest.total_dim());
  for (Index i = 0; i < psi.amps.size(); ++i) {
    if ((i / cstride) % dim != (i / sstride) % dim) continue;
    out((i / (cstride * dim)) * cstride + i % cstride) = psi.amps(i);
  }
  return Ket(std::move(rest), std::move(out));
}

// Applies maps[c] on the component with control digit c (the maps must share
// output layout, e.g. per-block decoders writing the same outcome register).
Ket apply_block_controlled(const Ket& psi, const std::string& control,
                           const std::vector<LinearMapOnRegisters>& maps,
                           bool use_adjoint) {
  const Index cpos = psi.system.position(control);
  const Index stride = psi.system.stride(cpos);
  const Index dim = psi.system.at(cpos).dim;
  if (static_cast<Index>(maps.size()) != dim)
    throw ShapeError("apply_block_controlled: need one map per control value");
  Ket out;
  bool first = true;
  for (Index c = 0; c < dim; ++c) {
    Ket slice = psi;
    for (Index i = 0; i < slice.amps.size(); ++i)
      if ((i / stride) % dim != c) slice.amps(i) = 0.0;
    Ket applied = apply_on(slice,
                           use_adjoint ? maps[static_cast<size_t>(c)].adjoint()
                                       : maps[static_cast<size_t>(c)],
                           /*allow_nonisometry=*/true);
    if (first) {
      out = applied;
      first = false;
    } else {
      out.amps += applied.amps;
    }
  }
  return out;
}

// Controlled SWAP of the target register with slot (block * 2^pos_exp + outcome);
// outcome 0 (decode failure) leaves the state untouched. Self-inverse.
Ket controlled_swap_into(const Ket& psi, const std::string& block_control,
                         const std::string& outcome, const std::string& target,
                         const std::string& slot_base, Index pos_exp) {
  const RegisterSystem& sys = psi.system;
  const Index pb = sys.position(block_control);
  const Index po = sys.position(outcome);
  const Index pt = sys.position(target);
  const Index n_per_block = Index(1) << pos_exp;
  const Index blocks = sys.at(pb).dim;
  std::vector<Index> slot_pos(static_cast<size_t>(blocks * n_per_block + 1), -1);
  for (Index j = 1; j <= blocks * n_per_block; ++j)
    slot_pos[static_cast<size_t>(j)] = sys.position(slot_register_name(slot_base, j));

  cvec out = cvec::Zero(psi.amps.size());
  std::vector<Index> digits;
  for (Index i = 0; i < psi.amps.size(); ++i) {
    if (psi.amps(i) == cplx(0.0)) continue;
    sys.digits_of(i, digits);
    const Index o = digits[static_cast<size_t>(po)];
    if (o == 0) {
      out(i) += psi.amps(i);
      continue;
    }
    const Index j = digits[static_cast<size_t>(pb)] * n_per_block + o;
    std::swap(digits[static_cast<size_t>(pt)],
              digits[static_cast<size_t>(slot_pos[static_cast<size_t>(j)])]);
    out(sys.flat_of(digits)) += psi.amps(i);
  }
  return Ket(sys, std::move(out));
}

// Partial inner product <part| big>: contracts part's registers away.
Ket contract_against(const Ket& big, const Ket& part) {
  std::vector<Index> sub_pos;
  std::vector<std::string> induced;
  for (const auto& r : big.system.registers())
    if (part.system.has(r.name)) {
      sub_pos.push_back(big.system.position(r.name));
      induced.push_back(r.name);
    }
  Ket aligned = part.reordered(induced);

  // Offsets for the (part, rest) split of big.
  std::vector<Register> rest_regs;
  std::vector<Index> rest_pos;
  {
    std::vector<char> in_sub(static_cast<size_t>(big.system.size()), 0);
    for (Index p : sub_pos) in_sub[static_cast<size_t>(p)] = 1;
    for (Index i = 0; i < big.system.size(); ++i)
      if (!in_sub[static_cast<size_t>(i)]) {
        rest_regs.push_back(big.system.at(i));
        rest_pos.push_back(i);
      }
  }
  RegisterSystem rest(rest_regs);

  std::vector<Index> sub_offsets(static_cast<size_t>(aligned.system.total_dim()));
  std::vector<Index> rest_offsets(static_cast<size_t>(rest.total_dim()));
  std::vector<Index> digits;
  for (Index i = 0; i < aligned.system.total_dim(); ++i) {
    aligned.system.digits_of(i, digits);
    Index off = 0;
    for (size_t k = 0; k < digits.size(); ++k) off += digits[k] * big.system.stride(sub_pos[k]);
    sub_offsets[static_cast<size_t>(i)] = off;
  }
  for (Index i = 0; i < rest.total_dim(); ++i) {
    rest.digits_of(i, digits);
    Index off = 0;
    for (size_t k = 0; k < digits.size(); ++k) off += digits[k] * big.system.stride(rest_pos[k]);
    rest_offsets[static_cast<size_t>(i)] = off;
  }

  cvec out = cvec::Zero(rest.total_dim());
  for (Index t = 0; t < aligned.system.total_dim(); ++t) {
    const cplx w = std::conj(aligned.amps(t));
    if (w == cplx(0.0)) continue;
    const Index ot = sub_offsets[static_cast<size_t>(t)];
    for (Index r = 0; r < rest.total_dim(); ++r)
      out(r) += w * big.amps(ot + rest_offsets[static_cast<size_t>(r)]);
  }
  return Ket(rest, std::move(out));
}

// ---- plan -------------------------------------------------------------------

struct Plan {
  const ProtocolInstance* inst = nullptr;
  Index block_a = 0, pos_a = 0, block_b = 0, pos_b = 0;  // exponents
  Index na = 1, nb = 1;  // total slots per side
  Ket xi, mu;
  LinearMapOnRegisters v_prime;
  std::vector<LinearMapOnRegisters> pgm_a, pgm_b;  // one per block
  double dh_a = 0.0, dh_b = 0.0;
};

Ket psi_with_slot_names(const ProtocolInstance& inst, Index j, Index k) {
  std::vector<std::string> names;
  for (const auto& r : inst.psi.system.registers()) {
    if (r.name == inst.reg_m)
      names.push_back(slot_register_name(inst.reg_m, j));
    else if (r.name == inst.reg_n)
      names.push_back(slot_register_name(inst.reg_n, k));
    else
      names.push_back(r.name);
  }
  return with_names(inst.psi, names);
}

Plan build_plan(const ProtocolInstance& inst, const Certificate& cert,
                const RunOptions& opts) {
  inst.validate();
  Plan plan;
  plan.inst = &inst;
  plan.block_a = opts.block_exp_a.value_or(cert.R_a);
  plan.block_b = opts.block_exp_b.value_or(cert.R_b);
  plan.pos_a = opts.pos_exp_a.value_or(cert.r_a);
  plan.pos_b = opts.pos_exp_b.value_or(cert.r_b);
  plan.na = Index(1) << (plan.block_a + plan.pos_a);
  plan.nb = Index(1) << (plan.block_b + plan.pos_b);

  const Index dm = inst.psi.system.dim_of(inst.reg_m);
  const Index dn = inst.psi.system.dim_of(inst.reg_n);
  DensityOperator sig = with_names(inst.sigma_m, {inst.reg_m});
  DensityOperator ome = with_names(inst.omega_n, {inst.reg_n});
  Ket sig_pur = purify(sig, "sp");
  Ket ome_pur = purify(ome, "op");
  const Index rs = sig_pur.system.dim_of("sp");
  const Index ro = ome_pur.system.dim_of("op");

  {
    double log_dim = std::log2(double(inst.psi.system.total_dim())) +
                     double(plan.na) * std::log2(double(dm * rs)) +
                     double(plan.nb) * std::log2(double(dn * ro));
    if (log_dim > 14.0 + 1e-9)
      throw CapacityError("run_task2: dense ket cap (2^14) exceeded; override rates downward");
    if (plan.na * plan.nb < dm * dn)
      throw CapacityError("run_task2: position count too small for the Uhlmann embedding");
  }

  // xi = Psi x (sigma purifications) x (omega purifications).
  {
    std::vector<Ket> factors{inst.psi};
    for (Index i = 1; i <= plan.na; ++i) {
      Ket p = purify(with_names(inst.sigma_m, {slot_register_name(inst.reg_m, i)}),
                     pur_name(inst.reg_m, i));
      factors.push_back(p);
    }
    for (Index k = 1; k <= plan.nb; ++k) {
      Ket p = purify(with_names(inst.omega_n, {slot_register_name(inst.reg_n, k)}),
                     pur_name(inst.reg_n, k));
      factors.push_back(p);
    }
    std::vector<std::string> order;
    for (const auto& r : inst.psi.system.registers()) order.push_back(r.name);
    for (Index i = 1; i <= plan.na; ++i) order.push_back(slot_register_name(inst.reg_m, i));
    for (Index i = 1; i <= plan.na; ++i) order.push_back(pur_name(inst.reg_m, i));
    for (Index k = 1; k <= plan.nb; ++k) order.push_back(slot_register_name(inst.reg_n, k));
    for (Index k = 1; k <= plan.nb; ++k) order.push_back(pur_name(inst.reg_n, k));
    plan.xi = tensor(factors).reordered(order);
  }

  // mu: the convex-combination purification with position registers.
  {
    std::vector<Register> regs;
    regs.push_back({inst.reg_r, inst.psi.system.dim_of(inst.reg_r)});
    regs.push_back({inst.reg_a, inst.psi.system.dim_of(inst.reg_a)});
    regs.push_back({inst.reg_b, inst.psi.system.dim_of(inst.reg_b)});
    regs.push_back({inst.reg_c, inst.psi.system.dim_of(inst.reg_c)});
    regs.push_back({"J1", Index(1) << plan.block_a});
    regs.push_back({"J2", Index(1) << plan.pos_a});
    regs.push_back({"K1", Index(1) << plan.block_b});
    regs.push_back({"K2", Index(1) << plan.pos_b});
    for (Index i = 1; i <= plan.na; ++i)
      regs.push_back({slot_register_name(inst.reg_m, i), dm});
    for (Index i = 1; i <= plan.na; ++i) regs.push_back({pur_name(inst.reg_m, i), rs});
    for (Index k = 1; k <= plan.nb; ++k)
      regs.push_back({slot_register_name(inst.reg_n, k), dn});
    for (Index k = 1; k <= plan.nb; ++k) regs.push_back({pur_name(inst.reg_n, k), ro});
    RegisterSystem big(regs);

    cvec amps = cvec::Zero(big.total_dim());
    const double w = 1.0 / std::sqrt(double(plan.na * plan.nb));
    for (Index j = 1; j <= plan.na; ++j) {
      for (Index k = 1; k <= plan.nb; ++k) {
        const Index j1 = (j - 1) >> plan.pos_a;         // block digit
        const Index j2 = (j - 1) & ((Index(1) << plan.pos_a) - 1);
        const Index k1 = (k - 1) >> plan.pos_b;
        const Index k2 = (k - 1) & ((Index(1) << plan.pos_b) - 1);
        std::vector<Ket> factors;
        factors.push_back(psi_with_slot_names(inst, j, k));
        factors.push_back(Ket::basis(RegisterSystem::single("J1", Index(1) << plan.block_a), j1));
        factors.push_back(Ket::basis(RegisterSystem::single("J2", Index(1) << plan.pos_a), j2));
        factors.push_back(Ket::basis(RegisterSystem::single("K1", Index(1) << plan.block_b), k1));
        factors.push_back(Ket::basis(RegisterSystem::single("K2", Index(1) << plan.pos_b), k2));
        factors.push_back(
            Ket::basis(RegisterSystem::single(pur_name(inst.reg_m, j), rs), 0));
        for (Index i = 1; i <= plan.na; ++i)
          if (i != j) {
            Ket p = purify(with_names(inst.sigma_m, {slot_register_name(inst.reg_m, i)}),
                           pur_name(inst.reg_m, i));
            factors.push_back(p);
          }
        factors.push_back(
            Ket::basis(RegisterSystem::single(pur_name(inst.reg_n, k), ro), 0));
        for (Index i = 1; i <= plan.nb; ++i)
          if (i != k) {
            Ket p = purify(with_names(inst.omega_n, {slot_register_name(inst.reg_n, i)}),
                           pur_name(inst.reg_n, i));
            factors.push_back(p);
          }
        amps += w * tensor(factors).reordered(big.names()).amps;
      }
    }
    plan.mu = Ket(big, std::move(amps));
  }

  // Uhlmann isometry V' : (M, N, C, purifiers) -> (C, J's, K's, purifiers).
  {
    std::vector<std::string> shared{inst.reg_r, inst.reg_a, inst.reg_b};
    for (Index i = 1; i <= plan.na; ++i) shared.push_back(slot_register_name(inst.reg_m, i));
    for (Index k = 1; k <= plan.nb; ++k) shared.push_back(slot_register_name(inst.reg_n, k));
    plan.v_prime = uhlmann_isometry(plan.mu, plan.xi, shared);
  }

  // Per-block decode bundles from the Neyman-Pearson witnesses.
  {
    DensityOperator psi_am = partial_trace(inst.psi, {inst.reg_a, inst.reg_m});
    DensityOperator psi_a = partial_trace(inst.psi, {inst.reg_a});
    DensityOperator sig_named = with_names(inst.sigma_m, {inst.reg_m});
    auto ta = optimal_test(
        psi_am, tensor(psi_a, sig_named).reordered(psi_am.system.names()),
        inst.eps2 * inst.eps2);
    plan.dh_a = ta.value;
    DensityOperator psi_bn = partial_trace(inst.psi, {inst.reg_b, inst.reg_n});
    DensityOperator psi_b = partial_trace(inst.psi, {inst.reg_b});
    DensityOperator ome_named = with_names(inst.omega_n, {inst.reg_n});
    auto tb = optimal_test(
        psi_bn, tensor(psi_b, ome_named).reordered(psi_bn.system.names()),
        inst.eps2 * inst.eps2);
    plan.dh_b = tb.value;

    const Index per_block_a = Index(1) << plan.pos_a;
    for (Index b = 0; b < (Index(1) << plan.block_a); ++b) {
      DecoderBundle bundle = position_tests(*ta.witness, {inst.reg_m}, per_block_a,
                                            "J2p", b * per_block_a + 1);
      plan.pgm_a.push_back(bundle.pgm_isometry);
    }
    const Index per_block_b = Index(1) << plan.pos_b;
    for (Index b = 0; b < (Index(1) << plan.block_b); ++b) {
      DecoderBundle bundle = position_tests(*tb.witness, {inst.reg_n}, per_block_b,
                                            "K2p", b * per_block_b + 1);
      plan.pgm_b.push_back(bundle.pgm_isometry);
    }
  }
  return plan;
}

// The ideal decoded state: outcome registers pinned to the position digits.
Ket ideal_decode(const Ket& mu2, Index pos_exp_a, Index pos_exp_b) {
  RegisterSystem sys =
      mu2.system.concat(RegisterSystem::single("J2p", (Index(1) << pos_exp_a) + 1))
          .concat(RegisterSystem::single("K2p", (Index(1) << pos_exp_b) + 1));
  const Index dj = (Index(1) << pos_exp_a) + 1;
  const Index dk = (Index(1) << pos_exp_b) + 1;
  const Index pj = mu2.system.position("J2");
  const Index pk = mu2.system.position("K2");
  const Index sj = mu2.system.stride(pj), dimj = mu2.system.at(pj).dim;
  const Index sk = mu2.system.stride(pk), dimk = mu2.system.at(pk).dim;
  cvec out = cvec::Zero(sys.total_dim());
  for (Index i = 0; i < mu2.amps.size(); ++i) {
    if (mu2.amps(i) == cplx(0.0)) continue;
    const Index j2 = (i / sj) % dimj;
    const Index k2 = (i / sk) % dimk;
    out((i * dj + (j2 + 1)) * dk + (k2 + 1)) = mu2.amps(i);
  }
  return Ket(std::move(sys), std::move(out));
}

Ket theta_display(const std::string& c1, const std::string& c2, const std::string& o1,
                  const std::string& o2, const std::string& slot_base, Index block_exp,
                  Index pos_exp, const DensityOperator& ref_state, Index target_dim,
                  const std::string& pur_base, Index pur_dim) {
  const Index blocks = Index(1) << block_exp;
  const Index per = Index(1) << pos_exp;
  const Index n = blocks * per;
  std::vector<Register> regs;
  regs.push_back({c1, blocks});
  regs.push_back({c2, per});
  regs.push_back({o1, blocks});
  regs.push_back({o2, per + 1});
  for (Index i = 1; i <= n; ++i) regs.push_back({slot_register_name(slot_base, i), target_dim});
  for (Index i = 1; i <= n; ++i) regs.push_back({pur_name(pur_base, i), pur_dim});
  RegisterSystem sys(regs);

  cvec amps = cvec::Zero(sys.total_dim());
  const double w = 1.0 / std::sqrt(double(n));
  for (Index j = 1; j <= n; ++j) {
    const Index j1 = (j - 1) >> pos_exp;
    const Index j2 = (j - 1) & (per - 1);
    std::vector<Ket> factors;
    factors.push_back(Ket::basis(RegisterSystem::single(c1, blocks), j1));
    factors.push_back(Ket::basis(RegisterSystem::single(c2, per), j2));
    factors.push_back(Ket::basis(RegisterSystem::single(o1, blocks), j1));
    factors.push_back(Ket::basis(RegisterSystem::single(o2, per + 1), j2 + 1));
    factors.push_back(
        Ket::basis(RegisterSystem::single(slot_register_name(slot_base, j), target_dim), 0));
    factors.push_back(Ket::basis(RegisterSystem::single(pur_name(pur_base, j), pur_dim), 0));
    for (Index i = 1; i <= n; ++i)
      if (i != j) {
        Ket p = purify(with_names(ref_state, {slot_register_name(slot_base, i)}),
                       pur_name(pur_base, i));
        factors.push_back(p);
      }
    amps += w * tensor(factors).reordered(sys.names()).amps;
  }
  return Ket(sys, std::move(amps));
}

struct ForwardResult {
  Transcript transcript;
  Ket phi;
  Ket theta1, theta2;  // optimized entanglement states
  Plan plan;
};

ForwardResult forward_run(const ProtocolInstance& inst, const Certificate& cert,
                          const RunOptions& opts) {
  ForwardResult res;
  res.plan = build_plan(inst, cert, opts);
  Plan& plan = res.plan;
  Transcript& tr = res.transcript;
  tr.block_exp_a = plan.block_a;
  tr.block_exp_b = plan.block_b;
  tr.pos_exp_a = plan.pos_a;
  tr.pos_exp_b = plan.pos_b;
  tr.rates_overridden = opts.block_exp_a || opts.block_exp_b || opts.pos_exp_a ||
                        opts.pos_exp_b;
  tr.qubit_cost_a = double(plan.block_a) / 2.0;
  tr.qubit_cost_b = double(plan.block_b) / 2.0;

  // Step 2: Uhlmann isometry.
  Ket xi_prime = apply_on(plan.xi, plan.v_prime, true);
  Ket mu_aligned = plan.mu.reordered(xi_prime.system.names());
  auto fsplit = fidelity_pd(xi_prime, mu_aligned);
  tr.gap_split = fsplit.purified_distance;
  tr.f_split = fsplit.fidelity;
  {
    std::vector<std::string> shared{inst.reg_r, inst.reg_a, inst.reg_b};
    for (Index i = 1; i <= plan.na; ++i) shared.push_back(slot_register_name(inst.reg_m, i));
    for (Index k = 1; k <= plan.nb; ++k) shared.push_back(slot_register_name(inst.reg_n, k));
    tr.f_split_marginal = marginal_fidelity_pd(plan.xi, plan.mu, shared).fidelity;
  }

  // Ideal branch: steps 3-4 on mu give the decode gap.
  {
    Ket mu2 = attach_copy(attach_copy(plan.mu, "J1", "J1p"), "K1", "K1p");
    Ket mu3 = apply_block_controlled(mu2, "J1p", plan.pgm_a, false);
    mu3 = apply_block_controlled(mu3, "K1p", plan.pgm_b, false);
    Ket mu4 = ideal_decode(mu2, plan.pos_a, plan.pos_b);
    tr.gap_decode = fidelity_pd(mu3, mu4).purified_distance;
  }

  // Steps 3-5 on the actual state.
  Ket state = attach_copy(attach_copy(xi_prime, "J1", "J1p"), "K1", "K1p");
  state = apply_block_controlled(state, "J1p", plan.pgm_a, false);
  state = apply_block_controlled(state, "K1p", plan.pgm_b, false);
  state = attach_basis(state, {inst.reg_m, inst.psi.system.dim_of(inst.reg_m)}, 0);
  state = controlled_swap_into(state, "J1p", "J2p", inst.reg_m, inst.reg_m, plan.pos_a);
  state = attach_basis(state, {inst.reg_n, inst.psi.system.dim_of(inst.reg_n)}, 0);
  state = controlled_swap_into(state, "K1p", "K2p", inst.reg_n, inst.reg_n, plan.pos_b);
  res.phi = state;

  // Closed-form theta' candidates (the ideal output entanglement).
  Ket theta1 = theta_display("J1", "J2", "J1p", "J2p", inst.reg_m, plan.block_a,
                             plan.pos_a, with_names(inst.sigma_m, {inst.reg_m}),
                             inst.psi.system.dim_of(inst.reg_m), inst.reg_m,
                             plan.xi.system.dim_of(pur_name(inst.reg_m, 1)));
  Ket theta2 = theta_display("K1", "K2", "K1p", "K2p", inst.reg_n, plan.block_b,
                             plan.pos_b, with_names(inst.omega_n, {inst.reg_n}),
                             inst.psi.system.dim_of(inst.reg_n), inst.reg_n,
                             plan.xi.system.dim_of(pur_name(inst.reg_n, 1)));

  auto overlap_with = [&](const Ket& t1, const Ket& t2) {
    Ket target = tensor(tensor(inst.psi, t1), t2).reordered(res.phi.system.names());
    return fidelity_pd(res.phi, target);
  };
  tr.final_p_display = overlap_with(theta1, theta2).purified_distance;

  // Alternating Uhlmann refinement of the product entanglement state.
  for (int round = 0; round < opts.theta_opt_rounds; ++round) {
    Ket v1 = contract_against(res.phi, tensor(inst.psi, theta2));
    const double n1 = v1.norm();
    if (n1 > 1e-14) {
      v1.amps /= n1;
      theta1 = v1.reordered(theta1.system.names());
    }
    Ket v2 = contract_against(res.phi, tensor(inst.psi, theta1));
    const double n2 = v2.norm();
    if (n2 > 1e-14) {
      v2.amps /= n2;
      theta2 = v2.reordered(theta2.system.names());
    }
  }
  tr.final_p = overlap_with(theta1, theta2).purified_distance;
  tr.chain_bound = tr.gap_split + tr.gap_decode;
  res.theta1 = theta1;
  res.theta2 = theta2;

  // Party bookkeeping.
  tr.owners[inst.reg_r] = "Reference";
  tr.owners[inst.reg_a] = "Alice";
  tr.owners[inst.reg_b] = "Bob";
  tr.owners[inst.reg_c] = "Charlie";
  tr.owners[inst.reg_m] = "Alice";
  tr.owners[inst.reg_n] = "Bob";
  for (Index i = 1; i <= plan.na; ++i) {
    tr.owners[slot_register_name(inst.reg_m, i)] = "Alice";
    tr.owners[pur_name(inst.reg_m, i)] = "Charlie";
  }
  for (Index k = 1; k <= plan.nb; ++k) {
    tr.owners[slot_register_name(inst.reg_n, k)] = "Bob";
    tr.owners[pur_name(inst.reg_n, k)] = "Charlie";
  }
  tr.owners["J1"] = tr.owners["J2"] = tr.owners["K1"] = tr.owners["K2"] = "Charlie";
  tr.owners["J1p"] = tr.owners["J2p"] = "Alice";
  tr.owners["K1p"] = tr.owners["K2p"] = "Bob";
  return res;
}

}  // namespace

// ---- public interface ---------------------------------------------------------

void ProtocolInstance::validate() const {
  psi.validate();
  for (const auto& n : {reg_r, reg_a, reg_m, reg_b, reg_n, reg_c}) psi.system.position(n);
  if (sigma_m.system.total_dim() != psi.system.dim_of(reg_m))
    throw ShapeError("protocol: sigma_M dimension mismatch");
  if (omega_n.system.total_dim() != psi.system.dim_of(reg_n))
    throw ShapeError("protocol: omega_N dimension mismatch");
  if (!(eps1 > 0 && eps1 < 1 && eps2 > 0 && eps2 < 1 && delta > 0 && delta < 1))
    throw DomainError("protocol: error parameters outside (0,1)");
  if (psi_prime) {
    DensityOperator marg = partial_trace(
        psi, {reg_r, reg_a, reg_b, reg_m, reg_n});
    DensityOperator pm =
        partial_trace(*psi_prime, {reg_r, reg_a, reg_b, reg_m, reg_n});
    if (fidelity_pd(marg, pm.reordered(marg.system.names())).purified_distance >
        eps1 + 1e-9)
      throw DomainError("protocol: P(psi', psi) exceeds eps1");
  }
}

DensityOperator ProtocolInstance::psi_prime_or_default() const {
  if (psi_prime) return *psi_prime;
  return partial_trace(psi, {reg_r, reg_a, reg_b, reg_m, reg_n});
}

Certificate plan_rates(const ProtocolInstance& inst) {
  inst.validate();
  Certificate cert;
  DensityOperator rho_rab = partial_trace(inst.psi, {inst.reg_r, inst.reg_a, inst.reg_b});
  DensityOperator psi_p = inst.psi_prime_or_default();
  DensityOperator sig = with_names(inst.sigma_m, {inst.reg_m});
  DensityOperator ome = with_names(inst.omega_n, {inst.reg_n});

  auto dmax_against = [&](const std::vector<std::string>& keep,
                          const std::vector<DensityOperator>& ref_factors) {
    DensityOperator lhs = partial_trace(psi_p, keep);
    DensityOperator rhs = tensor(ref_factors).reordered(lhs.system.names());
    return dmax(lhs, rhs).value;
  };
  cert.dmax_terms[0] = dmax_against({inst.reg_r, inst.reg_a, inst.reg_b, inst.reg_m},
                                    {rho_rab, sig});
  cert.dmax_terms[1] = dmax_against({inst.reg_r, inst.reg_a, inst.reg_b, inst.reg_n},
                                    {rho_rab, ome});
  cert.dmax_terms[2] = dmax_against(
      {inst.reg_r, inst.reg_a, inst.reg_b, inst.reg_m, inst.reg_n}, {rho_rab, sig, ome});

  {
    DensityOperator psi_am = partial_trace(inst.psi, {inst.reg_a, inst.reg_m});
    DensityOperator psi_a = partial_trace(inst.psi, {inst.reg_a});
    cert.dh_terms[0] =
        optimal_test(psi_am, tensor(psi_a, sig).reordered(psi_am.system.names()),
                     inst.eps2 * inst.eps2)
            .value;
    DensityOperator psi_bn = partial_trace(inst.psi, {inst.reg_b, inst.reg_n});
    DensityOperator psi_b = partial_trace(inst.psi, {inst.reg_b});
    cert.dh_terms[1] =
        optimal_test(psi_bn, tensor(psi_b, ome).reordered(psi_bn.system.names()),
                     inst.eps2 * inst.eps2)
            .value;
  }

  const double log_eps_delta = std::log2(1.0 / (inst.eps2 * inst.eps2 * inst.delta));
  const double log_delta = std::log2(1.0 / inst.delta);

  const double r_a_raw = cert.dh_terms[0] + 2.0 * std::log2(inst.eps2);
  const double r_b_raw = cert.dh_terms[1] + 2.0 * std::log2(inst.eps2);
  cert.r_a = std::max<Index>(0, static_cast<Index>(std::floor(r_a_raw + 1e-12)));
  cert.r_b = std::max<Index>(0, static_cast<Index>(std::floor(r_b_raw + 1e-12)));
  cert.r_a_clamped = r_a_raw < 0.0;
  cert.r_b_clamped = r_b_raw < 0.0;

  const double half_la =
      0.5 * (cert.dmax_terms[0] - cert.dh_terms[0] + log_eps_delta);
  const double half_lb =
      0.5 * (cert.dmax_terms[1] - cert.dh_terms[1] + log_eps_delta);
  const double half_ls = 0.5 * (cert.dmax_terms[2] - cert.dh_terms[0] -
                                cert.dh_terms[1] + log_eps_delta);
  const double feas_a = 0.5 * (cert.dmax_terms[0] + log_delta - double(cert.r_a));
  const double feas_b = 0.5 * (cert.dmax_terms[1] + log_delta - double(cert.r_b));
  const double feas_s =
      0.5 * (cert.dmax_terms[2] + log_delta - double(cert.r_a) - double(cert.r_b));

  Index ha = std::max<Index>({0, ceil_of(half_la), ceil_of(feas_a),
                              cert.r_a == 0 ? Index(1) : Index(0)});
  Index hb = std::max<Index>({0, ceil_of(half_lb), ceil_of(feas_b),
                              cert.r_b == 0 ? Index(1) : Index(0)});
  const Index s0 = std::max<Index>(ceil_of(half_ls), ceil_of(feas_s));
  while (ha + hb < s0) {
    // Distribute remaining sum slack to equalize the two sides' margins.
    if (double(ha) - half_la <= double(hb) - half_lb)
      ++ha;
    else
      ++hb;
  }
  cert.R_a = 2 * ha;
  cert.R_b = 2 * hb;
  cert.qubits_c_to_a = double(cert.R_a) / 2.0;
  cert.qubits_c_to_b = double(cert.R_b) / 2.0;
  cert.guaranteed_error = inst.eps1 + 5.0 * inst.eps2 + 2.0 * std::sqrt(inst.delta);
  cert.hypothesis_ok = inst.hypothesis_satisfied();
  {
    DensityOperator prime_rab =
        partial_trace(psi_p, {inst.reg_r, inst.reg_a, inst.reg_b});
    cert.dmax_rab =
        std::max(0.0, dmax(prime_rab, rho_rab.reordered(prime_rab.system.names())).value);
    cert.delta_condition_ok = cert.dmax_rab <= inst.delta + 1e-9;
  }
  return cert;
}

Transcript run_task2(const ProtocolInstance& inst, const Certificate& cert,
                     const RunOptions& opts) {
  ForwardResult res = forward_run(inst, cert, opts);
  if (opts.keep_states) res.transcript.final_state = res.phi;
  return res.transcript;
}

Transcript run_task1(const ProtocolInstance& inst, const Certificate& cert,
                     const RunOptions& opts) {
  ForwardResult res = forward_run(inst, cert, opts);
  const Plan& plan = res.plan;

  // Input: Psi (x) theta1' (x) theta2' in the forward output's layout.
  Ket y = tensor(tensor(inst.psi, res.theta1), res.theta2)
              .reordered(res.phi.system.names());

  // Inverse of step 5 (controlled swaps are self-inverse; then the fresh
  // registers are detached on the |0> branch).
  Ket state = controlled_swap_into(y, "K1p", "K2p", inst.reg_n, inst.reg_n, plan.pos_b);
  state = contract_basis(state, inst.reg_n, 0);
  state = controlled_swap_into(state, "J1p", "J2p", inst.reg_m, inst.reg_m, plan.pos_a);
  state = contract_basis(state, inst.reg_m, 0);
  // Inverse of step 4.
  state = apply_block_controlled(state, "K1p", plan.pgm_b, true);
  state = apply_block_controlled(state, "J1p", plan.pgm_a, true);
  // Inverse of step 3.
  state = contract_copy(state, "K1", "K1p");
  state = contract_copy(state, "J1", "J1p");
  // Inverse of step 2.
  state = apply_on(state, plan.v_prime.adjoint(), true);

  // Unitary-dilation bookkeeping: the lost norm counts as error. With
  // z = W^dag y, P^2 = (1 - ||z||^2) + || z - <xi|z> xi ||^2 equals
  // 1 - |<W xi | y>|^2 and is stable near zero.
  Ket aligned = state.reordered(plan.xi.system.names());
  const cplx overlap = plan.xi.amps.dot(aligned.amps);
  const double lost = std::max(0.0, 1.0 - aligned.amps.squaredNorm());
  const double rej = (aligned.amps - overlap * plan.xi.amps).squaredNorm();

  Transcript tr = res.transcript;
  tr.reversed = true;
  tr.final_p = std::min(1.0, std::sqrt(lost + rej));
  if (opts.keep_states) tr.final_state = aligned;
  return tr;
}

ConvexSplitInstance induced_split_instance(const ProtocolInstance& inst,
                                           Index total_exp_a, Index total_exp_b) {
  ConvexSplitInstance split;
  const std::vector<std::string> keep{inst.reg_r, inst.reg_a, inst.reg_b, inst.reg_m,
                                      inst.reg_n};
  DensityOperator rho = merge_registers(partial_trace(inst.psi, keep),
                                        {inst.reg_r, inst.reg_a, inst.reg_b}, "RAB");
  DensityOperator rho_p = merge_registers(
      partial_trace(inst.psi_prime_or_default(), keep).reordered(
          partial_trace(inst.psi, keep).system.names()),
      {inst.reg_r, inst.reg_a, inst.reg_b}, "RAB");
  split.rho_rab = rho;
  split.rho_prime_rab = rho_p;
  split.sigma_a = with_names(inst.sigma_m, {inst.reg_m});
  split.omega_b = with_names(inst.omega_n, {inst.reg_n});
  split.reg_r = "RAB";
  split.reg_a = inst.reg_m;
  split.reg_b = inst.reg_n;
  split.r_a = std::max<Index>(1, total_exp_a);
  split.r_b = std::max<Index>(1, total_exp_b);
  split.delta = inst.delta;
  split.epsilon =
      fidelity_pd(rho, rho_p.reordered(rho.system.names())).purified_distance + 1e-12;
  return split;
}

EndToEndReport verify_end_to_end(const ProtocolInstance& inst, const Certificate& cert,
                                 const Transcript& transcript) {
  (void)cert;
  EndToEndReport rep;
  ConvexSplitInstance split = induced_split_instance(
      inst, transcript.block_exp_a + transcript.pos_exp_a,
      transcript.block_exp_b + transcript.pos_exp_b);
  ConvexSplitReport cs = certified_bound(split);
  rep.delta_eff = cs.delta_eff;
  rep.delta_flagged = cs.delta_eff > inst.delta + 1e-12;
  rep.split_bound = inst.eps1 + 2.0 * std::sqrt(rep.delta_eff);
  rep.decode_bound = 5.0 * inst.eps2;
  rep.total_bound = inst.eps1 + 5.0 * inst.eps2 + 2.0 * std::sqrt(rep.delta_eff);
  rep.split_ok = transcript.gap_split <= rep.split_bound + 1e-6;
  rep.decode_ok = transcript.gap_decode <= rep.decode_bound + 1e-6;
  rep.total_ok = transcript.final_p <= rep.total_bound + 1e-6;
  rep.chain_ok = transcript.final_p <=
                 transcript.gap_split + transcript.gap_decode + 1e-6;
  rep.all_ok = rep.split_ok && rep.decode_ok && rep.total_ok && rep.chain_ok;
  return rep;
}

}  // namespace qsw
