#include "qsw/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qsw/decoder.hpp"  // slot_register_name

namespace qsw {

namespace {
constexpr Index kDenseCap = Index(1) << 13;

cmat kron_pow(const cmat& v, Index n) {
  cmat acc = v;
  for (Index i = 1; i < n; ++i) {
    cmat next(acc.rows() * v.rows(), acc.cols() * v.cols());
    for (Index r = 0; r < acc.rows(); ++r)
      for (Index c = 0; c < acc.cols(); ++c)
        next.block(r * v.rows(), c * v.cols(), v.rows(), v.cols()) = acc(r, c) * v;
    acc = std::move(next);
  }
  return acc;
}
}  // namespace

TypicalProjector typical_projector(const DensityOperator& rho, Index n, double delta) {
  if (rho.system.size() != 1)
    throw ShapeError("typical_projector: expects a single-register state");
  const Index d = rho.system.total_dim();
  double log_total = double(n) * std::log2(double(d));
  if (log_total > 13.0 + 1e-9)
    throw CapacityError("typical_projector: n-copy dimension exceeds the dense cap");

  EigH e = eig_herm(rho.matrix);
  const double s = entropy(rho);
  TypicalProjector out;
  out.window.n = n;
  out.window.delta = delta;
  out.window.entropy_bits = s;
  out.window.lower = -double(n) * (s + delta);  // log2 bounds
  out.window.upper = -double(n) * (s - delta);

  const Index dn = static_cast<Index>(std::llround(std::pow(double(d), double(n))));
  std::vector<double> log_lams(static_cast<size_t>(d));
  for (Index i = 0; i < d; ++i)
    log_lams[static_cast<size_t>(i)] =
        e.values(i) > 1e-300 ? std::log2(e.values(i)) : -1e9;

  // Multi-index enumeration over eigenvalue products; both window ends closed.
  std::vector<char> keep(static_cast<size_t>(dn), 0);
  double mass = 0.0;
  Index rank = 0;
  std::vector<Index> digits(static_cast<size_t>(n), 0);
  for (Index flat = 0; flat < dn; ++flat) {
    Index rem = flat;
    double log_prod = 0.0;
    for (Index k = n - 1; k >= 0; --k) {
      digits[static_cast<size_t>(k)] = rem % d;
      rem /= d;
      log_prod += log_lams[static_cast<size_t>(digits[static_cast<size_t>(k)])];
    }
    if (log_prod >= out.window.lower - 1e-12 && log_prod <= out.window.upper + 1e-12) {
      keep[static_cast<size_t>(flat)] = 1;
      mass += std::exp2(log_prod);
      ++rank;
    }
  }
  out.mass = mass;
  out.window.dim = rank;

  cmat vn = kron_pow(e.vectors, n);
  cmat diag = cmat::Zero(dn, dn);
  for (Index i = 0; i < dn; ++i)
    if (keep[static_cast<size_t>(i)]) diag(i, i) = 1.0;
  cmat proj = vn * diag * vn.adjoint();

  std::vector<Register> regs;
  const std::string base = rho.system.at(0).name;
  for (Index i = 1; i <= n; ++i) regs.push_back({slot_register_name(base, i), d});
  out.projector = TestOperator(RegisterSystem(regs), hermitize(proj));
  return out;
}

NpCut np_cut(const DensityOperator& rho, const DensityOperator& sigma_ref, double k_bits) {
  if (rho.system.total_dim() != sigma_ref.system.total_dim())
    throw ShapeError("np_cut: shape mismatch");
  DensityOperator sig = sigma_ref;
  if (!(rho.system == sigma_ref.system)) sig = sigma_ref.reordered(rho.system.names());
  const cmat pencil = rho.matrix - std::exp2(k_bits) * sig.matrix;
  auto [pos, neg] = pos_neg_parts(rho.system, pencil);
  NpCut out;
  out.projector = neg;
  cmat cut = neg.matrix * rho.matrix * neg.matrix;
  out.kept_mass = cut.trace().real();
  if (out.kept_mass < 1e-14)
    throw NumericalError("np_cut: kept mass vanished");
  out.state = DensityOperator(rho.system, hermitize(cut / out.kept_mass));
  return out;
}

TestOperator dual_projector(const Ket& psi, const TestOperator& pi_a) {
  // Bipartition: pi_a's registers vs the rest of psi.
  std::vector<std::string> a_names = pi_a.system.names();
  std::vector<std::string> b_names;
  for (const auto& r : psi.system.registers())
    if (!pi_a.system.has(r.name)) b_names.push_back(r.name);
  if (b_names.empty()) throw ShapeError("dual_projector: nothing on the other side");

  std::vector<std::string> order = a_names;
  order.insert(order.end(), b_names.begin(), b_names.end());
  Ket re = psi.reordered(order);
  const Index da = pi_a.system.total_dim();
  const Index db = re.amps.size() / da;

  cmat coeff(da, db);
  for (Index a = 0; a < da; ++a)
    for (Index b = 0; b < db; ++b) coeff(a, b) = re.amps(a * db + b);
  cmat psi_a = coeff * coeff.adjoint();

  // Commutation check.
  const cmat comm = pi_a.matrix * psi_a - psi_a * pi_a.matrix;
  if (comm.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, psi_a.cwiseAbs().maxCoeff()))
    throw ContractViolation("dual_projector: projector does not commute with the marginal");

  EigH e = eig_herm(psi_a);
  const double lam_max = e.values.size() ? e.values.maxCoeff() : 0.0;
  const double cut = tol::kRankRel * lam_max;

  std::vector<Index> kept;
  for (Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > cut) kept.push_back(i);

  // Schmidt partners f_i = <e_i | psi> / sqrt(lambda_i).
  cmat f(db, static_cast<Index>(kept.size()));
  for (size_t k = 0; k < kept.size(); ++k) {
    cvec fi = coeff.transpose() * e.vectors.col(kept[k]).conjugate();
    f.col(static_cast<Index>(k)) = fi / std::sqrt(e.values(kept[k]));
  }

  cmat pi_b = cmat::Zero(db, db);
  for (size_t i = 0; i < kept.size(); ++i)
    for (size_t j = 0; j < kept.size(); ++j) {
      const cplx w = (e.vectors.col(kept[j]).adjoint() * pi_a.matrix *
                      e.vectors.col(kept[i]))(0);
      if (std::abs(w) < 1e-15) continue;
      pi_b += w * f.col(static_cast<Index>(i)) * f.col(static_cast<Index>(j)).adjoint();
    }
  return TestOperator(psi.system.subsystem(b_names), hermitize(pi_b));
}

namespace {

Ket project_on(const Ket& psi, const TestOperator& proj, double& mass) {
  LinearMapOnRegisters map;
  for (const auto& r : proj.system.registers()) map.domain.push_back(r);
  map.codomain = map.domain;
  map.matrix = proj.matrix;
  Ket cut = apply_on(psi, map, /*allow_nonisometry=*/true);
  const double nrm = cut.norm();
  mass = nrm * nrm;
  if (nrm < 1e-12) throw NumericalError("surgery: projection removed all mass");
  cut.amps /= nrm;
  return cut;
}

std::vector<std::string> concat_names(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

SurgeryOutput smoothed_state_pipeline(const Ket& rho_rmn, const std::string& reg_r,
                                      const std::string& reg_m, const std::string& reg_n,
                                      Index n, double delta) {
  rho_rmn.validate();
  const Index d_single = rho_rmn.system.total_dim();
  double log_total = double(n) * std::log2(double(d_single));
  if (log_total > 13.0 + 1e-9)
    throw CapacityError("smoothed_state_pipeline: dense cap exceeded");

  SurgeryOutput out;
  SurgeryReport& rep = out.report;
  rep.n = n;
  rep.delta = delta;
  rep.eps_cut = std::clamp(delta, 1e-6, 0.5);

  // |rho>^{(x) n} with copy-indexed register names, grouped per register.
  {
    std::vector<Ket> copies;
    for (Index i = 1; i <= n; ++i) {
      std::vector<std::string> names;
      for (const auto& r : rho_rmn.system.registers())
        names.push_back(slot_register_name(r.name, i));
      copies.push_back(with_names(rho_rmn, names));
    }
    std::vector<std::string> order;
    for (const auto& base : {reg_r, reg_m, reg_n})
      for (Index i = 1; i <= n; ++i) order.push_back(slot_register_name(base, i));
    out.rho_n = tensor(copies).reordered(order);
  }
  for (Index i = 1; i <= n; ++i) {
    out.r_slots.push_back(slot_register_name(reg_r, i));
    out.m_slots.push_back(slot_register_name(reg_m, i));
    out.n_slots.push_back(slot_register_name(reg_n, i));
  }

  // Typical projections on R^n, M^n, N^n.
  auto tp_r = typical_projector(partial_trace(rho_rmn, {reg_r}), n, delta);
  auto tp_m = typical_projector(partial_trace(rho_rmn, {reg_m}), n, delta);
  auto tp_n = typical_projector(partial_trace(rho_rmn, {reg_n}), n, delta);
  rep.mass_r = tp_r.mass;
  rep.mass_m = tp_m.mass;
  rep.mass_n = tp_n.mass;
  out.pi_r = tp_r.projector;
  out.pi_m = tp_m.projector;
  out.pi_n = tp_n.projector;

  auto uniform_on = [](const TestOperator& proj) {
    const double rank = proj.matrix.trace().real();
    return DensityOperator(proj.system, proj.matrix / rank);
  };
  out.mu_r = uniform_on(out.pi_r);
  out.mu_m = uniform_on(out.pi_m);
  out.mu_n = uniform_on(out.pi_n);

  double m_joint_r = 0.0, m_joint_m = 0.0, m_joint_n = 0.0;
  Ket state = project_on(out.rho_n, out.pi_r, m_joint_r);
  state = project_on(state, out.pi_m, m_joint_m);
  state = project_on(state, out.pi_n, m_joint_n);
  rep.mass_joint = m_joint_r * m_joint_m * m_joint_n;
  out.rho_prime = state;

  // The cut threshold gets a 2^-10-bit nudge above the bisection value: the
  // pencil must be strictly signed on the kept eigenspace, and the resulting
  // spectral gap keeps the cut projectors numerically clean through the
  // two-stage cascade. The negative-part mass only grows with the threshold,
  // so the kept mass stays >= 1 - eps_cut.
  constexpr double kThresholdMargin = 9.765625e-04;  // 2^-10 bits

  // Cut on (R^n, M^n) against the uniform product.
  DensityOperator mu_rm = tensor(out.mu_r, out.mu_m);
  {
    DensityOperator rho_p_rm =
        partial_trace(out.rho_prime, concat_names(out.r_slots, out.m_slots));
    rep.k_rm = info_spectrum(rho_p_rm, mu_rm.reordered(rho_p_rm.system.names()),
                             rep.eps_cut, SpectrumVariant::minus)
                   .value +
               kThresholdMargin;
    const cmat pencil = rho_p_rm.matrix -
                        std::exp2(rep.k_rm) *
                            mu_rm.reordered(rho_p_rm.system.names()).matrix;
    auto [pos, neg] = pos_neg_parts(rho_p_rm.system, pencil);
    out.pi_rm_cut = neg;
    state = project_on(state, neg, rep.mass_cut_rm);
  }
  out.rho_double_prime = state;

  // Cut on (R^n, N^n); the dual projector on M^n gives the same state.
  DensityOperator mu_rn = tensor(out.mu_r, out.mu_n);
  {
    DensityOperator rho_pp_rn =
        partial_trace(out.rho_double_prime, concat_names(out.r_slots, out.n_slots));
    rep.k_rn = info_spectrum(rho_pp_rn, mu_rn.reordered(rho_pp_rn.system.names()),
                             rep.eps_cut, SpectrumVariant::minus)
                   .value +
               kThresholdMargin;
    const cmat pencil = rho_pp_rn.matrix -
                        std::exp2(rep.k_rn) *
                            mu_rn.reordered(rho_pp_rn.system.names()).matrix;
    auto [pos, neg] = pos_neg_parts(rho_pp_rn.system, pencil);
    out.pi_rn_cut = neg;
    state = project_on(state, neg, rep.mass_cut_rn);
  }
  out.psi = state;

  rep.norm_defect = std::abs(out.psi.norm() - 1.0);
  rep.p_final = fidelity_pd(out.psi, out.rho_n.reordered(out.psi.system.names()))
                    .purified_distance;

  // Dual-projector transfer check on the second cut.
  {
    TestOperator dual = dual_projector(out.rho_double_prime, out.pi_rn_cut);
    DensityOperator rho_pp = to_density(out.rho_double_prime);
    TestOperator e1 = embed(out.pi_rn_cut, rho_pp.system);
    TestOperator e2 = embed(dual, rho_pp.system);
    const cmat lhs = e1.matrix * rho_pp.matrix * e1.matrix;
    const cmat rhs = e2.matrix * rho_pp.matrix * e2.matrix;
    rep.dual_transfer_defect = (lhs - rhs).cwiseAbs().maxCoeff();
  }

  // Measured D_max values.
  auto product_power = [&](const std::string& reg, const std::vector<std::string>& slots) {
    DensityOperator single = partial_trace(rho_rmn, {reg});
    std::vector<DensityOperator> factors;
    for (const auto& s : slots) factors.push_back(with_names(single, {s}));
    return tensor(factors);
  };
  DensityOperator rho_r_n = product_power(reg_r, out.r_slots);
  DensityOperator rho_m_n = product_power(reg_m, out.m_slots);
  DensityOperator rho_n_n = product_power(reg_n, out.n_slots);

  DensityOperator psi_rm = partial_trace(out.psi, concat_names(out.r_slots, out.m_slots));
  DensityOperator psi_rn = partial_trace(out.psi, concat_names(out.r_slots, out.n_slots));
  DensityOperator psi_all = to_density(out.psi);

  rep.dmax_rm =
      dmax(psi_rm, tensor(rho_r_n, rho_m_n).reordered(psi_rm.system.names())).value;
  rep.dmax_rn =
      dmax(psi_rn, tensor(rho_r_n, rho_n_n).reordered(psi_rn.system.names())).value;
  rep.dmax_rmn = dmax(psi_all, tensor(tensor(rho_r_n, rho_m_n), rho_n_n)
                                   .reordered(psi_all.system.names()))
                     .value;
  rep.dmax_rm_mu = dmax(psi_rm, mu_rm.reordered(psi_rm.system.names())).value;
  rep.dmax_rn_mu = dmax(psi_rn, mu_rn.reordered(psi_rn.system.names())).value;
  rep.dmax_rmn_mu = dmax(psi_all, tensor(tensor(out.mu_r, out.mu_m), out.mu_n)
                                      .reordered(psi_all.system.names()))
                        .value;
  return out;
}

SurgeryVerification verify_surgery(const SurgeryOutput& out) {
  const SurgeryReport& rep = out.report;
  SurgeryVerification v;
  const double n = double(rep.n);
  const double delta = rep.delta;

  // (i) Gentle-measurement fidelity chain from the measured masses.
  {
    const double chain = std::sqrt(std::max(0.0, 1.0 - rep.mass_joint)) +
                         std::sqrt(std::max(0.0, 1.0 - rep.mass_cut_rm)) +
                         std::sqrt(std::max(0.0, 1.0 - rep.mass_cut_rn));
    v.fidelity_chain_ok = rep.p_final <= chain + 1e-9;
  }

  // (ii) psi_R <= rho_R^{(x)n} / (m1 m2 m3).
  {
    DensityOperator single =
        partial_trace(out.rho_n, {out.r_slots.front()});
    std::vector<DensityOperator> factors;
    for (const auto& s : out.r_slots) factors.push_back(with_names(single, {s}));
    DensityOperator rho_r_n = tensor(factors);
    DensityOperator psi_r = partial_trace(out.psi, out.r_slots);
    const double scale =
        1.0 / (rep.mass_joint * rep.mass_cut_rm * rep.mass_cut_rn);
    const double me = min_eig_herm(scale * rho_r_n.reordered(psi_r.system.names()).matrix -
                                   psi_r.matrix);
    v.r_marginal_ok = me >= -1e-8;
  }

  // Uniform sandwich with measured masses: mu_X <= 2^{2n delta}/m_X  *  rho_X^n
  // restricted to the window (checked as operators), and the reverse with
  // (1-delta) 2^{-2n delta} when the mass supports it.
  {
    bool ok = true;
    auto sandwich = [&](const TestOperator& pi, const DensityOperator& mu) {
      DensityOperator rho_marg = partial_trace(out.rho_n, mu.system.names());
      const cmat aligned = rho_marg.reordered(mu.system.names()).matrix;
      const cmat cut = pi.matrix * aligned * pi.matrix;
      const double m_typ = (pi.matrix * aligned).trace().real();
      const double up = std::exp2(2.0 * n * delta) / m_typ;
      const double lo = (1.0 - delta) * std::exp2(-2.0 * n * delta);
      // mu <= (2^{2n delta}/m) Pi rho Pi  and  (1-delta) 2^{-2n delta} Pi rho Pi <= mu
      if (min_eig_herm(up * cut - mu.matrix) < -1e-9) ok = false;
      if (min_eig_herm(mu.matrix - lo * cut) < -1e-9) ok = false;
    };
    sandwich(out.pi_r, out.mu_r);
    sandwich(out.pi_m, out.mu_m);
    sandwich(out.pi_n, out.mu_n);
    v.sandwich_ok = ok;
  }

  // (iii) RM route: k + uniform translation + kept-mass losses.
  v.rm_bound = rep.k_rm + 4.0 * n * delta +
               std::log2(1.0 / (rep.mass_r * rep.mass_m)) +
               std::log2(1.0 / (rep.mass_cut_rm * rep.mass_cut_rn));
  v.rm_slack = v.rm_bound - rep.dmax_rm;
  v.rm_bound_ok = rep.dmax_rm <= v.rm_bound + 1e-7;

  // (iv) RN route.
  v.rn_bound = rep.k_rn + 4.0 * n * delta +
               std::log2(1.0 / (rep.mass_r * rep.mass_n)) +
               std::log2(1.0 / rep.mass_cut_rn);
  v.rn_slack = v.rn_bound - rep.dmax_rn;
  v.rn_bound_ok = rep.dmax_rn <= v.rn_bound + 1e-7;

  // (v) Joint route through the pure-state identity and the spectrum of
  // rho'' against the uniform product.
  {
    const double eps1 = 0.3;
    const double beta = (1.0 - rep.mass_cut_rn) + 3.0 * eps1 * eps1;
    v.joint_bound_applicable = beta < 1.0 - 1e-9;
    if (v.joint_bound_applicable) {
      DensityOperator rho_pp = to_density(out.rho_double_prime);
      DensityOperator mu_all = tensor(tensor(out.mu_r, out.mu_m), out.mu_n);
      const double ds = info_spectrum(rho_pp, mu_all.reordered(rho_pp.system.names()),
                                      1.0 - eps1 * eps1, SpectrumVariant::plus)
                            .value;
      const double bound_mu = ds + 8.0 * std::log2(1.0 / eps1);
      v.joint_bound = bound_mu + 6.0 * n * delta +
                      std::log2(1.0 / (rep.mass_r * rep.mass_m * rep.mass_n));
      v.joint_slack = v.joint_bound - rep.dmax_rmn;
      v.joint_bound_ok = rep.dmax_rmn <= v.joint_bound + 1e-7;
    }
  }

  v.dual_transfer_ok = rep.dual_transfer_defect <= 1e-8;
  v.all_ok = v.fidelity_chain_ok && v.r_marginal_ok && v.rm_bound_ok && v.rn_bound_ok &&
             (!v.joint_bound_applicable || v.joint_bound_ok) && v.dual_transfer_ok &&
             v.sandwich_ok;
  return v;
}

// ---- classical type-class machinery -------------------------------------------

namespace {

void enumerate_types(Index n, Index m, std::vector<Index>& current,
                     std::vector<std::vector<Index>>& out) {
  if (current.size() + 1 == static_cast<size_t>(m)) {
    Index used = std::accumulate(current.begin(), current.end(), Index(0));
    current.push_back(n - used);
    out.push_back(current);
    current.pop_back();
    return;
  }
  Index used = std::accumulate(current.begin(), current.end(), Index(0));
  for (Index k = 0; k <= n - used; ++k) {
    current.push_back(k);
    enumerate_types(n, m, current, out);
    current.pop_back();
  }
}

double log_multinomial(Index n, const std::vector<Index>& counts) {
  double acc = std::lgamma(double(n) + 1.0);
  for (Index c : counts) acc -= std::lgamma(double(c) + 1.0);
  return acc;  // natural log
}

}  // namespace

double classical_dh_iid(const std::vector<double>& p, const std::vector<double>& q,
                        Index n, double eps) {
  if (p.size() != q.size() || p.empty())
    throw ShapeError("classical_dh_iid: alphabet mismatch");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("classical_dh_iid: eps outside (0,1)");
  if (n < 1) throw DomainError("classical_dh_iid: n must be >= 1");
  const Index m = static_cast<Index>(p.size());

  std::vector<std::vector<Index>> types;
  std::vector<Index> current;
  enumerate_types(n, m, current, types);
  if (types.size() > (size_t(1) << 22))
    throw CapacityError("classical_dh_iid: too many type classes");

  struct TypeMass {
    double ratio_log;  // log2 of the per-sequence likelihood ratio
    double p_mass;
    double q_mass;
  };
  std::vector<TypeMass> masses;
  masses.reserve(types.size());
  for (const auto& t : types) {
    double lp = 0.0, lq = 0.0;
    bool p_zero = false, q_zero = false;
    for (Index i = 0; i < m; ++i) {
      if (t[static_cast<size_t>(i)] == 0) continue;
      if (p[static_cast<size_t>(i)] <= 0.0) p_zero = true;
      if (q[static_cast<size_t>(i)] <= 0.0) q_zero = true;
      lp += double(t[static_cast<size_t>(i)]) * std::log(std::max(p[static_cast<size_t>(i)], 1e-300));
      lq += double(t[static_cast<size_t>(i)]) * std::log(std::max(q[static_cast<size_t>(i)], 1e-300));
    }
    const double lc = log_multinomial(n, t);
    TypeMass tm;
    tm.p_mass = p_zero ? 0.0 : std::exp(lc + lp);
    tm.q_mass = q_zero ? 0.0 : std::exp(lc + lq);
    if (q_zero && !p_zero)
      tm.ratio_log = 1e18;  // infinitely favorable
    else if (p_zero)
      tm.ratio_log = -1e18;
    else
      tm.ratio_log = (lp - lq) / std::log(2.0);
    masses.push_back(tm);
  }
  std::sort(masses.begin(), masses.end(),
            [](const TypeMass& a, const TypeMass& b) { return a.ratio_log > b.ratio_log; });

  const double target = 1.0 - eps;
  double p_acc = 0.0, q_acc = 0.0;
  size_t i = 0;
  while (i < masses.size()) {
    // Group equal-ratio types so ties are randomized jointly.
    size_t j = i;
    double pg = 0.0, qg = 0.0;
    while (j < masses.size() &&
           masses[j].ratio_log > masses[i].ratio_log - 1e-9 * std::max(1.0, std::abs(masses[i].ratio_log)))
      pg += masses[j].p_mass, qg += masses[j].q_mass, ++j;
    if (p_acc + pg >= target - 1e-15) {
      const double gamma = pg > 0.0 ? std::clamp((target - p_acc) / pg, 0.0, 1.0) : 0.0;
      const double beta = q_acc + gamma * qg;
      if (beta < 1e-290)
        throw NumericalError("classical_dh_iid: type-II error underflow");
      return -std::log2(beta);
    }
    p_acc += pg;
    q_acc += qg;
    i = j;
  }
  // target not reached only through rounding; the full test has beta = 1.
  return 0.0;
}

double classical_typical_mass(const std::vector<double>& p, Index n, double delta) {
  const Index m = static_cast<Index>(p.size());
  double s = 0.0;
  for (double x : p)
    if (x > 1e-300) s -= x * std::log2(x);

  std::vector<std::vector<Index>> types;
  std::vector<Index> current;
  enumerate_types(n, m, current, types);

  const double lo = -double(n) * (s + delta), hi = -double(n) * (s - delta);
  double mass = 0.0;
  for (const auto& t : types) {
    double lp2 = 0.0;  // log2 of the per-sequence probability
    bool zero = false;
    for (Index i = 0; i < m; ++i) {
      if (t[static_cast<size_t>(i)] == 0) continue;
      if (p[static_cast<size_t>(i)] <= 0.0) {
        zero = true;
        break;
      }
      lp2 += double(t[static_cast<size_t>(i)]) * std::log2(p[static_cast<size_t>(i)]);
    }
    if (zero) continue;
    if (lp2 >= lo - 1e-12 && lp2 <= hi + 1e-12)
      mass += std::exp(log_multinomial(n, t) + lp2 * std::log(2.0));
  }
  return mass;
}

}  // namespace qsw
