#include "qsw/states.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace qsw {

namespace {

std::vector<Index> keep_positions(const RegisterSystem& sys,
                                  const std::vector<std::string>& keep) {
  std::unordered_set<std::string> want(keep.begin(), keep.end());
  for (const auto& n : keep) sys.position(n);  // validate names
  std::vector<Index> pos;
  for (Index i = 0; i < sys.size(); ++i)
    if (want.count(sys.at(i).name)) pos.push_back(i);
  return pos;
}

// Offset tables for a (subset, complement) split of a register system:
// full_index = sub_offsets[i] + rest_offsets[t].
struct SplitOffsets {
  RegisterSystem sub;
  RegisterSystem rest;
  std::vector<Index> sub_offsets;
  std::vector<Index> rest_offsets;
};

SplitOffsets split_offsets(const RegisterSystem& sys, const std::vector<Index>& sub_pos) {
  std::vector<char> in_sub(static_cast<size_t>(sys.size()), 0);
  for (Index p : sub_pos) in_sub[static_cast<size_t>(p)] = 1;

  std::vector<Register> sub_regs, rest_regs;
  for (Index p : sub_pos) sub_regs.push_back(sys.at(p));
  std::vector<Index> rest_pos;
  for (Index i = 0; i < sys.size(); ++i)
    if (!in_sub[static_cast<size_t>(i)]) {
      rest_regs.push_back(sys.at(i));
      rest_pos.push_back(i);
    }

  SplitOffsets out{RegisterSystem(sub_regs), RegisterSystem(rest_regs), {}, {}};
  out.sub_offsets.resize(static_cast<size_t>(out.sub.total_dim()));
  out.rest_offsets.resize(static_cast<size_t>(out.rest.total_dim()));

  std::vector<Index> digits;
  for (Index i = 0; i < out.sub.total_dim(); ++i) {
    out.sub.digits_of(i, digits);
    Index off = 0;
    for (size_t k = 0; k < digits.size(); ++k)
      off += digits[k] * sys.stride(sub_pos[k]);
    out.sub_offsets[static_cast<size_t>(i)] = off;
  }
  for (Index i = 0; i < out.rest.total_dim(); ++i) {
    out.rest.digits_of(i, digits);
    Index off = 0;
    for (size_t k = 0; k < digits.size(); ++k)
      off += digits[k] * sys.stride(rest_pos[k]);
    out.rest_offsets[static_cast<size_t>(i)] = off;
  }
  return out;
}

}  // namespace

// ---- type invariants -------------------------------------------------------

Ket Ket::basis(const RegisterSystem& sys, Index flat) {
  cvec v = cvec::Zero(sys.total_dim());
  v(flat) = 1.0;
  return Ket(sys, std::move(v));
}

void Ket::validate() const {
  if (amps.size() != system.total_dim())
    throw ShapeError("ket length does not match register dimensions");
  if (std::abs(norm() - 1.0) > tol::kNorm * 10)
    throw ShapeError("ket is not normalized");
}

void DensityOperator::validate(bool allow_subnormalized) const {
  if (matrix.rows() != system.total_dim() || matrix.cols() != system.total_dim())
    throw ShapeError("density matrix shape does not match register dimensions");
  if (herm_defect(matrix) > 1e-9) throw ShapeError("density matrix is not Hermitian");
  const double tr = trace();
  if (allow_subnormalized ? tr > 1.0 + 1e-9 : std::abs(tr - 1.0) > 1e-9)
    throw ShapeError("density matrix trace out of range");
  if (min_eig_herm(matrix) < -1e-8) throw ShapeError("density matrix is not PSD");
}

TestOperator TestOperator::identity(const RegisterSystem& sys) {
  return TestOperator(sys, cmat::Identity(sys.total_dim(), sys.total_dim()));
}

void TestOperator::validate() const {
  if (matrix.rows() != system.total_dim() || matrix.cols() != system.total_dim())
    throw ShapeError("test operator shape mismatch");
  if (herm_defect(matrix) > 1e-9) throw ShapeError("test operator is not Hermitian");
  EigH e = eig_herm(matrix);
  if (e.values.size()) {
    if (e.values.minCoeff() < -1e-9 || e.values.maxCoeff() > 1.0 + 1e-9)
      throw ShapeError("test operator spectrum outside [0,1]");
  }
}

Index LinearMapOnRegisters::domain_dim() const {
  Index d = 1;
  for (const auto& r : domain) d *= r.dim;
  return d;
}

Index LinearMapOnRegisters::codomain_dim() const {
  Index d = 1;
  for (const auto& r : codomain) d *= r.dim;
  return d;
}

void LinearMapOnRegisters::validate() const {
  if (matrix.rows() != codomain_dim() || matrix.cols() != domain_dim())
    throw ShapeError("linear map shape does not match declared registers");
  if (isometry) {
    cmat g = matrix.adjoint() * matrix;
    if ((g - cmat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol::kIsometry * 10)
      throw ContractViolation("isometry flag set but V^dag V != I");
  }
  if (unitary) {
    cmat g = matrix * matrix.adjoint();
    if ((g - cmat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol::kIsometry * 10)
      throw ContractViolation("unitary flag set but V V^dag != I");
  }
}

LinearMapOnRegisters LinearMapOnRegisters::adjoint() const {
  LinearMapOnRegisters out;
  out.domain = codomain;
  out.codomain = domain;
  out.matrix = matrix.adjoint();
  out.isometry = unitary;  // the adjoint of a unitary is an isometry
  out.unitary = unitary;
  return out;
}

LinearMapOnRegisters swap_map(const Register& x, const Register& y) {
  if (x.dim != y.dim) throw ShapeError("swap_map: dimensions differ");
  const Index d = x.dim;
  cmat m = cmat::Zero(d * d, d * d);
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) m(a * d + b, b * d + a) = 1.0;
  return LinearMapOnRegisters{{x, y}, {x, y}, std::move(m), true, true};
}

LinearMapOnRegisters identity_map(const std::vector<Register>& regs) {
  Index d = 1;
  for (const auto& r : regs) d *= r.dim;
  return LinearMapOnRegisters{regs, regs, cmat::Identity(d, d), true, true};
}

// ---- reorder ----------------------------------------------------------------

namespace {
std::vector<Index> order_for(const RegisterSystem& sys,
                             const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != sys.size())
    throw ShapeError("reorder: name list must cover every register");
  std::vector<Index> order;
  order.reserve(names.size());
  for (const auto& n : names) order.push_back(sys.position(n));
  return order;
}
}  // namespace

Ket Ket::reordered(const std::vector<std::string>& names) const {
  auto order = order_for(system, names);
  auto map = permutation_index_map(system, order);
  std::vector<Register> regs;
  for (Index p : order) regs.push_back(system.at(p));
  cvec out(amps.size());
  for (Index i = 0; i < amps.size(); ++i) out(map[static_cast<size_t>(i)]) = amps(i);
  return Ket(RegisterSystem(regs), std::move(out));
}

DensityOperator DensityOperator::reordered(const std::vector<std::string>& names) const {
  auto order = order_for(system, names);
  auto map = permutation_index_map(system, order);
  std::vector<Register> regs;
  for (Index p : order) regs.push_back(system.at(p));
  cmat out(matrix.rows(), matrix.cols());
  for (Index i = 0; i < matrix.rows(); ++i)
    for (Index j = 0; j < matrix.cols(); ++j)
      out(map[static_cast<size_t>(i)], map[static_cast<size_t>(j)]) = matrix(i, j);
  return DensityOperator(RegisterSystem(regs), std::move(out));
}

// ---- tensor products --------------------------------------------------------

Ket tensor(const Ket& a, const Ket& b) {
  RegisterSystem sys = a.system.concat(b.system);
  cvec out(sys.total_dim());
  for (Index i = 0; i < a.amps.size(); ++i)
    out.segment(i * b.amps.size(), b.amps.size()) = a.amps(i) * b.amps;
  return Ket(std::move(sys), std::move(out));
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  RegisterSystem sys = a.system.concat(b.system);
  const Index db = b.matrix.rows();
  cmat out(sys.total_dim(), sys.total_dim());
  for (Index i = 0; i < a.matrix.rows(); ++i)
    for (Index j = 0; j < a.matrix.cols(); ++j)
      out.block(i * db, j * db, db, db) = a.matrix(i, j) * b.matrix;
  return DensityOperator(std::move(sys), std::move(out));
}

TestOperator tensor(const TestOperator& a, const TestOperator& b) {
  RegisterSystem sys = a.system.concat(b.system);
  const Index db = b.matrix.rows();
  cmat out(sys.total_dim(), sys.total_dim());
  for (Index i = 0; i < a.matrix.rows(); ++i)
    for (Index j = 0; j < a.matrix.cols(); ++j)
      out.block(i * db, j * db, db, db) = a.matrix(i, j) * b.matrix;
  return TestOperator(std::move(sys), std::move(out));
}

Ket tensor(const std::vector<Ket>& kets) {
  if (kets.empty()) throw ShapeError("tensor: empty input");
  Ket acc = kets.front();
  for (size_t i = 1; i < kets.size(); ++i) acc = tensor(acc, kets[i]);
  return acc;
}

DensityOperator tensor(const std::vector<DensityOperator>& ops) {
  if (ops.empty()) throw ShapeError("tensor: empty input");
  DensityOperator acc = ops.front();
  for (size_t i = 1; i < ops.size(); ++i) acc = tensor(acc, ops[i]);
  return acc;
}

DensityOperator to_density(const Ket& k) {
  return DensityOperator(k.system, k.amps * k.amps.adjoint());
}

Ket with_names(const Ket& k, const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != k.system.size())
    throw ShapeError("with_names: name count mismatch");
  std::vector<Register> regs;
  for (Index i = 0; i < k.system.size(); ++i)
    regs.push_back({names[static_cast<size_t>(i)], k.system.at(i).dim});
  return Ket(RegisterSystem(regs), k.amps);
}

DensityOperator with_names(const DensityOperator& op, const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != op.system.size())
    throw ShapeError("with_names: name count mismatch");
  std::vector<Register> regs;
  for (Index i = 0; i < op.system.size(); ++i)
    regs.push_back({names[static_cast<size_t>(i)], op.system.at(i).dim});
  return DensityOperator(RegisterSystem(regs), op.matrix);
}

DensityOperator merge_registers(const DensityOperator& op,
                                const std::vector<std::string>& group,
                                const std::string& merged_name) {
  std::vector<std::string> order = group;
  for (const auto& r : op.system.registers())
    if (std::find(group.begin(), group.end(), r.name) == group.end())
      order.push_back(r.name);
  DensityOperator re = op.reordered(order);
  Index merged_dim = 1;
  for (const auto& n : group) merged_dim *= op.system.dim_of(n);
  std::vector<Register> regs{{merged_name, merged_dim}};
  for (Index i = static_cast<Index>(group.size()); i < re.system.size(); ++i)
    regs.push_back(re.system.at(i));
  return DensityOperator(RegisterSystem(regs), re.matrix);
}

// ---- marginals --------------------------------------------------------------

DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep) {
  auto kp = keep_positions(rho.system, keep);
  auto split = split_offsets(rho.system, kp);
  const Index dk = split.sub.total_dim();
  const Index dt = split.rest.total_dim();
  cmat out = cmat::Zero(dk, dk);
  for (Index i = 0; i < dk; ++i) {
    const Index oi = split.sub_offsets[static_cast<size_t>(i)];
    for (Index j = 0; j < dk; ++j) {
      const Index oj = split.sub_offsets[static_cast<size_t>(j)];
      cplx acc = 0.0;
      for (Index t = 0; t < dt; ++t) {
        const Index ot = split.rest_offsets[static_cast<size_t>(t)];
        acc += rho.matrix(oi + ot, oj + ot);
      }
      out(i, j) = acc;
    }
  }
  return DensityOperator(split.sub, std::move(out));
}

DensityOperator partial_trace(const Ket& psi, const std::vector<std::string>& keep) {
  auto kp = keep_positions(psi.system, keep);
  auto split = split_offsets(psi.system, kp);
  const Index dk = split.sub.total_dim();
  const Index dt = split.rest.total_dim();
  cmat out = cmat::Zero(dk, dk);
  for (Index t = 0; t < dt; ++t) {
    const Index ot = split.rest_offsets[static_cast<size_t>(t)];
    for (Index i = 0; i < dk; ++i) {
      const cplx ai = psi.amps(split.sub_offsets[static_cast<size_t>(i)] + ot);
      if (ai == cplx(0.0)) continue;
      for (Index j = 0; j < dk; ++j)
        out(i, j) += ai * std::conj(psi.amps(split.sub_offsets[static_cast<size_t>(j)] + ot));
    }
  }
  return DensityOperator(split.sub, std::move(out));
}

double expectation(const DensityOperator& rho, const TestOperator& op) {
  DensityOperator marg = partial_trace(rho, op.system.names());
  DensityOperator aligned = marg.reordered(op.system.names());
  return (op.matrix * aligned.matrix).trace().real();
}

double expectation(const Ket& psi, const TestOperator& op) {
  DensityOperator marg = partial_trace(psi, op.system.names());
  DensityOperator aligned = marg.reordered(op.system.names());
  return (op.matrix * aligned.matrix).trace().real();
}

TestOperator embed(const TestOperator& op, const RegisterSystem& full) {
  std::vector<Index> sub_pos;
  for (const auto& n : op.system.names()) sub_pos.push_back(full.position(n));
  auto split = split_offsets(full, sub_pos);
  // Align op to the order induced by `full`.
  cmat aligned = DensityOperator(op.system, op.matrix).reordered(split.sub.names()).matrix;
  const Index dk = split.sub.total_dim();
  const Index dt = split.rest.total_dim();
  cmat out = cmat::Zero(full.total_dim(), full.total_dim());
  for (Index i = 0; i < dk; ++i)
    for (Index j = 0; j < dk; ++j) {
      const cplx v = aligned(i, j);
      if (v == cplx(0.0)) continue;
      for (Index t = 0; t < dt; ++t) {
        const Index ot = split.rest_offsets[static_cast<size_t>(t)];
        out(split.sub_offsets[static_cast<size_t>(i)] + ot,
            split.sub_offsets[static_cast<size_t>(j)] + ot) = v;
      }
    }
  return TestOperator(full, std::move(out));
}

// ---- purification / fidelity -------------------------------------------------

Ket purify(const DensityOperator& rho, const std::string& purifier_name) {
  EigH e = eig_herm(rho.matrix);
  const double lam_max = e.values.size() ? e.values.maxCoeff() : 0.0;
  const double cut = tol::kRankRel * lam_max;
  std::vector<Index> kept;  // descending order
  for (Index i = e.values.size() - 1; i >= 0; --i)
    if (e.values(i) > cut) kept.push_back(i);
  const Index rank = std::max<Index>(1, static_cast<Index>(kept.size()));

  RegisterSystem sys = rho.system.concat(RegisterSystem::single(purifier_name, rank));
  cvec out = cvec::Zero(sys.total_dim());
  for (size_t k = 0; k < kept.size(); ++k) {
    const double lam = e.values(kept[k]);
    const double w = std::sqrt(std::max(0.0, lam));
    for (Index d = 0; d < rho.matrix.rows(); ++d)
      out(d * rank + static_cast<Index>(k)) = w * e.vectors(d, kept[k]);
  }
  const double n = out.norm();
  if (n > 0) out /= n;
  return Ket(std::move(sys), std::move(out));
}

FidelityResult fidelity_pd(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.system.total_dim() != sigma.system.total_dim())
    throw ShapeError("fidelity_pd: dimension mismatch");
  DensityOperator s = sigma;
  if (!(rho.system == sigma.system)) s = sigma.reordered(rho.system.names());
  cmat sr = mat_sqrt_psd(rho.matrix);
  cmat m = sr * s.matrix * sr;
  EigH e = eig_herm(m);
  double f = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > 0) f += std::sqrt(e.values(i));
  f = std::min(f, 1.0);
  return {f, std::sqrt(std::max(0.0, 1.0 - f * f))};
}

FidelityResult fidelity_pd(const Ket& a, const Ket& b) {
  if (a.amps.size() != b.amps.size()) throw ShapeError("fidelity_pd: dimension mismatch");
  Ket bb = b;
  if (!(a.system == b.system)) bb = b.reordered(a.system.names());
  const cplx overlap = a.amps.dot(bb.amps);
  double f = std::min(std::abs(overlap), 1.0);
  // Rejection-norm form of sqrt(1-F^2); stable when F is close to 1.
  const double p = (bb.amps - overlap * a.amps).norm();
  return {f, std::min(p, 1.0)};
}

FidelityResult marginal_fidelity_pd(const Ket& a, const Ket& b,
                                    const std::vector<std::string>& keep) {
  // Order both as [keep..., rest...]; F(marg_a, marg_b) = || B^dag A ||_1 for
  // the coefficient matrices A, B over (keep x rest).
  auto order_of = [&](const Ket& k) {
    std::vector<std::string> order = keep;
    for (const auto& r : k.system.registers())
      if (std::find(keep.begin(), keep.end(), r.name) == keep.end())
        order.push_back(r.name);
    return order;
  };
  Ket ar = a.reordered(order_of(a));
  Ket br = b.reordered(order_of(b));
  Index dk = 1;
  for (const auto& n : keep) dk *= a.system.dim_of(n);
  const Index ra = ar.amps.size() / dk;
  const Index rb = br.amps.size() / dk;
  cmat am(dk, ra), bm(dk, rb);
  for (Index i = 0; i < dk; ++i) {
    for (Index j = 0; j < ra; ++j) am(i, j) = ar.amps(i * ra + j);
    for (Index j = 0; j < rb; ++j) bm(i, j) = br.amps(i * rb + j);
  }
  double f = trace_norm(bm.adjoint() * am);
  f = std::min(f, 1.0);
  return {f, std::sqrt(std::max(0.0, 1.0 - f * f))};
}

FidelityResult fidelity_pd(const Ket& a, const DensityOperator& b) {
  if (a.amps.size() != b.system.total_dim())
    throw ShapeError("fidelity_pd: dimension mismatch");
  DensityOperator bb = b;
  if (!(a.system == b.system)) bb = b.reordered(a.system.names());
  double f = std::sqrt(std::max(0.0, (a.amps.adjoint() * bb.matrix * a.amps)(0).real()));
  f = std::min(f, 1.0);
  return {f, std::sqrt(std::max(0.0, 1.0 - f * f))};
}

// ---- subsystem application ----------------------------------------------------

namespace {

struct ApplyPlan {
  std::vector<Index> dom_pos;       // positions of domain registers in input order
  RegisterSystem permuted_in;       // [domain..., rest...]
  RegisterSystem permuted_out;      // [codomain..., rest...]
  RegisterSystem final_out;         // spec ordering (in-place/append rule)
  std::vector<Index> out_order;     // permutation from permuted_out to final_out
};

ApplyPlan make_apply_plan(const RegisterSystem& sys, const LinearMapOnRegisters& map) {
  ApplyPlan plan;
  std::unordered_map<std::string, Index> dom_index;
  for (size_t k = 0; k < map.domain.size(); ++k) {
    const auto& r = map.domain[k];
    const Index p = sys.position(r.name);
    if (sys.at(p).dim != r.dim)
      throw ShapeError("apply_on: register '" + r.name + "' dimension mismatch");
    plan.dom_pos.push_back(p);
    dom_index[r.name] = static_cast<Index>(k);
  }

  std::unordered_set<std::string> dom_names;
  for (const auto& r : map.domain) dom_names.insert(r.name);
  std::unordered_set<std::string> cod_names;
  for (const auto& r : map.codomain) cod_names.insert(r.name);
  for (const auto& r : sys.registers())
    if (!dom_names.count(r.name) && cod_names.count(r.name))
      throw NameClash("apply_on: codomain register '" + r.name +
                      "' collides with an untouched register");

  std::vector<Register> perm_in_regs = map.domain;
  std::vector<Register> rest;
  for (const auto& r : sys.registers())
    if (!dom_names.count(r.name)) rest.push_back(r);
  perm_in_regs.insert(perm_in_regs.end(), rest.begin(), rest.end());
  plan.permuted_in = RegisterSystem(perm_in_regs);

  std::vector<Register> perm_out_regs = map.codomain;
  perm_out_regs.insert(perm_out_regs.end(), rest.begin(), rest.end());
  plan.permuted_out = RegisterSystem(perm_out_regs);

  // Final order: untouched keep their slots; domain registers that reappear in
  // the codomain stay in place; fresh codomain registers go to the end.
  std::unordered_map<std::string, Register> cod_by_name;
  for (const auto& r : map.codomain) cod_by_name[r.name] = r;
  std::vector<Register> final_regs;
  for (const auto& r : sys.registers()) {
    if (!dom_names.count(r.name)) {
      final_regs.push_back(r);
    } else if (cod_names.count(r.name)) {
      final_regs.push_back(cod_by_name[r.name]);
    }  // else: consumed
  }
  for (const auto& r : map.codomain)
    if (!dom_names.count(r.name)) final_regs.push_back(r);
  plan.final_out = RegisterSystem(final_regs);

  plan.out_order.clear();
  for (const auto& r : plan.final_out.registers())
    plan.out_order.push_back(plan.permuted_out.position(r.name));
  return plan;
}

cvec apply_to_vector(const cvec& amps, const RegisterSystem& sys,
                     const LinearMapOnRegisters& map, const ApplyPlan& plan) {
  // Gather into [domain, rest] layout.
  const Index dd = map.domain_dim();
  const Index dc = map.codomain_dim();
  auto split = split_offsets(sys, plan.dom_pos);
  const Index dr = split.rest.total_dim();

  cmat view(dd, dr);
  for (Index i = 0; i < dd; ++i)
    for (Index t = 0; t < dr; ++t)
      view(i, t) = amps(split.sub_offsets[static_cast<size_t>(i)] +
                        split.rest_offsets[static_cast<size_t>(t)]);

  cmat moved = map.matrix * view;  // [codomain, rest]

  // Scatter from [codomain, rest] into the final order.
  auto out_map = permutation_index_map(plan.permuted_out, plan.out_order);
  cvec out(plan.final_out.total_dim());
  for (Index c = 0; c < dc; ++c)
    for (Index t = 0; t < dr; ++t)
      out(out_map[static_cast<size_t>(c * dr + t)]) = moved(c, t);
  return out;
}

}  // namespace

Ket apply_on(const Ket& psi, const LinearMapOnRegisters& map, bool allow_nonisometry) {
  if (!allow_nonisometry) {
    cmat g = map.matrix.adjoint() * map.matrix;
    if ((g - cmat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol::kIsometry * 10)
      throw ContractViolation("apply_on: map is not an isometry on a Ket");
  }
  ApplyPlan plan = make_apply_plan(psi.system, map);
  return Ket(plan.final_out, apply_to_vector(psi.amps, psi.system, map, plan));
}

DensityOperator apply_on(const DensityOperator& rho, const LinearMapOnRegisters& map) {
  ApplyPlan plan = make_apply_plan(rho.system, map);
  const Index dout = plan.final_out.total_dim();
  // (M x I) rho (M x I)^dag via two vector passes.
  cmat half(dout, rho.matrix.cols());
  for (Index j = 0; j < rho.matrix.cols(); ++j)
    half.col(j) = apply_to_vector(rho.matrix.col(j), rho.system, map, plan);
  cmat full(dout, dout);
  cmat half_adj = half.adjoint();
  for (Index j = 0; j < dout; ++j)
    full.col(j) = apply_to_vector(half_adj.col(j), rho.system, map, plan);
  return DensityOperator(plan.final_out, full.adjoint());
}

// ---- spectral parts ------------------------------------------------------------

std::pair<TestOperator, TestOperator> pos_neg_parts(const RegisterSystem& sys,
                                                    const cmat& hermitian) {
  if (herm_defect(hermitian) > 1e-9)
    throw ShapeError("pos_neg_parts: operator is not Hermitian");
  const double scale = hermitian.cwiseAbs().maxCoeff();
  const double band = 1e-10 * std::max(1.0, scale);
  auto [pos, neg] = pos_neg_projectors(hermitian, band);
  return {TestOperator(sys, std::move(pos)), TestOperator(sys, std::move(neg))};
}

// ---- Uhlmann --------------------------------------------------------------------

LinearMapOnRegisters uhlmann_isometry(const Ket& rho_pure, const Ket& sigma_pure) {
  std::vector<std::string> shared;
  for (const auto& r : rho_pure.system.registers())
    if (sigma_pure.system.has(r.name)) shared.push_back(r.name);
  return uhlmann_isometry(rho_pure, sigma_pure, shared);
}

LinearMapOnRegisters uhlmann_isometry(const Ket& rho_pure, const Ket& sigma_pure,
                                      const std::vector<std::string>& shared) {
  std::unordered_set<std::string> shared_set(shared.begin(), shared.end());
  for (const auto& n : shared) {
    if (rho_pure.system.dim_of(n) != sigma_pure.system.dim_of(n))
      throw ShapeError("uhlmann_isometry: shared register dimension mismatch");
  }
  std::vector<std::string> rho_own, sigma_own;
  for (const auto& r : rho_pure.system.registers())
    if (!shared_set.count(r.name)) rho_own.push_back(r.name);
  for (const auto& r : sigma_pure.system.registers())
    if (!shared_set.count(r.name)) sigma_own.push_back(r.name);

  std::vector<std::string> rho_order = shared;
  rho_order.insert(rho_order.end(), rho_own.begin(), rho_own.end());
  std::vector<std::string> sigma_order = shared;
  sigma_order.insert(sigma_order.end(), sigma_own.begin(), sigma_own.end());

  Ket r = rho_pure.reordered(rho_order);
  Ket s = sigma_pure.reordered(sigma_order);

  Index da = 1;
  for (const auto& n : shared) da *= rho_pure.system.dim_of(n);
  const Index db = r.amps.size() / da;  // rho's private part
  const Index dc = s.amps.size() / da;  // sigma's private part

  // Coefficient matrices: |rho> = sum R[a,b] |a>|b>, |sigma> = sum S[a,c] |a>|c>.
  cmat R(da, db), S(da, dc);
  for (Index a = 0; a < da; ++a) {
    for (Index b = 0; b < db; ++b) R(a, b) = r.amps(a * db + b);
    for (Index c = 0; c < dc; ++c) S(a, c) = s.amps(a * dc + c);
  }

  // Overlap <rho|(I x V)|sigma> = Tr(V G) with G = S^T conj(R); the optimum
  // over isometries is the trace norm of G, reached at V = W U^dag.
  cmat G = S.transpose() * R.conjugate();  // dc x db
  Eigen::JacobiSVD<cmat> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);

  // Schmidt rank of sigma across the (shared | private) cut.
  Eigen::JacobiSVD<cmat> ssvd(S);
  Index schmidt_rank = 0;
  const double smax = ssvd.singularValues().size() ? ssvd.singularValues()(0) : 0.0;
  for (Eigen::Index i = 0; i < ssvd.singularValues().size(); ++i)
    if (ssvd.singularValues()(i) > tol::kRankRel * smax) ++schmidt_rank;
  if (db < schmidt_rank)
    throw ShapeError("uhlmann_isometry: codomain too small to carry the support");

  cmat V = svd.matrixV() * svd.matrixU().adjoint();  // db x dc

  LinearMapOnRegisters out;
  for (const auto& n : sigma_own)
    out.domain.push_back({n, sigma_pure.system.dim_of(n)});
  for (const auto& n : rho_own) out.codomain.push_back({n, rho_pure.system.dim_of(n)});
  out.matrix = std::move(V);
  out.isometry = db >= dc;
  out.unitary = db == dc;
  return out;
}

}  // namespace qsw
