// Command-line front end: instance generation, entropic quantities, the
// convex-split / decoding / protocol / surgery verifications and rate-region
// export. All reports are JSON (schema 1) on stdout or --out.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsw/convexsplit.hpp"
#include "qsw/decoder.hpp"
#include "qsw/divergences.hpp"
#include "qsw/io.hpp"
#include "qsw/protocol.hpp"
#include "qsw/random.hpp"
#include "qsw/regions.hpp"
#include "qsw/surgery.hpp"

using json = nlohmann::ordered_json;
using namespace qsw;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ONESHOT_QSW_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 7;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
  }
}

RegisterSystem parse_registers(const std::string& spec) {
  std::vector<Register> regs;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw DomainError("register spec must be name:dim[,name:dim...]");
    regs.push_back({item.substr(0, colon), std::stoll(item.substr(colon + 1))});
  }
  return RegisterSystem(regs);
}

std::vector<std::string> split_names(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_probs(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_names(s, ',')) out.push_back(std::stod(tok));
  return out;
}

int run_selftest(bool quick, double tol, int jobs) {
  // The named checks run as independent batches; with --jobs N they are
  // distributed over N threads (all library calls are pure), and results are
  // reported in a fixed order regardless of scheduling.
  struct Check {
    std::string name;
    std::function<bool()> run;
  };
  std::vector<Check> checks;
  auto add = [&](std::string name, std::function<bool()> fn) {
    checks.push_back({std::move(name), std::move(fn)});
  };

  const int reps = quick ? 10 : 50;

  add("triangle inequality", [reps] {
    for (int s = 1; s <= reps; ++s) {
      auto sys = RegisterSystem::single("A", 4);
      auto r = random_mixed(sys, s * 3), t = random_mixed(sys, s * 3 + 1),
           u = random_mixed(sys, s * 3 + 2);
      if (fidelity_pd(r, u).purified_distance >
          fidelity_pd(r, t).purified_distance +
              fidelity_pd(t, u).purified_distance + 1e-9)
        return false;
    }
    return true;
  });
  add("monotonicity under partial trace", [reps] {
    for (int s = 1; s <= reps; ++s) {
      RegisterSystem sys({{"A", 2}, {"B", 2}});
      auto r = random_mixed(sys, s * 7), t = random_mixed(sys, s * 7 + 1);
      if (fidelity_pd(partial_trace(r, {"A"}), partial_trace(t, {"A"})).fidelity <
          fidelity_pd(r, t).fidelity - 1e-9)
        return false;
      if (dmax(r, t).value <
          dmax(partial_trace(r, {"A"}), partial_trace(t, {"A"})).value - 1e-9)
        return false;
    }
    return true;
  });
  add("hypothesis test identity D_H(rho||rho)", [reps, tol] {
    for (int s = 1; s <= reps; ++s) {
      auto rho = random_mixed(RegisterSystem::single("A", 3), s * 11);
      for (double eps : {0.1, 0.5}) {
        auto res = optimal_test(rho, rho, eps);
        if (std::abs(res.value - std::log2(1.0 / (1.0 - eps))) >= tol) return false;
      }
    }
    return true;
  });
  add("Hayashi-Nagaoka residual", [reps] {
    for (int s = 1; s <= 4 * reps; ++s) {
      const Index d = 2 + (s % 5);
      if (hayashi_nagaoka_residual(random_contraction(d, s * 2),
                                   random_contraction(d, s * 2 + 1)) < -1e-9)
        return false;
    }
    return true;
  });
  add("Uhlmann overlap equality", [reps] {
    for (int s = 1; s <= reps; ++s) {
      auto ra = random_mixed(RegisterSystem::single("A", 3), s * 5);
      auto sa = random_mixed(RegisterSystem::single("A", 3), s * 5 + 1);
      Ket rp = purify(ra, "B"), sp = purify(sa, "C");
      Ket theta = apply_on(sp, uhlmann_isometry(rp, sp), true);
      if (std::abs(fidelity_pd(theta, rp).fidelity - fidelity_pd(ra, sa).fidelity) >=
          1e-9)
        return false;
    }
    return true;
  });
  add("convex split product instance", [] {
    ConvexSplitInstance inst;
    auto r = random_mixed(RegisterSystem::single("R", 2), 3);
    auto a = random_mixed(RegisterSystem::single("A", 2), 4);
    auto b = random_mixed(RegisterSystem::single("B", 2), 5);
    inst.rho_rab = tensor(tensor(r, a), b);
    inst.rho_prime_rab = inst.rho_rab;
    inst.sigma_a = a;
    inst.omega_b = b;
    inst.reg_r = "R";
    inst.reg_a = "A";
    inst.reg_b = "B";
    inst.r_a = inst.r_b = 1;
    inst.delta = 0.1;
    inst.epsilon = 0.0;
    auto rep = verify_lemma(inst);
    return rep.exact_p && *rep.exact_p < 1e-9;
  });
  add("information spectrum ordering", [reps] {
    for (int s = 1; s <= reps; ++s) {
      auto a = random_mixed(RegisterSystem::single("A", 3), s * 13);
      auto b = random_mixed(RegisterSystem::single("A", 3), s * 13 + 1);
      if (info_spectrum(a, b, 0.3, SpectrumVariant::plus).value >
          info_spectrum(a, b, 0.7, SpectrumVariant::minus).value + 1e-8)
        return false;
    }
    return true;
  });
  add("gentle measurement", [reps] {
    for (int s = 1; s <= reps; ++s) {
      auto sys = RegisterSystem::single("A", 4);
      auto rho = random_mixed(sys, s * 17);
      cmat a = random_contraction(4, s * 17 + 1);
      cmat cut = a * rho.matrix * a;
      const double mass = cut.trace().real();
      if (mass < 1e-6) continue;
      DensityOperator out(sys, hermitize(cut / mass));
      if (fidelity_pd(rho, out).fidelity < std::sqrt(mass) - 1e-9) return false;
    }
    return true;
  });

  std::vector<char> results(checks.size(), 0);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= checks.size()) break;
      bool ok = false;
      try {
        ok = checks[i].run();
      } catch (...) {
        ok = false;
      }
      results[i] = ok ? 1 : 0;
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, int(checks.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int failures = 0;
  for (size_t i = 0; i < checks.size(); ++i) {
    std::cout << (results[i] ? "pass" : "FAIL") << "  " << checks[i].name << "\n";
    if (!results[i]) ++failures;
  }

  std::cout << (failures == 0 ? "selftest ok" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

json region_to_json(const RateRegion& region) {
  return json::parse(export_region(region, RegionFormat::json));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot distributed quantum source compression toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // --tol / --jobs may follow the subcommand
  double tol = 1e-7;
  app.add_option("--tol", tol, "assertion tolerance (default 1e-7)");
  int jobs = 1;
  app.add_option("--jobs", jobs, "parallel instance batches (batch drivers only)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a seeded state file");
  std::string gen_regs = "R:2,M:2,N:2", gen_kind = "haar_pure", gen_out;
  std::uint64_t gen_seed = default_seed();
  double gen_t = 0.1;
  gen->add_option("--registers", gen_regs, "name:dim list");
  gen->add_option("--kind", gen_kind, "haar_pure|mixed|classical|near_product");
  gen->add_option("--seed", gen_seed, "RNG seed (default $ONESHOT_QSW_SEED or 7)");
  gen->add_option("--t", gen_t, "near_product admixture");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  // ---- entropy ----
  auto* ent = app.add_subcommand("entropy", "entropies and mutual informations");
  std::string ent_in, ent_pairs, ent_tri, ent_out;
  ent->add_option("--in", ent_in, "state file")->required();
  ent->add_option("--pairs", ent_pairs, "pair list, e.g. R:M,R:N");
  ent->add_option("--tri", ent_tri, "triple, e.g. R:M:N");
  ent->add_option("--out", ent_out, "output path");

  // ---- convex-split ----
  auto* cs = app.add_subcommand("convex-split", "tripartite convex-split report");
  std::string cs_rho, cs_rho_prime, cs_sigma, cs_omega, cs_out;
  std::string cs_r = "R", cs_a = "A", cs_b = "B";
  Index cs_ra = 1, cs_rb = 1;
  double cs_delta = 0.1, cs_eps = 0.0;
  bool cs_dense = false;
  cs->add_option("--rho", cs_rho)->required();
  cs->add_option("--rho-prime", cs_rho_prime);
  cs->add_option("--sigma", cs_sigma)->required();
  cs->add_option("--omega", cs_omega)->required();
  cs->add_option("--reg-r", cs_r);
  cs->add_option("--reg-a", cs_a);
  cs->add_option("--reg-b", cs_b);
  cs->add_option("--ra", cs_ra);
  cs->add_option("--rb", cs_rb);
  cs->add_option("--delta", cs_delta);
  cs->add_option("--eps", cs_eps);
  cs->add_flag("--dense", cs_dense, "also verify the lemma densely");
  cs->add_option("--out", cs_out);

  // ---- decode ----
  auto* dec = app.add_subcommand("decode", "coherent decoding fidelity report");
  std::string dec_psi, dec_sigma, dec_omega, dec_out;
  std::string dec_a = "A", dec_m = "M", dec_b = "B", dec_n = "N";
  double dec_eps2 = 0.75;
  Index dec_ra = 1, dec_rb = 1;
  dec->add_option("--psi", dec_psi)->required();
  dec->add_option("--sigma", dec_sigma)->required();
  dec->add_option("--omega", dec_omega)->required();
  dec->add_option("--reg-a", dec_a);
  dec->add_option("--reg-m", dec_m);
  dec->add_option("--reg-b", dec_b);
  dec->add_option("--reg-n", dec_n);
  dec->add_option("--eps2", dec_eps2);
  dec->add_option("--ra", dec_ra);
  dec->add_option("--rb", dec_rb);
  dec->add_option("--out", dec_out);

  // ---- protocol ----
  auto* prot = app.add_subcommand("protocol", "plan rates / run the coding theorem");
  auto* prot_plan = prot->add_subcommand("plan", "certificate only");
  auto* prot_run = prot->add_subcommand("run", "micro-scale end-to-end run");
  std::string pr_in, pr_psi, pr_sigma, pr_omega, pr_out;
  double pr_eps1 = 0.05, pr_eps2 = 0.1, pr_delta = 0.01;
  Index pr_block_a = -1, pr_pos_a = -1, pr_block_b = -1, pr_pos_b = -1;
  bool pr_emit_states = false;
  for (auto* sub : {prot_plan, prot_run}) {
    sub->add_option("--in", pr_in, "instance JSON (psi/sigma/omega/eps inline)");
    sub->add_option("--psi", pr_psi);
    sub->add_option("--sigma", pr_sigma);
    sub->add_option("--omega", pr_omega);
    sub->add_option("--eps1", pr_eps1);
    sub->add_option("--eps2", pr_eps2);
    sub->add_option("--delta", pr_delta);
    sub->add_option("--out", pr_out);
  }
  prot_run->add_option("--block-a", pr_block_a, "override log2 |J1|");
  prot_run->add_option("--pos-a", pr_pos_a, "override log2 per-block positions");
  prot_run->add_option("--block-b", pr_block_b);
  prot_run->add_option("--pos-b", pr_pos_b);
  prot_run->add_flag("--emit-states", pr_emit_states);

  // ---- surgery ----
  auto* surg = app.add_subcommand("surgery", "state surgery pipeline");
  auto* surg_run = surg->add_subcommand("run", "pipeline + verification");
  std::string sg_in, sg_out;
  std::string sg_r = "R", sg_m = "M", sg_n = "N";
  Index sg_n_copies = 2;
  double sg_delta = 0.3;
  surg_run->add_option("--in", sg_in)->required();
  surg_run->add_option("--n", sg_n_copies);
  surg_run->add_option("--delta", sg_delta);
  surg_run->add_option("--reg-r", sg_r);
  surg_run->add_option("--reg-m", sg_m);
  surg_run->add_option("--reg-n", sg_n);
  surg_run->add_option("--out", sg_out);

  auto* surg_so = surg->add_subcommand("second-order", "classical D_H vs the estimate");
  std::string so_p = "0.5,0.5", so_q = "0.9,0.1", so_out;
  double so_eps = 0.25;
  Index so_nmin = 4, so_nmax = 20;
  surg_so->add_option("--p", so_p);
  surg_so->add_option("--q", so_q);
  surg_so->add_option("--eps", so_eps);
  surg_so->add_option("--nmin", so_nmin);
  surg_so->add_option("--nmax", so_nmax);
  surg_so->add_option("--out", so_out);

  // ---- region ----
  auto* reg = app.add_subcommand("region", "rate regions");
  auto* reg_iid = reg->add_subcommand("iid", "i.i.d. region (C trivial)");
  auto* reg_one = reg->add_subcommand("oneshot", "one-shot achievable region");
  auto* reg_conv = reg->add_subcommand("converse", "converse lower bounds");
  auto* reg_table = reg->add_subcommand(
      "converge", "per-copy one-shot c-values vs the i.i.d. targets");
  std::string tb_in, tb_out;
  Index tb_nmax = 3;
  double tb_delta = 0.3, tb_eps2 = 0.1;
  reg_table->add_option("--in", tb_in)->required();
  reg_table->add_option("--nmax", tb_nmax);
  reg_table->add_option("--delta", tb_delta);
  reg_table->add_option("--eps2", tb_eps2);
  reg_table->add_option("--out", tb_out);
  std::string rg_in, rg_out, rg_format = "csv";
  std::string rg_r = "R", rg_a = "A", rg_m = "M", rg_b = "B", rg_n = "N";
  std::string rg_sigma, rg_omega, rg_psi_r;
  double rg_eps1 = 0.05, rg_eps2 = 0.1, rg_delta = 0.01;
  for (auto* sub : {reg_iid, reg_one, reg_conv}) {
    sub->add_option("--in", rg_in)->required();
    sub->add_option("--format", rg_format, "csv|json");
    sub->add_option("--out", rg_out);
    sub->add_option("--reg-r", rg_r);
    sub->add_option("--reg-m", rg_m);
    sub->add_option("--reg-n", rg_n);
  }
  reg_iid->add_option("--reg-a", rg_a);
  reg_iid->add_option("--reg-b", rg_b);
  reg_one->add_option("--reg-a", rg_a);
  reg_one->add_option("--reg-b", rg_b);
  reg_one->add_option("--sigma", rg_sigma)->required();
  reg_one->add_option("--omega", rg_omega)->required();
  reg_one->add_option("--eps1", rg_eps1);
  reg_one->add_option("--eps2", rg_eps2);
  reg_one->add_option("--delta", rg_delta);
  reg_conv->add_option("--sigma", rg_sigma)->required();
  reg_conv->add_option("--omega", rg_omega)->required();
  reg_conv->add_option("--psi-r", rg_psi_r, "reference marginal state file");

  // ---- selftest ----
  auto* self = app.add_subcommand("selftest", "run the invariant suites");
  bool self_quick = false;
  self->add_flag("--quick", self_quick);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      RegisterSystem sys = parse_registers(gen_regs);
      StateVariant state;
      if (gen_kind == "haar_pure")
        state = random_haar_ket(sys, gen_seed);
      else if (gen_kind == "mixed" || gen_kind == "mixed_by_tracing")
        state = random_mixed(sys, gen_seed);
      else if (gen_kind == "classical" || gen_kind == "classical_diag")
        state = random_classical_diag(sys, gen_seed);
      else if (gen_kind == "near_product")
        state = random_near_product(sys, gen_seed, gen_t);
      else
        throw DomainError("unknown kind: " + gen_kind);
      if (gen_out.empty()) {
        if (std::holds_alternative<Ket>(state))
          std::cout << to_json_string(std::get<Ket>(state)) << "\n";
        else
          std::cout << to_json_string(std::get<DensityOperator>(state)) << "\n";
      } else {
        save_state(state, gen_out);
      }
      return 0;
    }

    if (*ent) {
      DensityOperator rho = as_density(load_state(ent_in));
      json out;
      out["schema"] = 1;
      out["entropy_bits"] = entropy(rho);
      if (!ent_pairs.empty()) {
        json pairs = json::object();
        for (const auto& pair : split_names(ent_pairs, ',')) {
          auto parts = split_names(pair, ':');
          if (parts.size() != 2) throw DomainError("pair must look like R:M");
          pairs[pair] = mutual_information(rho, {{parts[0]}, {parts[1]}});
        }
        out["pairs"] = pairs;
      }
      if (!ent_tri.empty()) {
        auto parts = split_names(ent_tri, ':');
        if (parts.size() != 3) throw DomainError("tri must look like R:M:N");
        out["tri"] = {{ent_tri, mutual_information(
                                    rho, {{parts[0]}, {parts[1]}, {parts[2]}})}};
      }
      emit(out, ent_out);
      return 0;
    }

    if (*cs) {
      ConvexSplitInstance inst;
      inst.rho_rab = as_density(load_state(cs_rho));
      inst.rho_prime_rab =
          cs_rho_prime.empty() ? inst.rho_rab : as_density(load_state(cs_rho_prime));
      inst.sigma_a = as_density(load_state(cs_sigma));
      inst.omega_b = as_density(load_state(cs_omega));
      inst.reg_r = cs_r;
      inst.reg_a = cs_a;
      inst.reg_b = cs_b;
      inst.r_a = cs_ra;
      inst.r_b = cs_rb;
      inst.delta = cs_delta;
      inst.epsilon = cs_eps;
      inst.validate();
      ConvexSplitReport rep = cs_dense ? verify_lemma(inst) : certified_bound(inst);
      json out;
      out["schema"] = 1;
      out["k1"] = rep.k1;
      out["k2"] = rep.k2;
      out["k3"] = rep.k3;
      out["dmax_r"] = rep.dmax_r;
      out["delta_check"] = rep.delta_check;
      out["delta_eff"] = rep.delta_eff;
      out["certified_p"] = rep.certified_p;
      out["relent_bound"] = rep.relent_bound;
      if (rep.exact_p) out["exact_p"] = *rep.exact_p;
      if (rep.exact_relent) out["exact_relent"] = *rep.exact_relent;
      emit(out, cs_out);
      if (rep.exact_p &&
          *rep.exact_p > inst.epsilon + 2.0 * std::sqrt(rep.delta_eff) + tol)
        return 1;
      return 0;
    }

    if (*dec) {
      StateVariant psi_v = load_state(dec_psi);
      if (!std::holds_alternative<Ket>(psi_v))
        throw DomainError("decode: psi must be pure");
      auto rep = decode_fidelity_check(std::get<Ket>(psi_v), {dec_a}, {dec_m}, {dec_b}, {dec_n},
                               as_density(load_state(dec_sigma)),
                               as_density(load_state(dec_omega)), dec_eps2, dec_ra,
                               dec_rb);
      json out;
      out["schema"] = 1;
      out["dh_a"] = rep.dh_a;
      out["dh_b"] = rep.dh_b;
      out["precondition_a"] = rep.precondition_a;
      out["precondition_b"] = rep.precondition_b;
      out["f2"] = rep.f2;
      out["bound"] = rep.bound;
      out["diag_lower"] = rep.diag_lower;
      out["wrong_decode_mass"] = rep.wrong_decode_mass;
      out["chain_bound"] = rep.chain_bound;
      emit(out, dec_out);
      if (rep.precondition_a && rep.precondition_b && rep.f2 < rep.bound - tol) return 1;
      return 0;
    }

    if (*prot_plan || *prot_run) {
      ProtocolInstance inst;
      if (!pr_in.empty()) {
        std::ifstream f(pr_in);
        if (!f) throw DomainError("cannot open instance file: " + pr_in);
        std::stringstream ss;
        ss << f.rdbuf();
        json j = json::parse(ss.str());
        StateVariant psi_v = state_from_json_string(j.at("psi").dump());
        if (!std::holds_alternative<Ket>(psi_v))
          throw DomainError("protocol: psi must be pure");
        inst.psi = std::get<Ket>(psi_v);
        inst.sigma_m = as_density(state_from_json_string(j.at("sigma").dump()));
        inst.omega_n = as_density(state_from_json_string(j.at("omega").dump()));
        if (j.contains("psi_prime"))
          inst.psi_prime = as_density(state_from_json_string(j.at("psi_prime").dump()));
        inst.eps1 = j.value("eps1", pr_eps1);
        inst.eps2 = j.value("eps2", pr_eps2);
        inst.delta = j.value("delta", pr_delta);
      } else {
        if (pr_psi.empty() || pr_sigma.empty() || pr_omega.empty())
          throw DomainError("protocol: need --in or all of --psi/--sigma/--omega");
        StateVariant psi_v = load_state(pr_psi);
        if (!std::holds_alternative<Ket>(psi_v))
          throw DomainError("protocol: psi must be pure");
        inst.psi = std::get<Ket>(psi_v);
        inst.sigma_m = as_density(load_state(pr_sigma));
        inst.omega_n = as_density(load_state(pr_omega));
        inst.eps1 = pr_eps1;
        inst.eps2 = pr_eps2;
        inst.delta = pr_delta;
      }
      Certificate cert = plan_rates(inst);
      json cj;
      cj["schema"] = 1;
      cj["dmax_terms"] = {cert.dmax_terms[0], cert.dmax_terms[1], cert.dmax_terms[2]};
      cj["dh_terms"] = {cert.dh_terms[0], cert.dh_terms[1]};
      cj["r_a"] = cert.r_a;
      cj["r_b"] = cert.r_b;
      cj["R_a"] = cert.R_a;
      cj["R_b"] = cert.R_b;
      cj["qubits_c_to_a"] = cert.qubits_c_to_a;
      cj["qubits_c_to_b"] = cert.qubits_c_to_b;
      cj["guaranteed_error"] = cert.guaranteed_error;
      cj["hypothesis_ok"] = cert.hypothesis_ok;
      cj["delta_condition_ok"] = cert.delta_condition_ok;
      if (*prot_plan) {
        emit(cj, pr_out);
        return 0;
      }
      RunOptions opts;
      if (pr_block_a >= 0) opts.block_exp_a = pr_block_a;
      if (pr_pos_a >= 0) opts.pos_exp_a = pr_pos_a;
      if (pr_block_b >= 0) opts.block_exp_b = pr_block_b;
      if (pr_pos_b >= 0) opts.pos_exp_b = pr_pos_b;
      opts.keep_states = pr_emit_states;
      Transcript tr = run_task2(inst, cert, opts);
      EndToEndReport rep = verify_end_to_end(inst, cert, tr);
      json out;
      out["schema"] = 1;
      out["certificate"] = cj;
      out["block_exp_a"] = tr.block_exp_a;
      out["pos_exp_a"] = tr.pos_exp_a;
      out["block_exp_b"] = tr.block_exp_b;
      out["pos_exp_b"] = tr.pos_exp_b;
      out["rates_overridden"] = tr.rates_overridden;
      out["qubit_cost_a"] = tr.qubit_cost_a;
      out["qubit_cost_b"] = tr.qubit_cost_b;
      out["gap_split"] = tr.gap_split;
      out["gap_decode"] = tr.gap_decode;
      out["final_p"] = tr.final_p;
      out["final_p_display"] = tr.final_p_display;
      out["chain_bound"] = tr.chain_bound;
      out["delta_eff"] = rep.delta_eff;
      out["delta_flagged"] = rep.delta_flagged;
      out["total_bound"] = rep.total_bound;
      out["all_ok"] = rep.all_ok;
      if (pr_emit_states && tr.final_state)
        out["final_state"] = json::parse(to_json_string(*tr.final_state));
      emit(out, pr_out);
      return rep.all_ok ? 0 : 1;
    }

    if (*surg_run) {
      StateVariant psi_v = load_state(sg_in);
      if (!std::holds_alternative<Ket>(psi_v))
        throw DomainError("surgery: input must be pure");
      SurgeryOutput so =
          smoothed_state_pipeline(std::get<Ket>(psi_v), sg_r, sg_m, sg_n, sg_n_copies,
                                  sg_delta);
      SurgeryVerification v = verify_surgery(so);
      json out;
      out["schema"] = 1;
      out["n"] = so.report.n;
      out["delta"] = so.report.delta;
      out["masses"] = {{"typical_r", so.report.mass_r},
                       {"typical_m", so.report.mass_m},
                       {"typical_n", so.report.mass_n},
                       {"joint", so.report.mass_joint},
                       {"cut_rm", so.report.mass_cut_rm},
                       {"cut_rn", so.report.mass_cut_rn}};
      out["k_rm"] = so.report.k_rm;
      out["k_rn"] = so.report.k_rn;
      out["p_final"] = so.report.p_final;
      out["dmax"] = {{"rm", so.report.dmax_rm},
                     {"rn", so.report.dmax_rn},
                     {"rmn", so.report.dmax_rmn}};
      out["bounds"] = {{"rm", v.rm_bound}, {"rn", v.rn_bound}, {"rmn", v.joint_bound}};
      out["slack"] = {{"rm", v.rm_slack}, {"rn", v.rn_slack}, {"rmn", v.joint_slack}};
      out["flags"] = {{"fidelity_chain", v.fidelity_chain_ok},
                      {"r_marginal", v.r_marginal_ok},
                      {"rm_bound", v.rm_bound_ok},
                      {"rn_bound", v.rn_bound_ok},
                      {"joint_bound", v.joint_bound_ok},
                      {"joint_applicable", v.joint_bound_applicable},
                      {"dual_transfer", v.dual_transfer_ok},
                      {"sandwich", v.sandwich_ok},
                      {"all", v.all_ok}};
      emit(out, sg_out);
      return v.all_ok ? 0 : 1;
    }

    if (*surg_so) {
      auto p = parse_probs(so_p);
      auto q = parse_probs(so_q);
      std::vector<Register> regs{{"X", static_cast<Index>(p.size())}};
      cmat pm = cmat::Zero(regs[0].dim, regs[0].dim), qm = pm;
      for (Index i = 0; i < regs[0].dim; ++i) {
        pm(i, i) = p[static_cast<size_t>(i)];
        qm(i, i) = q[static_cast<size_t>(i)];
      }
      DensityOperator pd(RegisterSystem(regs), pm), qd(RegisterSystem(regs), qm);
      std::ostringstream csv;
      csv << "n,exact,estimate,gap\n";
      for (Index n = so_nmin; n <= so_nmax; ++n) {
        const double exact = classical_dh_iid(p, q, n, so_eps);
        auto est = second_order_estimate(pd, qd, n, so_eps);
        const double estimate = est.dominant + est.dispersion;
        csv.precision(12);
        csv << n << "," << exact << "," << estimate << "," << (exact - estimate) << "\n";
      }
      emit_text(csv.str(), so_out);
      return 0;
    }

    if (*reg_table) {
      StateVariant psi_v = load_state(tb_in);
      if (!std::holds_alternative<Ket>(psi_v))
        throw DomainError("region converge: input must be pure");
      auto rows = iid_consistency_table(std::get<Ket>(psi_v), "R", "M", "N", tb_nmax,
                                        tb_delta, tb_eps2);
      emit_text(export_convergence_csv(rows), tb_out);
      return 0;
    }

    if (*reg_iid || *reg_one || *reg_conv) {
      RateRegion region;
      if (*reg_iid) {
        StateVariant psi_v = load_state(rg_in);
        if (!std::holds_alternative<Ket>(psi_v))
          throw DomainError("region iid: input must be pure");
        region = iid_region(std::get<Ket>(psi_v), rg_r, rg_a, rg_m, rg_b, rg_n);
      } else if (*reg_one) {
        ProtocolInstance inst;
        StateVariant psi_v = load_state(rg_in);
        if (!std::holds_alternative<Ket>(psi_v))
          throw DomainError("region oneshot: input must be pure");
        inst.psi = std::get<Ket>(psi_v);
        inst.reg_r = rg_r;
        inst.reg_a = rg_a;
        inst.reg_m = rg_m;
        inst.reg_b = rg_b;
        inst.reg_n = rg_n;
        inst.sigma_m = as_density(load_state(rg_sigma));
        inst.omega_n = as_density(load_state(rg_omega));
        inst.eps1 = rg_eps1;
        inst.eps2 = rg_eps2;
        inst.delta = rg_delta;
        region = oneshot_region(inst);
      } else {
        DensityOperator psi_prime = as_density(load_state(rg_in));
        DensityOperator psi_r = rg_psi_r.empty()
                                    ? partial_trace(psi_prime, {rg_r})
                                    : as_density(load_state(rg_psi_r));
        region = converse_region(psi_prime, psi_r, as_density(load_state(rg_sigma)),
                                 as_density(load_state(rg_omega)), rg_r, rg_m, rg_n);
      }
      if (rg_format == "csv")
        emit_text(export_region(region, RegionFormat::csv), rg_out);
      else
        emit(region_to_json(region), rg_out);
      return 0;
    }

    if (*self) return run_selftest(self_quick, tol, jobs);
  } catch (const NumericalError& e) {
    std::cerr << "assertion failure: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
