#include "qsw/regions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "qsw/divergences.hpp"
#include "qsw/surgery.hpp"

namespace qsw {

RateRegion region_from_cvalues(double c_r1, double c_r2, double c_sum) {
  RateRegion region;
  region.constraints = {{1, 0, c_r1}, {0, 1, c_r2}, {1, 1, c_sum}};
  if (c_sum <= c_r1 + c_r2 + 1e-12) {
    region.corners = {{c_r1, c_r2}};
  } else {
    region.corners = {{c_r1, c_sum - c_r1}, {c_sum - c_r2, c_r2}};
  }
  std::sort(region.corners.begin(), region.corners.end());

  // Boundary polyline: down the R1 = c_r1 edge, along the sum edge, out the
  // R2 = c_r2 edge.
  const double pad = 1.0 + std::max({std::abs(c_r1), std::abs(c_r2), std::abs(c_sum)});
  region.samples.push_back({region.corners.front().first, pad});
  for (const auto& c : region.corners) region.samples.push_back(c);
  region.samples.push_back({pad, region.corners.back().second});
  return region;
}

RateRegion region_from_certificate(const Certificate& cert, double eps2, double delta) {
  const double log_term = std::log2(1.0 / (eps2 * eps2 * delta));
  const double c1 = 0.5 * (cert.dmax_terms[0] - cert.dh_terms[0] + log_term);
  const double c2 = 0.5 * (cert.dmax_terms[1] - cert.dh_terms[1] + log_term);
  const double cs =
      0.5 * (cert.dmax_terms[2] - cert.dh_terms[0] - cert.dh_terms[1] + log_term);
  return region_from_cvalues(c1, c2, cs);
}

RateRegion oneshot_region(const ProtocolInstance& inst) {
  Certificate cert = plan_rates(inst);
  return region_from_certificate(cert, inst.eps2, inst.delta);
}

RateRegion iid_region(const Ket& psi, const std::string& reg_r, const std::string& reg_a,
                      const std::string& reg_m, const std::string& reg_b,
                      const std::string& reg_n) {
  DensityOperator rho = to_density(psi);
  const std::vector<std::string> rab{reg_r, reg_a, reg_b};
  const double i_rab_m = mutual_information(rho, {rab, {reg_m}});
  const double i_rab_n = mutual_information(rho, {rab, {reg_n}});
  const double i_tri = mutual_information(rho, {rab, {reg_m}, {reg_n}});
  const double i_a_m = mutual_information(rho, {{reg_a}, {reg_m}});
  const double i_b_n = mutual_information(rho, {{reg_b}, {reg_n}});
  return region_from_cvalues(0.5 * (i_rab_m - i_a_m), 0.5 * (i_rab_n - i_b_n),
                             0.5 * (i_tri - i_a_m - i_b_n));
}

RateRegion converse_region(const DensityOperator& psi_prime_rmn,
                           const DensityOperator& psi_r, const DensityOperator& sigma_m,
                           const DensityOperator& omega_n, const std::string& reg_r,
                           const std::string& reg_m, const std::string& reg_n) {
  DensityOperator pr = partial_trace(psi_prime_rmn, {reg_r});
  DensityOperator psi_r_named = with_names(psi_r, {reg_r});
  if ((pr.matrix - psi_r_named.matrix).cwiseAbs().maxCoeff() > 1e-8)
    throw ContractViolation("converse_region: psi'_R must equal psi_R");

  DensityOperator sig = with_names(sigma_m, {reg_m});
  DensityOperator ome = with_names(omega_n, {reg_n});
  DensityOperator prm = partial_trace(psi_prime_rmn, {reg_r, reg_m});
  DensityOperator prn = partial_trace(psi_prime_rmn, {reg_r, reg_n});
  DensityOperator prmn = partial_trace(psi_prime_rmn, {reg_r, reg_m, reg_n});

  const double c1 =
      0.5 * dmax(prm, tensor(psi_r_named, sig).reordered(prm.system.names())).value;
  const double c2 =
      0.5 * dmax(prn, tensor(psi_r_named, ome).reordered(prn.system.names())).value;
  const double cs = 0.5 * dmax(prmn, tensor(tensor(psi_r_named, sig), ome)
                                         .reordered(prmn.system.names()))
                              .value;
  return region_from_cvalues(c1, c2, cs);
}

std::vector<ConvergenceRow> iid_consistency_table(const Ket& psi_rmn,
                                                  const std::string& reg_r,
                                                  const std::string& reg_m,
                                                  const std::string& reg_n, Index n_max,
                                                  double delta, double eps2) {
  // i.i.d. targets (A, B trivial).
  DensityOperator rho = to_density(psi_rmn);
  const double t1 = 0.5 * mutual_information(rho, {{reg_r}, {reg_m}});
  const double t2 = 0.5 * mutual_information(rho, {{reg_r}, {reg_n}});
  const double ts = 0.5 * mutual_information(rho, {{reg_r}, {reg_m}, {reg_n}});

  const double dh_identity = std::log2(1.0 / (1.0 - eps2 * eps2));
  const double log_term = std::log2(1.0 / (eps2 * eps2 * delta));

  std::vector<ConvergenceRow> rows;
  for (Index n = 1; n <= n_max; ++n) {
    SurgeryOutput so = smoothed_state_pipeline(psi_rmn, reg_r, reg_m, reg_n, n, delta);
    ConvergenceRow row;
    row.n = n;
    row.c_r1 = 0.5 * (so.report.dmax_rm - dh_identity + log_term) / double(n);
    row.c_r2 = 0.5 * (so.report.dmax_rn - dh_identity + log_term) / double(n);
    row.c_sum = 0.5 * (so.report.dmax_rmn - 2.0 * dh_identity + log_term) / double(n);
    row.iid_r1 = t1;
    row.iid_r2 = t2;
    row.iid_sum = ts;
    rows.push_back(row);
  }
  return rows;
}

namespace {
std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}
}  // namespace

std::string export_convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream os;
  os << "n,c_r1,c_r2,c_sum,iid_r1,iid_r2,iid_sum\n";
  for (const auto& r : rows)
    os << r.n << "," << fmt_num(r.c_r1) << "," << fmt_num(r.c_r2) << ","
       << fmt_num(r.c_sum) << "," << fmt_num(r.iid_r1) << "," << fmt_num(r.iid_r2)
       << "," << fmt_num(r.iid_sum) << "\n";
  return os.str();
}

std::string export_region(const RateRegion& region, RegionFormat format) {
  if (format == RegionFormat::csv) {
    std::ostringstream os;
    os << "R1,R2,kind\n";
    if (region.constraints.empty()) {
      os << "0,0,unconstrained\n";
      return os.str();
    }
    for (const auto& h : region.constraints) {
      // The threshold appears in each active coordinate.
      os << fmt_num(h.a1 ? h.c : 0.0) << "," << fmt_num(h.a2 ? h.c : 0.0) << ",";
      if (h.a1 && h.a2)
        os << "constraint_sum";
      else if (h.a1)
        os << "constraint_r1";
      else
        os << "constraint_r2";
      os << "\n";
    }
    for (const auto& c : region.corners)
      os << fmt_num(c.first) << "," << fmt_num(c.second) << ",corner\n";
    return os.str();
  }
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["constraints"] = nlohmann::ordered_json::array();
  for (const auto& h : region.constraints)
    j["constraints"].push_back({{"a1", h.a1}, {"a2", h.a2}, {"c", h.c}});
  j["corners"] = nlohmann::ordered_json::array();
  for (const auto& c : region.corners) j["corners"].push_back({c.first, c.second});
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : region.samples) j["samples"].push_back({s.first, s.second});
  return j.dump();
}

}  // namespace qsw
