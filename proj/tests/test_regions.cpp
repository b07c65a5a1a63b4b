#include <doctest.h>

#include "qsw/regions.hpp"
#include "test_helpers.hpp"

using namespace qsw;
using namespace qsw::testing;

namespace {
Ket ghz_with_trivial_sides() {
  Ket g = ghz("R", "M", "N");
  std::vector<Register> regs;
  for (const auto& r : g.system.registers()) regs.push_back(r);
  regs.push_back({"A", 1});
  regs.push_back({"B", 1});
  return Ket(RegisterSystem(regs), g.amps);
}
}  // namespace

TEST_CASE("region geometry") {
  RateRegion r = region_from_cvalues(0.5, 0.5, 1.5);
  REQUIRE(r.corners.size() == 2);
  CHECK(r.corners[0].first == doctest::Approx(0.5));
  CHECK(r.corners[0].second == doctest::Approx(1.0));
  CHECK(r.corners[1].first == doctest::Approx(1.0));
  CHECK(r.corners[1].second == doctest::Approx(0.5));

  // Inactive sum constraint collapses to one corner.
  RateRegion q = region_from_cvalues(1.0, 2.0, 2.5);
  REQUIRE(q.corners.size() == 1);
  CHECK(q.corners[0].first == doctest::Approx(1.0));
  CHECK(q.corners[0].second == doctest::Approx(2.0));

  // Every corner satisfies every constraint.
  for (const auto& region : {r, q})
    for (const auto& c : region.corners)
      for (const auto& h : region.constraints)
        CHECK(h.a1 * c.first + h.a2 * c.second >= h.c - 1e-9);
}

TEST_CASE("iid region of GHZ") {
  RateRegion region = iid_region(ghz_with_trivial_sides(), "R", "A", "M", "B", "N");
  REQUIRE(region.corners.size() == 2);
  CHECK(region.corners[0].first == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(region.corners[0].second == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(region.corners[1].first == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(region.corners[1].second == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("iid region of a product state is free") {
  Ket prod = tensor(
      {random_haar_ket(RegisterSystem::single("R", 2), 1),
       random_haar_ket(RegisterSystem::single("A", 2), 2),
       random_haar_ket(RegisterSystem::single("M", 2), 3),
       random_haar_ket(RegisterSystem::single("B", 2), 4),
       random_haar_ket(RegisterSystem::single("N", 2), 5)});
  RateRegion region = iid_region(prod, "R", "A", "M", "B", "N");
  for (const auto& h : region.constraints) CHECK(std::abs(h.c) < 1e-9);
}

TEST_CASE("iid region with trivial B,N reduces to state redistribution") {
  // c_A = (I(RA:M) - I(A:M))/2, c_B = 0.
  Ket psi = near_product_ket(qubits({"R", "A", "M"}), 3, 0.4);
  std::vector<Register> regs;
  for (const auto& r : psi.system.registers()) regs.push_back(r);
  regs.push_back({"B", 1});
  regs.push_back({"N", 1});
  Ket padded(RegisterSystem(regs), psi.amps);
  RateRegion region = iid_region(padded, "R", "A", "M", "B", "N");
  DensityOperator rho = to_density(padded);
  const double expect = 0.5 * (mutual_information(rho, {{"R", "A", "B"}, {"M"}}) -
                               mutual_information(rho, {{"A"}, {"M"}}));
  CHECK(region.constraints[0].c == doctest::Approx(expect).epsilon(1e-9));
  CHECK(std::abs(region.constraints[1].c) < 1e-9);
  REQUIRE(region.corners.size() == 1);
}

TEST_CASE("oneshot region grows with eps2") {
  ProtocolInstance inst;
  Ket g = ghz("R", "M", "N");
  std::vector<Register> regs;
  for (const auto& r : g.system.registers()) regs.push_back(r);
  regs.push_back({"A", 1});
  regs.push_back({"B", 1});
  regs.push_back({"C", 1});
  inst.psi = Ket(RegisterSystem(regs), g.amps);
  inst.sigma_m = partial_trace(inst.psi, {"M"});
  inst.omega_n = partial_trace(inst.psi, {"N"});
  inst.eps1 = 0.05;
  inst.delta = 0.01;

  inst.eps2 = 0.05;
  RateRegion small = oneshot_region(inst);
  inst.eps2 = 0.15;
  RateRegion big = oneshot_region(inst);
  for (size_t i = 0; i < 3; ++i)
    CHECK(big.constraints[i].c <= small.constraints[i].c + 1e-9);
}

TEST_CASE("converse bounds sit below the achievable region by the stated gap") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Ket psi = near_product_ket(qubits({"R", "M", "N"}), seed, 0.2);
    ProtocolInstance inst;
    std::vector<Register> regs;
    for (const auto& r : psi.system.registers()) regs.push_back(r);
    regs.push_back({"A", 1});
    regs.push_back({"B", 1});
    regs.push_back({"C", 1});
    inst.psi = Ket(RegisterSystem(regs), psi.amps);
    inst.sigma_m = partial_trace(inst.psi, {"M"});
    inst.omega_n = partial_trace(inst.psi, {"N"});
    inst.eps1 = 0.05;
    inst.eps2 = 0.1;
    inst.delta = 0.01;

    Certificate cert = plan_rates(inst);
    RateRegion achievable = region_from_certificate(cert, inst.eps2, inst.delta);
    RateRegion converse =
        converse_region(partial_trace(inst.psi, {"R", "M", "N"}),
                        partial_trace(inst.psi, {"R"}), inst.sigma_m, inst.omega_n,
                        "R", "M", "N");
    // With psi' = psi on both sides the gap is exactly
    // (log(1/(eps2^2 delta)) - D_H)/2 per constraint.
    const double log_term = std::log2(1.0 / (inst.eps2 * inst.eps2 * inst.delta));
    CHECK(achievable.constraints[0].c - converse.constraints[0].c ==
          doctest::Approx(0.5 * (log_term - cert.dh_terms[0])).epsilon(1e-7));
    CHECK(achievable.constraints[1].c - converse.constraints[1].c ==
          doctest::Approx(0.5 * (log_term - cert.dh_terms[1])).epsilon(1e-7));
  }
}

TEST_CASE("converse bounds respect the message-register cap") {
  // Charlie sending M and N directly: each bound is at most log |register|.
  Ket psi = near_product_ket(qubits({"R", "M", "N"}), 9, 0.5);
  RateRegion conv = converse_region(partial_trace(psi, {"R", "M", "N"}),
                                    partial_trace(psi, {"R"}),
                                    maximally_mixed("M", 2), maximally_mixed("N", 2),
                                    "R", "M", "N");
  CHECK(conv.constraints[0].c <= 1.0 + 1e-9);
  CHECK(conv.constraints[1].c <= 1.0 + 1e-9);
  CHECK(conv.constraints[2].c <= 2.0 + 1e-9);
}

TEST_CASE("converse requires the matching reference marginal") {
  Ket psi = near_product_ket(qubits({"R", "M", "N"}), 2, 0.2);
  DensityOperator wrong = maximally_mixed("R", 2);
  // Generic psi_R is not maximally mixed.
  CHECK_THROWS_AS(converse_region(partial_trace(psi, {"R", "M", "N"}), wrong,
                                  maximally_mixed("M", 2), maximally_mixed("N", 2),
                                  "R", "M", "N"),
                  ContractViolation);
}

TEST_CASE("ghz certificate terms reproduce the region c-values") {
  ProtocolInstance inst;
  Ket g = ghz("R", "M", "N");
  std::vector<Register> regs;
  for (const auto& r : g.system.registers()) regs.push_back(r);
  regs.push_back({"A", 1});
  regs.push_back({"B", 1});
  regs.push_back({"C", 1});
  inst.psi = Ket(RegisterSystem(regs), g.amps);
  inst.sigma_m = partial_trace(inst.psi, {"M"});
  inst.omega_n = partial_trace(inst.psi, {"N"});
  inst.eps1 = 0.05;
  inst.eps2 = 0.1;
  inst.delta = 0.01;
  Certificate cert = plan_rates(inst);
  // GHZ marginals give D_max(Psi_RM || Psi_R x I/2) = 1 and the joint 3 bits.
  CHECK(cert.dmax_terms[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(cert.dmax_terms[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(cert.dmax_terms[2] == doctest::Approx(3.0).epsilon(1e-7));
  RateRegion region = region_from_certificate(cert, inst.eps2, inst.delta);
  const double log_term = std::log2(1.0 / (inst.eps2 * inst.eps2 * inst.delta));
  CHECK(region.constraints[0].c ==
        doctest::Approx(0.5 * (1.0 - cert.dh_terms[0] + log_term)).epsilon(1e-9));
}

TEST_CASE("per-copy c-values drift toward the iid targets") {
  auto rows = iid_consistency_table(ghz("R", "M", "N"), "R", "M", "N", 3, 0.3, 0.1);
  REQUIRE(rows.size() == 3);
  // Targets for GHZ: (1/2, 1/2, 3/2).
  CHECK(rows[0].iid_r1 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rows[0].iid_sum == doctest::Approx(1.5).epsilon(1e-9));
  // The per-copy gap to the target shrinks monotonically at desk scale.
  double prev = 1e300;
  for (const auto& row : rows) {
    const double gap = std::abs(row.c_r1 - row.iid_r1);
    CHECK(gap <= prev + 1e-9);
    prev = gap;
  }
  const std::string csv = export_convergence_csv(rows);
  CHECK(csv.find("n,c_r1") == 0);
}

TEST_CASE("export determinism") {
  RateRegion region = iid_region(ghz_with_trivial_sides(), "R", "A", "M", "B", "N");
  const std::string csv1 = export_region(region, RegionFormat::csv);
  const std::string csv2 = export_region(region, RegionFormat::csv);
  CHECK(csv1 == csv2);
  CHECK(csv1.find("corner") != std::string::npos);
  CHECK(csv1.find("constraint_sum") != std::string::npos);
  // 3 constraint rows + 2 corner rows + header.
  int lines = 0;
  for (char c : csv1)
    if (c == '\n') ++lines;
  CHECK(lines == 6);

  const std::string js = export_region(region, RegionFormat::json);
  CHECK(js.find("\"schema\":1") != std::string::npos);
}
