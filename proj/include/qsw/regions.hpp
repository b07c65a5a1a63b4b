#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qsw/protocol.hpp"
#include "qsw/states.hpp"

namespace qsw {

// a1*R1 + a2*R2 >= c with coefficients in {0,1}; c in bits.
struct HalfPlane {
  int a1 = 0, a2 = 0;
  double c = 0.0;
};

// Upward-closed rate region cut out by the three standard constraints.
struct RateRegion {
  std::vector<HalfPlane> constraints;              // R1, R2, sum (in this order)
  std::vector<std::pair<double, double>> corners;  // lexicographically sorted
  std::vector<std::pair<double, double>> samples;  // boundary polyline
};

RateRegion region_from_cvalues(double c_r1, double c_r2, double c_sum);

// One-shot achievable region: c-values are the halved rate displays
// (D_max - D_H + log 1/(eps2^2 delta)) evaluated exactly.
RateRegion oneshot_region(const ProtocolInstance& inst);
RateRegion region_from_certificate(const Certificate& cert, double eps2, double delta);

// i.i.d. achievable region (C trivial) from the mutual-information formulas.
RateRegion iid_region(const Ket& psi, const std::string& reg_r, const std::string& reg_a,
                      const std::string& reg_m, const std::string& reg_b,
                      const std::string& reg_n);

// Converse lower bounds for the A,B-trivial case; requires psi'_R = psi_R.
RateRegion converse_region(const DensityOperator& psi_prime_rmn,
                           const DensityOperator& psi_r, const DensityOperator& sigma_m,
                           const DensityOperator& omega_n, const std::string& reg_r,
                           const std::string& reg_m, const std::string& reg_n);

enum class RegionFormat { csv, json };

// Deterministic serialization; corners sorted lexicographically.
std::string export_region(const RateRegion& region, RegionFormat format);

// Per-copy one-shot c-values of the n-fold instance with the smoothed state
// from the surgery pipeline as Psi' and the i.i.d. marginals as sigma/omega,
// next to the single-copy mutual-information targets. Desk-scale n only;
// the gap shrinks like (log n + n delta)/n and is tabulated, not asserted.
struct ConvergenceRow {
  Index n = 1;
  double c_r1 = 0.0, c_r2 = 0.0, c_sum = 0.0;           // per copy
  double iid_r1 = 0.0, iid_r2 = 0.0, iid_sum = 0.0;     // targets
};

std::vector<ConvergenceRow> iid_consistency_table(const Ket& psi_rmn,
                                                  const std::string& reg_r,
                                                  const std::string& reg_m,
                                                  const std::string& reg_n, Index n_max,
                                                  double delta, double eps2);

std::string export_convergence_csv(const std::vector<ConvergenceRow>& rows);

}  // namespace qsw
