#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qsw/states.hpp"

namespace qsw {

// All logarithms are base 2; entropies and divergences are in bits.

struct DivergenceResult {
  double value = 0.0;                                // bits
  std::optional<TestOperator> witness;               // optimal test, when one exists
  std::optional<double> threshold_mu;                // Neyman-Pearson threshold
  std::optional<std::pair<double, double>> bracket;  // lower <= value <= upper
  std::optional<double> alt_lower;                   // D~_s-based lower bound
  bool is_estimate = false;                          // value is a bracket midpoint
};

struct SecondOrderEstimate {
  Index n = 1;
  double dominant = 0.0;    // n * D(rho||sigma)
  double dispersion = 0.0;  // sqrt(n V) * Phi^{-1}(eps)
  double V = 0.0;           // bits^2 per copy
};

// S(rho) = -Tr(rho log rho).
double entropy(const DensityOperator& rho);

// D(rho||sigma) = Tr(rho log rho) - Tr(rho log sigma). Throws SupportError
// when supp(rho) is not contained in supp(sigma) (never returns +inf).
double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma);

// Variance of the log-likelihood: Tr(rho (log rho - log sigma)^2) - D^2.
double relative_entropy_variance(const DensityOperator& rho,
                                 const DensityOperator& sigma);

// Bipartite or tripartite mutual information between disjoint register
// groups: sum of marginal entropies minus joint entropy.
double mutual_information(const DensityOperator& rho,
                          const std::vector<std::vector<std::string>>& parts);
// Cross-check route through D(rho_union || tensor of marginals).
double mutual_information_via_relent(const DensityOperator& rho,
                                     const std::vector<std::vector<std::string>>& parts);

// D_max(rho||sigma) = log lambda_max(sigma^{-1/2} rho sigma^{-1/2}).
DivergenceResult dmax(const DensityOperator& rho, const DensityOperator& sigma);

// Hypothesis testing relative entropy D_H^eps via the quantum
// Neyman-Pearson threshold family Pi_mu = {rho - mu sigma}_+ with fractional
// weight on the zero eigenspace so Tr(Pi rho) = 1-eps exactly.
DivergenceResult optimal_test(const DensityOperator& rho, const DensityOperator& sigma,
                              double eps);

enum class SpectrumVariant { plus, minus };

// Information spectrum relative entropies:
//   plus:  sup { R : Tr(rho {rho - 2^R sigma}_+) >= 1-eps }
//   minus: inf { R : Tr(rho {rho - 2^R sigma}_-) >= 1-eps }
// computed by bisection over R in [-60, 60] bits (monotone in R).
DivergenceResult info_spectrum(const DensityOperator& rho, const DensityOperator& sigma,
                               double eps, SpectrumVariant variant);

// Two-sided bracket for the smooth max-relative entropy D_max^eps:
//   [ D_s^{1-eps^2-delta} - 2 log(1/delta) - 2,
//     D_s^{1-eps^2+delta} + log v(sigma) + 2 log(1/eps) + log(1/delta) ]
// plus the alternate lower bound D~_s^{eps^2+delta} - 2 log(1/delta) - 2.
// Requires eps^2 + delta < 1 and delta < eps^2 (both smoothing parameters
// must stay inside (0,1)).
DivergenceResult smooth_dmax_bracket(const DensityOperator& rho,
                                     const DensityOperator& sigma, double eps,
                                     double delta);

SecondOrderEstimate second_order_estimate(const DensityOperator& rho,
                                          const DensityOperator& sigma, Index n,
                                          double eps);

// Number of distinct eigenvalues of sigma under the global clustering gap.
int eigenvalue_multiplicity_count(const DensityOperator& sigma);

}  // namespace qsw
