#include "qsw/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace qsw {

namespace {

// Mass of rho outside the support of sigma.
double off_support_mass(const cmat& rho, const EigH& sigma_eig) {
  const double lam_max = sigma_eig.values.size() ? sigma_eig.values.maxCoeff() : 0.0;
  const double cut = tol::kRankRel * lam_max;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < sigma_eig.values.size(); ++i)
    if (sigma_eig.values(i) <= cut)
      mass += (sigma_eig.vectors.col(i).adjoint() * rho * sigma_eig.vectors.col(i))(0).real();
  return mass;
}

void require_support(const cmat& rho, const EigH& sigma_eig, const char* who) {
  if (off_support_mass(rho, sigma_eig) > 1e-9)
    throw SupportError(std::string(who) + ": supp(rho) not contained in supp(sigma)");
}

DensityOperator aligned_to(const DensityOperator& ref, const DensityOperator& x) {
  if (x.system.total_dim() != ref.system.total_dim())
    throw ShapeError("divergence: dimension mismatch");
  if (x.system == ref.system) return x;
  return x.reordered(ref.system.names());
}

}  // namespace

double entropy(const DensityOperator& rho) {
  EigH e = eig_herm(rho.matrix);
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double lam = e.values(i);
    if (lam > 1e-300) s -= lam * std::log2(lam);
  }
  return s;
}

double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma_in) {
  DensityOperator sigma = aligned_to(rho, sigma_in);
  EigH se = eig_herm(sigma.matrix);
  require_support(rho.matrix, se, "relative_entropy");

  double tr_rho_log_rho = -entropy(rho);
  const double lam_max = se.values.maxCoeff();
  const double cut = tol::kRankRel * lam_max;
  double tr_rho_log_sigma = 0.0;
  for (Eigen::Index i = 0; i < se.values.size(); ++i) {
    if (se.values(i) <= cut) continue;
    const double w = (se.vectors.col(i).adjoint() * rho.matrix * se.vectors.col(i))(0).real();
    tr_rho_log_sigma += w * std::log2(se.values(i));
  }
  return tr_rho_log_rho - tr_rho_log_sigma;
}

double relative_entropy_variance(const DensityOperator& rho,
                                 const DensityOperator& sigma_in) {
  DensityOperator sigma = aligned_to(rho, sigma_in);
  EigH se = eig_herm(sigma.matrix);
  require_support(rho.matrix, se, "relative_entropy_variance");

  const cmat log_rho = mat_log2_psd(rho.matrix);
  const cmat log_sigma = mat_log2_psd(sigma.matrix);
  const cmat delta = log_rho - log_sigma;
  const double second_moment = (rho.matrix * delta * delta).trace().real();
  const double d = relative_entropy(rho, sigma);
  return second_moment - d * d;
}

namespace {
std::vector<std::string> flatten_parts(const std::vector<std::vector<std::string>>& parts) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> all;
  for (const auto& group : parts)
    for (const auto& n : group) {
      if (!seen.insert(n).second)
        throw NameClash("mutual_information: register '" + n + "' appears in two parts");
      all.push_back(n);
    }
  return all;
}
}  // namespace

double mutual_information(const DensityOperator& rho,
                          const std::vector<std::vector<std::string>>& parts) {
  if (parts.size() != 2 && parts.size() != 3)
    throw DomainError("mutual_information: need 2 or 3 parts");
  auto all = flatten_parts(parts);
  double s = 0.0;
  for (const auto& group : parts) s += entropy(partial_trace(rho, group));
  s -= entropy(partial_trace(rho, all));
  return s;
}

double mutual_information_via_relent(const DensityOperator& rho,
                                     const std::vector<std::vector<std::string>>& parts) {
  auto all = flatten_parts(parts);
  DensityOperator joint = partial_trace(rho, all);
  std::vector<DensityOperator> marg;
  for (const auto& group : parts) marg.push_back(partial_trace(rho, group));
  DensityOperator prod = tensor(marg);
  return relative_entropy(joint, prod.reordered(joint.system.names()));
}

DivergenceResult dmax(const DensityOperator& rho, const DensityOperator& sigma_in) {
  DensityOperator sigma = aligned_to(rho, sigma_in);
  EigH se = eig_herm(sigma.matrix);
  require_support(rho.matrix, se, "dmax");
  cmat invs = mat_inv_sqrt_psd(sigma.matrix);
  cmat x = hermitize(invs * rho.matrix * invs);
  EigH xe = eig_herm(x);
  const double lam = xe.values.size() ? xe.values.maxCoeff() : 0.0;
  DivergenceResult out;
  out.value = std::log2(std::max(lam, 1e-300));
  return out;
}

// ---- hypothesis testing -----------------------------------------------------

namespace {

struct PencilSplit {
  double mass_strict = 0.0;  // rho-mass on eigenvalues > band
  double mass_zero = 0.0;    // rho-mass on |eigenvalue| <= band
  cmat proj_strict;
  cmat proj_zero;
};

PencilSplit pencil_split(const cmat& rho, const cmat& sigma, double mu, double band,
                         bool with_projectors) {
  cmat pencil = rho - mu * sigma;
  EigH e = eig_herm(pencil);
  const Eigen::Index n = e.values.size();
  PencilSplit out;
  if (with_projectors) {
    out.proj_strict = cmat::Zero(n, n);
    out.proj_zero = cmat::Zero(n, n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = e.values(i);
    if (lam > band) {
      out.mass_strict +=
          (e.vectors.col(i).adjoint() * rho * e.vectors.col(i))(0).real();
      if (with_projectors)
        out.proj_strict += e.vectors.col(i) * e.vectors.col(i).adjoint();
    } else if (lam >= -band) {
      out.mass_zero += (e.vectors.col(i).adjoint() * rho * e.vectors.col(i))(0).real();
      if (with_projectors)
        out.proj_zero += e.vectors.col(i) * e.vectors.col(i).adjoint();
    }
  }
  return out;
}

}  // namespace

DivergenceResult optimal_test(const DensityOperator& rho, const DensityOperator& sigma_in,
                              double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("optimal_test: eps outside (0,1)");
  DensityOperator sigma = aligned_to(rho, sigma_in);
  const double target = 1.0 - eps;
  const double rho_scale = rho.matrix.cwiseAbs().maxCoeff();
  const double sigma_scale = sigma.matrix.cwiseAbs().maxCoeff();
  auto band_at = [&](double mu) {
    return 1e-11 * std::max(1.0, rho_scale + mu * sigma_scale);
  };

  // alpha_excl(mu) = Tr(rho * strict positive part of rho - mu sigma) is
  // nonincreasing; find the crossing of the target.
  auto alpha_excl = [&](double mu) {
    return pencil_split(rho.matrix, sigma.matrix, mu, band_at(mu), false).mass_strict;
  };

  double lo = 0.0;
  double hi = 1.0;
  bool bracketed = false;
  for (int i = 0; i < 90; ++i) {
    PencilSplit s = pencil_split(rho.matrix, sigma.matrix, hi, band_at(hi), false);
    if (s.mass_strict + s.mass_zero < target) {
      bracketed = true;
      break;
    }
    lo = hi;
    hi *= 4.0;
  }
  if (!bracketed)
    throw NumericalError("optimal_test: threshold bracket exhausted (type-II error underflow)");

  for (int i = 0; i < 220; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_excl(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double mu = hi;

  PencilSplit s = pencil_split(rho.matrix, sigma.matrix, mu, band_at(mu), true);
  double band = band_at(mu);
  // If the zero band failed to capture the jump, widen it a few times.
  for (int widen = 0; widen < 6 && s.mass_strict + s.mass_zero < target - 1e-12; ++widen) {
    band *= 10.0;
    s = pencil_split(rho.matrix, sigma.matrix, mu, band, true);
  }

  double gamma = 0.0;
  if (s.mass_zero > 1e-300)
    gamma = std::clamp((target - s.mass_strict) / s.mass_zero, 0.0, 1.0);
  cmat pi = s.proj_strict + gamma * s.proj_zero;

  const double beta = (pi * sigma.matrix).trace().real();
  if (beta < 1e-290)
    throw NumericalError("optimal_test: type-II error underflow");

  DivergenceResult out;
  out.value = -std::log2(beta);
  out.threshold_mu = mu;
  out.witness = TestOperator(rho.system, hermitize(pi));
  return out;
}

// ---- information spectrum ----------------------------------------------------

DivergenceResult info_spectrum(const DensityOperator& rho, const DensityOperator& sigma_in,
                               double eps, SpectrumVariant variant) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("info_spectrum: eps outside (0,1)");
  DensityOperator sigma = aligned_to(rho, sigma_in);
  EigH se = eig_herm(sigma.matrix);
  require_support(rho.matrix, se, "info_spectrum");

  const double rho_scale = rho.matrix.cwiseAbs().maxCoeff();
  const double sigma_scale = sigma.matrix.cwiseAbs().maxCoeff();
  // g(R) = Tr(rho {rho - 2^R sigma}_+), nonincreasing in R.
  auto g = [&](double r) {
    const double mu = std::exp2(r);
    const double band = 1e-12 * std::max(1.0, rho_scale + mu * sigma_scale);
    PencilSplit s = pencil_split(rho.matrix, sigma.matrix, mu, band, false);
    return s.mass_strict + s.mass_zero;
  };

  const double kLo = -60.0, kHi = 60.0;
  const double threshold = 1.0 - eps;
  DivergenceResult out;

  if (variant == SpectrumVariant::plus) {
    if (g(kLo) < threshold)
      throw NumericalError("info_spectrum: sup below -60 bits (bracket exhausted)");
    if (g(kHi) >= threshold)
      throw NumericalError("info_spectrum: sup above +60 bits (bracket exhausted)");
    double lo = kLo, hi = kHi;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (g(mid) >= threshold)
        lo = mid;
      else
        hi = mid;
    }
    out.value = lo;
  } else {
    // h(R) = 1 - g(R) is nondecreasing.
    auto h = [&](double r) { return 1.0 - g(r); };
    if (h(kHi) < threshold)
      throw NumericalError("info_spectrum: inf above +60 bits (bracket exhausted)");
    if (h(kLo) >= threshold)
      throw NumericalError("info_spectrum: inf below -60 bits (bracket exhausted)");
    double lo = kLo, hi = kHi;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (h(mid) >= threshold)
        hi = mid;
      else
        lo = mid;
    }
    out.value = hi;
  }
  return out;
}

DivergenceResult smooth_dmax_bracket(const DensityOperator& rho,
                                     const DensityOperator& sigma, double eps,
                                     double delta) {
  if (!(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0))
    throw DomainError("smooth_dmax_bracket: parameters outside (0,1)");
  if (eps * eps + delta >= 1.0)
    throw DomainError("smooth_dmax_bracket: requires eps^2 + delta < 1");
  if (delta >= eps * eps)
    throw DomainError("smooth_dmax_bracket: requires delta < eps^2 "
                      "(upper smoothing parameter must stay below 1)");

  const double log_inv_delta = std::log2(1.0 / delta);
  const double log_inv_eps = std::log2(1.0 / eps);
  const double v = eigenvalue_multiplicity_count(sigma);

  const double lower =
      info_spectrum(rho, sigma, 1.0 - eps * eps - delta, SpectrumVariant::plus).value -
      2.0 * log_inv_delta - 2.0;
  const double upper =
      info_spectrum(rho, sigma, 1.0 - eps * eps + delta, SpectrumVariant::plus).value +
      std::log2(v) + 2.0 * log_inv_eps + log_inv_delta;
  const double alt_lower =
      info_spectrum(rho, sigma, eps * eps + delta, SpectrumVariant::minus).value -
      2.0 * log_inv_delta - 2.0;

  DivergenceResult out;
  out.bracket = {lower, upper};
  out.alt_lower = alt_lower;
  out.value = 0.5 * (lower + upper);
  out.is_estimate = true;
  return out;
}

SecondOrderEstimate second_order_estimate(const DensityOperator& rho,
                                          const DensityOperator& sigma, Index n,
                                          double eps) {
  if (n < 1) throw DomainError("second_order_estimate: n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("second_order_estimate: eps outside (0,1)");
  const double d = relative_entropy(rho, sigma);
  double v = relative_entropy_variance(rho, sigma);
  if (v < -1e-9) throw NumericalError("second_order_estimate: negative variance");
  v = std::max(v, 0.0);
  SecondOrderEstimate out;
  out.n = n;
  out.V = v;
  out.dominant = static_cast<double>(n) * d;
  out.dispersion =
      (eps == 0.5) ? 0.0 : std::sqrt(static_cast<double>(n) * v) * inverse_normal_cdf(eps);
  return out;
}

int eigenvalue_multiplicity_count(const DensityOperator& sigma) {
  return std::max(1, distinct_eigenvalue_count(sigma.matrix));
}

}  // namespace qsw
