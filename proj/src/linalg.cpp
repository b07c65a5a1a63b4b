#include "qsw/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "qsw/errors.hpp"

namespace qsw {

cmat hermitize(const cmat& m) { return 0.5 * (m + m.adjoint()); }

double herm_defect(const cmat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

EigH eig_herm(const cmat& m) {
  Eigen::SelfAdjointEigenSolver<cmat> solver(hermitize(m));
  if (solver.info() != Eigen::Success)
    throw NumericalError("Hermitian eigendecomposition failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

rvec clip_psd(const rvec& values, double scale) {
  if (scale < 0) scale = values.size() ? values.cwiseAbs().maxCoeff() : 1.0;
  const double band = tol::kPsdEig * std::max(scale, 1.0);
  rvec out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out(i) < 0 && out(i) >= -band) out(i) = 0.0;
  return out;
}

cmat spectral_apply(const EigH& e, const std::vector<double>& fvals) {
  cmat d = cmat::Zero(e.values.size(), e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) d(i, i) = fvals[static_cast<size_t>(i)];
  return e.vectors * d * e.vectors.adjoint();
}

namespace {
double support_cutoff(const rvec& values) {
  const double lam_max = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  return tol::kRankRel * lam_max;
}
}  // namespace

cmat mat_sqrt_psd(const cmat& m) {
  EigH e = eig_herm(m);
  std::vector<double> f(static_cast<size_t>(e.values.size()));
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    f[static_cast<size_t>(i)] = e.values(i) > 0 ? std::sqrt(e.values(i)) : 0.0;
  return spectral_apply(e, f);
}

cmat mat_inv_sqrt_psd(const cmat& m) {
  EigH e = eig_herm(m);
  const double cut = support_cutoff(e.values);
  std::vector<double> f(static_cast<size_t>(e.values.size()));
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    f[static_cast<size_t>(i)] = e.values(i) > cut ? 1.0 / std::sqrt(e.values(i)) : 0.0;
  return spectral_apply(e, f);
}

cmat support_projector(const cmat& m) {
  EigH e = eig_herm(m);
  const double cut = support_cutoff(e.values);
  std::vector<double> f(static_cast<size_t>(e.values.size()));
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    f[static_cast<size_t>(i)] = e.values(i) > cut ? 1.0 : 0.0;
  return spectral_apply(e, f);
}

cmat mat_log2_psd(const cmat& m) {
  EigH e = eig_herm(m);
  const double cut = support_cutoff(e.values);
  std::vector<double> f(static_cast<size_t>(e.values.size()));
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    f[static_cast<size_t>(i)] = e.values(i) > cut ? std::log2(e.values(i)) : 0.0;
  return spectral_apply(e, f);
}

std::pair<cmat, cmat> pos_neg_projectors(const cmat& herm, double zero_band) {
  EigH e = eig_herm(herm);
  const Eigen::Index n = e.values.size();
  std::vector<double> fpos(static_cast<size_t>(n)), fneg(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool positive = e.values(i) >= -zero_band;
    fpos[static_cast<size_t>(i)] = positive ? 1.0 : 0.0;
    fneg[static_cast<size_t>(i)] = positive ? 0.0 : 1.0;
  }
  return {spectral_apply(e, fpos), spectral_apply(e, fneg)};
}

double trace_norm(const cmat& m) {
  Eigen::JacobiSVD<cmat> svd(m);
  return svd.singularValues().sum();
}

double min_eig_herm(const cmat& m) {
  EigH e = eig_herm(m);
  return e.values.size() ? e.values.minCoeff() : 0.0;
}

int distinct_eigenvalue_count(const cmat& psd) {
  EigH e = eig_herm(psd);
  std::vector<double> kept;
  const double cut = support_cutoff(e.values);
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > cut) kept.push_back(e.values(i));
  if (kept.empty()) return 0;
  std::sort(kept.begin(), kept.end());
  int count = 1;
  double anchor = kept.front();
  for (double v : kept)
    if (v - anchor > tol::kEigCluster * std::max(std::abs(anchor), 1e-300)) {
      ++count;
      anchor = v;
    }
  return count;
}

namespace {
// Acklam's coefficients.
double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p <= phigh) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  q = std::sqrt(-2 * std::log(1 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
}
}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inverse_normal_cdf: p outside (0,1)");
  if (p == 0.5) return 0.0;
  double x = acklam(p);
  // One Halley refinement: Phi(x) via erfc is accurate to machine precision.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace qsw
