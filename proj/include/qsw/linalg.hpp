#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

namespace qsw {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;

// Global numerical conventions.
namespace tol {
inline constexpr double kHerm = 1e-10;        // Hermiticity drift
inline constexpr double kTrace = 1e-10;       // trace-one drift
inline constexpr double kNorm = 1e-10;        // ket normalization
inline constexpr double kPsdEig = 1e-10;      // PSD eigenvalue drift
inline constexpr double kIsometry = 1e-9;     // V^dag V = I drift
inline constexpr double kRankRel = 1e-10;     // support cutoff: lam > kRankRel*lam_max
inline constexpr double kEigCluster = 1e-8;   // distinct-eigenvalue relative gap
}  // namespace tol

// (M + M^dag)/2. Composite constructions call this to bound drift.
cmat hermitize(const cmat& m);

double herm_defect(const cmat& m);  // max |M - M^dag| entry

struct EigH {
  rvec values;  // ascending
  cmat vectors; // columns
};

// Self-adjoint eigendecomposition; hermitizes the input first.
EigH eig_herm(const cmat& m);

// Eigenvalues clipped: values in [-kPsdEig*scale, 0) -> 0. `scale` defaults
// to max |eigenvalue|.
rvec clip_psd(const rvec& values, double scale = -1.0);

// f applied through the spectral decomposition.
cmat spectral_apply(const EigH& e, const std::vector<double>& fvals);

cmat mat_sqrt_psd(const cmat& m);
// Pseudo-inverse square root on the support (relative cutoff kRankRel).
cmat mat_inv_sqrt_psd(const cmat& m);
// Projector onto the support of a PSD matrix.
cmat support_projector(const cmat& m);

// log2 on the support; eigenvalues below cutoff contribute 0 columns
// (callers are responsible for support checks).
cmat mat_log2_psd(const cmat& m);

// Positive part projector (eigenvalues >= -zero_band) and its complement.
// The +/- split places the zero band on the positive side.
std::pair<cmat, cmat> pos_neg_projectors(const cmat& herm, double zero_band);

// Trace norm of an arbitrary matrix (sum of singular values).
double trace_norm(const cmat& m);

double min_eig_herm(const cmat& m);

// Number of distinct eigenvalues under relative gap kEigCluster, counting
// only eigenvalues above the support cutoff.
int distinct_eigenvalue_count(const cmat& psd);

// Inverse of the standard normal CDF. Acklam's rational approximation
// refined by one Halley step against erfc; absolute error < 1e-13.
double inverse_normal_cdf(double p);

inline double log2_safe(double x) { return std::log2(x); }

}  // namespace qsw
