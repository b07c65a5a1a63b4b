#include "qsw/random.hpp"

#include <Eigen/QR>
#include <cmath>

namespace qsw {

double Rng::uniform() {
  // 53-bit mantissa from the top bits of the generator output.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

cplx Rng::gaussian_complex() {
  const double re = gaussian();
  const double im = gaussian();
  return {re, im};
}

std::uint64_t Rng::integer(std::uint64_t bound) { return gen_() % bound; }

Ket random_haar_ket(const RegisterSystem& sys, std::uint64_t seed) {
  Rng rng(seed);
  cvec v(sys.total_dim());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian_complex();
  v /= v.norm();
  return Ket(sys, std::move(v));
}

DensityOperator random_mixed(const RegisterSystem& sys, std::uint64_t seed) {
  RegisterSystem doubled = sys.concat(RegisterSystem::single("__purifier", sys.total_dim()));
  Ket psi = random_haar_ket(doubled, seed);
  return partial_trace(psi, sys.names());
}

DensityOperator random_classical_diag(const RegisterSystem& sys, std::uint64_t seed) {
  Rng rng(seed);
  rvec p(sys.total_dim());
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    p(i) = rng.uniform() + 1e-6;
    total += p(i);
  }
  cmat m = cmat::Zero(sys.total_dim(), sys.total_dim());
  for (Index i = 0; i < p.size(); ++i) m(i, i) = p(i) / total;
  return DensityOperator(sys, std::move(m));
}

DensityOperator random_near_product(const RegisterSystem& sys, std::uint64_t seed,
                                    double t) {
  DensityOperator corr = random_mixed(sys, seed);
  std::vector<DensityOperator> marginals;
  for (const auto& r : sys.registers())
    marginals.push_back(partial_trace(corr, {r.name}));
  DensityOperator prod = tensor(marginals);
  cmat m = (1.0 - t) * prod.matrix + t * corr.matrix;
  m = hermitize(m);
  m /= m.trace().real();
  return DensityOperator(sys, std::move(m));
}

cmat random_unitary(Index dim, std::uint64_t seed) {
  Rng rng(seed);
  cmat g(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) g(i, j) = rng.gaussian_complex();
  Eigen::HouseholderQR<cmat> qr(g);
  cmat q = qr.householderQ();
  cmat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < dim; ++i) {
    cplx d = r(i, i);
    const double a = std::abs(d);
    q.col(i) *= (a > 0 ? d / a : cplx(1.0));
  }
  return q;
}

cmat random_contraction(Index dim, std::uint64_t seed) {
  Rng rng(seed);
  cmat u = random_unitary(dim, seed * 2 + 1);
  cmat diag = cmat::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) diag(i, i) = rng.uniform();
  return hermitize(u * diag * u.adjoint());
}

}  // namespace qsw
