#pragma once

#include <cstdint>
#include <random>

#include "qsw/states.hpp"

namespace qsw {

// Deterministic instance generation: same (seed, kind, system) gives the
// same bits on every run. Gaussian samples come from a hand-rolled
// Box-Muller so output does not depend on the standard library's
// distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform();          // [0,1)
  double gaussian();         // N(0,1)
  cplx gaussian_complex();   // standard complex Gaussian
  std::uint64_t integer(std::uint64_t bound);  // [0, bound)

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class StateKind { haar_pure, mixed_by_tracing, classical_diag, near_product };

Ket random_haar_ket(const RegisterSystem& sys, std::uint64_t seed);
DensityOperator random_mixed(const RegisterSystem& sys, std::uint64_t seed);
DensityOperator random_classical_diag(const RegisterSystem& sys, std::uint64_t seed);

// (1-t) * (product of single-register marginals of a seeded state)
//   + t * (the correlated seeded state).
DensityOperator random_near_product(const RegisterSystem& sys, std::uint64_t seed,
                                    double t);

// Haar-random unitary on `dim` dimensions (QR of a Ginibre matrix with phase
// fixing).
cmat random_unitary(Index dim, std::uint64_t seed);

// Random operator with spectrum in [0,1] (for gentle-measurement style
// properties).
cmat random_contraction(Index dim, std::uint64_t seed);

}  // namespace qsw
