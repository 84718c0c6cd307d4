#pragma once

#include <random>

#include "qres/fock.hpp"

namespace testutil {

inline qres::CMatrix random_density(int d, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  qres::CMatrix a(d, rank);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < rank; ++k) a(i, k) = qres::cplx(g(rng), g(rng));
  qres::CMatrix r = a * a.adjoint();
  r /= r.trace().real();
  return 0.5 * (r + r.adjoint());
}

inline qres::DensityOperator random_state(int d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rank(1, d);
  return {random_density(d, rank(rng), rng), {d}};
}

inline double max_abs(const qres::CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
