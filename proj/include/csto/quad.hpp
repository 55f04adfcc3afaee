#pragma once

#include <vector>

#include "csto/types.hpp"

namespace csto {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached rule of order n (n-point, exact for degree 2n-1), 1 <= n <= 32.
const GaussRule& gauss_legendre(int n);

// Fourth-order cumulative integral of uniformly sampled data: result[k] is the
// integral from sample 0 to sample k (result[0] == 0).  Uses local cubics, so
// it needs at least 4 samples; with fewer it degrades to the trapezoid rule.
std::vector<cplx> cumulative_integral(const std::vector<cplx>& f, double h);

inline cplx integrate_samples(const std::vector<cplx>& f, double h) {
  auto c = cumulative_integral(f, h);
  return c.empty() ? cplx{0.0} : c.back();
}

}  // namespace csto
