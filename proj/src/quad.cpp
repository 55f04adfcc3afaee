#include "csto/quad.hpp"

#include <cmath>
#include <map>

namespace csto {

const GaussRule& gauss_legendre(int n) {
  if (n < 1 || n > 32) throw input_error("Gauss-Legendre order out of range [1,32]");
  static std::map<int, GaussRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    // Newton iteration from the Chebyshev-like initial guess.
    double x = std::cos(pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - k] = x;
    rule.weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

std::vector<cplx> cumulative_integral(const std::vector<cplx>& f, double h) {
  const size_t n = f.size();
  std::vector<cplx> out(n, cplx{0.0});
  if (n < 2) return out;
  if (n < 4) {
    for (size_t k = 1; k < n; ++k) out[k] = out[k - 1] + h / 2.0 * (f[k - 1] + f[k]);
    return out;
  }
  // Increment over [x_{k-1}, x_k] from the cubic through the four nearest samples.
  for (size_t k = 1; k < n; ++k) {
    cplx inc;
    if (k == 1) {
      inc = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    } else if (k == n - 1) {
      inc = h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]);
    } else {
      inc = h / 24.0 * (-f[k - 2] + 13.0 * f[k - 1] + 13.0 * f[k] - f[k + 1]);
    }
    out[k] = out[k - 1] + inc;
  }
  return out;
}

}  // namespace csto
