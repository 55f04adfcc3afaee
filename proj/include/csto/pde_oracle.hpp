#pragma once

#include <functional>

#include "csto/field_grid.hpp"
#include "csto/profile.hpp"
#include "csto/types.hpp"

namespace csto {

struct EvolveOptions {
  double hx = 0.05;
  double hy = 1e-4;
  double X_max = 20.0;
  // Store every n-th y-level in the returned grid (must divide the step count).
  int store_stride_y = 1;
  // Optional source term added to u_y, for manufactured-solution runs.
  std::function<cplx(double, double)> forcing;
};

// Direct evolution of the initial-value problem in the y direction: fourth
// order centered x-stencils (one-sided near x = 0, zero closure beyond X_max),
// Crank-Nicolson on the linear third-derivative term, two-step Adams-Bashforth
// on the nonlinear terms.
FieldGrid evolve(const Profile& u0, double L, const EvolveOptions& opt = {});

// All data lines of a computed field: the initial row, the three boundary
// traces at x = 0 (one-sided fourth-order stencils), and the final row.
struct Traces {
  Profile u0, g0, g1, g2, h_L;
};
Traces extract_traces(const FieldGrid& field);

// Corner compatibility between initial and boundary data: residuals of the
// shared corner value, slope, curvature, and of the first-order evolution of
// g0 implied by the equation.  Reported, never enforced.
struct CompatibilityReport {
  double corner_value = 0.0;
  double corner_slope = 0.0;
  double corner_curvature = 0.0;
  double corner_evolution = 0.0;
};
CompatibilityReport compatibility_check(const Profile& u0, const Profile& g0,
                                        const Profile& g1, const Profile& g2);

}  // namespace csto
