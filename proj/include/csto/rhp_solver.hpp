#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "csto/contour.hpp"
#include "csto/direct_problem.hpp"
#include "csto/spectral_analysis.hpp"
#include "csto/types.hpp"

namespace csto {

// The four inverse problems share one contour geometry: the principal
// two-variable problem and the boundary-line problem jump across all twelve
// rays, while the initial-line and final-line problems live on the four rays
// where lambda^2 is real.  RHPContext names the family throughout.
const std::vector<int>& family_rays(RHPContext family);

// Jump matrix of the requested family at lambda, which must lie on one of the
// family's rays.  Spectral values are interpolated from the table (exact when
// lambda is a table node); the final-line family takes its fixed slice
// parameter from derived.L and ignores y.  All families keep their jump
// unimodular-phased on their own rays, so no entry can overflow for x, y >= 0.
//
// Errors: lambda off the family's rays or outside the tabulated radial range
// -> input_error; an interpolated denominator (a and its reflection for the
// ray-family entries, A for the boundary line, alpha for the final line)
// smaller than 1e-12 -> numerical_error naming the culprit.
Mat2 assemble_jump(RHPContext family, const SpectralTable& table, const DerivedSpectral& derived,
                   double x, double y, cplx lambda);

// Composite transition relating the two principal region families that share
// no contour ray: the product (mid-sector jump) * (axis jump)^-1 * (late
// sector jump), each factor assembled at the same lambda.  Exposed for
// consistency checks; lambda must be on a ray where the full slot set is
// available, i.e. the rays where lambda^2 is real.
Mat2 composite_jump(const SpectralTable& table, const DerivedSpectral& derived, double x, double y,
                    cplx lambda);

// A solvable discretized problem: the contour carrying the collocation nodes,
// the family tag (which fixes the active rays and crossing orientations), and
// the jump evaluator.  make_jump_assembly wires the evaluator to table
// interpolation; tests may instead install a synthetic evaluator directly.
// The evaluator is self-contained (it captures its own copies of the data),
// so an assembly can be moved or copied freely.
struct JumpAssembly {
  Contour contour;
  RHPContext family = RHPContext::principal;
  SpectralTable table;
  DerivedSpectral derived;
  std::function<Mat2(cplx, double, double)> jump;  // (lambda, x, y) -> J
};

JumpAssembly make_jump_assembly(RHPContext family, const SpectralTable& table,
                                const DerivedSpectral& derived, const Contour& contour);

// Solution of the collocation system.  M_minus holds the boundary values of
// the sectionally holomorphic matrix from the minus side of each ray (the
// side to the right of travel: even-index rays are traversed outward, odd
// ones inward), M_plus = M_minus * J the other limit.  The m array holds the
// 1/lambda .. 1/lambda^5 expansion coefficients at infinity.  Drift fields
// report how far the computed data sit from the exact identities
// (det J = 1, det M = 1, J -> I and M -> I at the truncation radius); they
// are reported, not enforced, because the measured spectral data themselves
// carry the determinant defect of the scattering normalization.
struct RHPSolution {
  RHPContext family = RHPContext::principal;
  double x = 0.0;
  double y = 0.0;
  std::vector<Contour::Node> nodes;       // active collocation nodes
  std::vector<Mat2> M_minus;
  std::vector<Mat2> M_plus;
  double residual = 0.0;                  // relative sup-norm collocation residual
  double condition = 0.0;                 // 1-norm estimate; 0 on the iterative path
  int iterations = 0;                     // fixed-point iterations used (0 on direct path)
  double jump_det_drift = 0.0;            // max |det J - 1| over active nodes
  double det_m_drift = 0.0;               // max |det M_minus - 1| over active nodes
  double outer_jump_deviation = 0.0;      // max |J - I| at the outermost node per ray
  double outer_solution_deviation = 0.0;  // max |M_minus - I| at those nodes
  std::array<Mat2, 5> m{};
  std::vector<std::array<cplx, 2>> pole_values;  // source column of M at each pole
  std::vector<std::string> warnings;
};

// Solves the additive singular integral equation for M_minus - I at the
// contour nodes by product-quadrature collocation of the Cauchy transform,
// optionally augmented with the algebraic residue conditions at poles off the
// contour.  Residue entries must have been built for the same family and
// their poles must keep a distance >= 1e-3 from the contour.  A contractive
// fixed-point sweep is tried first; if it stalls, the dense linear system is
// factored directly and its condition number estimated.  Errors: condition
// estimate > 1e12 -> numerical_error (ill-conditioned); final residual
// > 1e-6 -> numerical_error (non-convergence) carrying the diagnostics.
RHPSolution solve_rhp(const JumpAssembly& assembly, const ResidueData& residues, double x,
                      double y);

// First `order` coefficients of the large-lambda expansion of the solved
// problem, order 1..5; anything larger is unsupported (input_error).
std::vector<Mat2> extract_coefficients(const RHPSolution& solution, int order);

// Ordered product of the ray transitions around the origin at radius r,
// counterclockwise from the positive real axis; each crossing contributes the
// jump or its inverse according to which side the traversal enters from.
// Continuity of the solution at the origin demands this tend to I as r -> 0,
// so the product at small radius measures the internal consistency of the
// assembled family (no spurious monodromy).
Mat2 cyclic_ray_product(const JumpAssembly& assembly, double x, double y, double r);

// Panel boundary lists for build_contour_with_boundaries, graded so that the
// jump phase advances by at most phase_budget radians across any panel for
// every |x| <= x_max, |y| <= y_max (final line: slice parameter L), while
// panel widths grow at most geometrically from the origin and never exceed a
// fixed cap that resolves the spectral data themselves.
std::array<std::vector<double>, 12> phase_graded_bounds(RHPContext family, double radius,
                                                        double x_max, double y_max, double L,
                                                        double phase_budget = 4.5);

// Structured text report of a solve: location, residual, condition,
// determinant drifts, and the first expansion coefficient, one item per line.
std::string solve_report(const RHPSolution& s);

}  // namespace csto
