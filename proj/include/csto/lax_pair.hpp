#pragma once

#include <vector>

#include "csto/field_grid.hpp"
#include "csto/types.hpp"

namespace csto {

// Field value with the x-derivatives that enter the flow matrices.
struct FieldJet {
  cplx u{0.0};
  cplx u_x{0.0};
  cplx u_xx{0.0};
};

// Sample of the closed gauge one-form Δ = Δ₁ dx + Δ₂ dy.
struct OneFormSample {
  cplx d1{0.0};
  cplx d2{0.0};
};

// x-part of the Lax pair.
Mat2 assemble_U(cplx u, cplx lambda);

// y-part (sixth-order flow matrix) of the Lax pair.
Mat2 assemble_V(const FieldJet& jet, cplx lambda);

// Gauge-transformed x-flow matrix used by the half-line eigenfunctions;
// gauge_integral is the accumulated ∫ Δ up to the sample point.
Mat2 assemble_N1(cplx u, cplx gauge_integral, cplx lambda);

// Gauge-transformed y-flow matrix at x = 0 in terms of the boundary traces
// g0 = u(0,y), g1 = u_x(0,y), g2 = u_xx(0,y).
Mat2 assemble_N2(cplx g0, cplx g1, cplx g2, cplx gauge_integral, cplx lambda);

// Δ₁ = u/2,  Δ₂ = -u_xx/4 + (3i/4) u u_x + u³/4.
OneFormSample delta_one_form(const FieldJet& jet);

// Max-norm of U_y - V_x + [U, V] over interior grid points and a fixed probe
// λ set, with centered second-order difference stencils.
double zero_curvature_residual(const FieldGrid& field);

// Max-norm of u_y - (-u_xx/2 + (3i/2) u u_x + u³/2)_x over interior points.
double conservation_residual(const FieldGrid& field);

// Second-order interior/one-sided jet extraction from a grid row.
FieldJet jet_from_row(const std::vector<cplx>& row, double hx, int i);

// Path integrals of Δ along the axis path (0,0) -> (0,y) -> (x,y), accumulated
// on the grid of a sampled field: at(i,j) = ∫₀^{y_j} Δ₂(0,η) dη + ∫₀^{x_i} Δ₁(ξ,y_j) dξ.
struct GaugeAccumulator {
  double hx = 0.0, hy = 0.0;
  std::vector<cplx> y_cum;                // ∫ Δ₂ along x = 0
  std::vector<std::vector<cplx>> x_cum;   // per-row ∫ Δ₁
  cplx at(int i, int j) const { return y_cum[j] + x_cum[j][i]; }
};

GaugeAccumulator accumulate_gauge(const FieldGrid& field);

}  // namespace csto
