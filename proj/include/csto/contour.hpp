#pragma once

#include <array>
#include <string>
#include <vector>

#include "csto/types.hpp"

namespace csto {

// A tagged point of the spectral plane.
struct SpectralPoint {
  cplx value;
};

// The open sectors D_1..D_6.  D_i is the union over k in {0,1} of the wedges
// { kπ + (i-1)π/6 < Arg λ < kπ + iπ/6 }; arg_lo/arg_hi describe the k = 0 wedge.
struct Sector {
  int index;
  double arg_lo;
  double arg_hi;
};

Sector sector_info(int index);

// Result of locating λ relative to the ray system { Arg λ = kπ/6 }.
struct Classification {
  bool on_ray;  // Arg λ within 1e-10 of some ray
  int ray;      // 0..11 when on_ray, else -1
  int sector;   // 1..6 when !on_ray, else the sector pair adjacent clockwise is irrelevant; -1
};

// Throws input_error("origin is unclassifiable") when λ == 0.
Classification classify(cplx lambda);

// Exact unit direction e^{i k π/6}; the four axis rays are produced exactly.
cplx ray_direction(int k);

// One quadrature panel on a ray: Gauss-Legendre nodes in the radius variable.
struct Panel {
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::vector<double> radii;
  std::vector<double> weights;
  // Set when the panel was parsed from a file: preserves the stored node
  // coordinates bit-exactly instead of recomputing radius * direction.
  std::vector<cplx> stored_lambda;
};

// Oriented ray Arg λ = index·π/6, pointing outward from the origin.
struct Ray {
  int index = 0;
  cplx direction{1.0, 0.0};
  std::vector<Panel> panels;
};

// The full jump contour { Im λ^6 = 0 }: twelve outward-oriented rays.  The plus
// side of each ray is the sector reached by rotating counterclockwise off it.
struct Contour {
  double truncation_radius = 8.0;
  int nodes_per_ray = 0;
  std::array<Ray, 12> rays;

  struct Node {
    int ray;
    double r;
    double w;     // weight in the radius variable
    cplx lambda;  // r · e^{i ray π/6}
  };

  int total_nodes() const;
  std::vector<Node> nodes() const;
  std::vector<Node> ray_nodes(int ray) const;
};

// Composite Gauss-Legendre panels with geometrically graded panel boundaries
// between r_min = 1e-3 and truncation_radius; exactly nodes_per_ray nodes per ray.
Contour build_contour(double truncation_radius, int nodes_per_ray);

// Same node machinery with caller-chosen panel boundaries per ray (the RH solver
// grades panels by the local oscillation rate of the jump phase).  Every ray k
// gets the boundary list bounds[k] (ascending, first entry > 0) with
// nodes_per_panel Gauss-Legendre nodes in each panel.
Contour build_contour_with_boundaries(const std::array<std::vector<double>, 12>& bounds,
                                      int nodes_per_panel);

// Phase θ(λ) = λ² x + 2 λ⁶ y.
cplx theta(cplx lambda, double x, double y);

// Records (ray_index, re λ, im λ, weight) with 17 significant digits.
void write_contour(const Contour& c, const std::string& path);
Contour read_contour(const std::string& path);

}  // namespace csto
