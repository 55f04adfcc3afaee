#pragma once

#include <string>
#include <vector>

#include "csto/types.hpp"

namespace csto {

// Rectangular sample grid of a complex field u on [0, X_max] x [0, L]:
// x_i = i·hx (i < nx), y_j = j·hy (j < ny), samples stored row-major with x
// contiguous: u[j*nx + i].
struct FieldGrid {
  double hx = 0.0;
  double hy = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<cplx> u;
  std::string scheme;  // free-form description of how the samples were produced

  cplx& at(int i, int j) { return u[static_cast<size_t>(j) * nx + i]; }
  const cplx& at(int i, int j) const { return u[static_cast<size_t>(j) * nx + i]; }
  double x_max() const { return hx * (nx - 1); }
  double y_max() const { return hy * (ny - 1); }

  void validate() const;  // shape/sample-count consistency
};

void write_field(const FieldGrid& f, const std::string& path);
FieldGrid read_field(const std::string& path);

}  // namespace csto
