#pragma once

#include <string>
#include <utility>
#include <vector>

#include "csto/contour.hpp"
#include "csto/profile.hpp"
#include "csto/types.hpp"

namespace csto {

// Which normalized eigenfunction a trace holds.  x-side traces live on the
// initial-data line y = 0, y-side traces on the boundary line x = 0.
enum class TraceKind {
  mu1_y0,  // normalized to I as x -> X_max
  mu3_y0,  // normalized to I at x = 0
  mu2_x0,  // normalized to I at y = L
  mu3_x0,  // normalized to I at y = 0
};

struct EigenfunctionTrace {
  TraceKind which = TraceKind::mu1_y0;
  cplx lambda{0.0};
  std::vector<double> grid;
  std::vector<Mat2> values;
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  InterpMode mode = InterpMode::smooth4;
  int trace_stride = 1;  // record every n-th profile sample in traces
};

// Full-matrix eigenfunction traces.  Both columns are bounded together only on
// the rays where the relevant phase is real, so x-side traces require
// Im lambda^2 ~ 0 and y-side traces Im lambda^6 ~ 0; otherwise the call throws
// input_error("unbounded column requested ...").
EigenfunctionTrace integrate_mu_x(const Profile& u0, cplx lambda, TraceKind which,
                                  const IntegratorOptions& opt = {});
EigenfunctionTrace integrate_mu_y(const Profile& g0, const Profile& g1, const Profile& g2,
                                  cplx lambda, TraceKind which,
                                  const IntegratorOptions& opt = {});

// Spectral functions of the initial data: a = mu1_22(0), b = mu1_12(0),
// defined on the closed region Im lambda^2 >= 0.
std::pair<cplx, cplx> compute_ab(const Profile& u0, cplx lambda,
                                 const IntegratorOptions& opt = {});

// Spectral functions of the boundary data on Im lambda^6 >= 0: A = mu2_22(0),
// B = mu2_12(0), from the boundary eigenfunction normalized at y = L.
std::pair<cplx, cplx> compute_AB(const Profile& g0, const Profile& g1, const Profile& g2,
                                 cplx lambda, const IntegratorOptions& opt = {});

// Independent route to (A, B) through the eigenfunction normalized at y = 0
// instead: its column-two values at y = L determine A and B by inverting the
// y-scattering relation.  Returned alongside the defining-route values so
// callers can report (not reconcile) any discrepancy.
struct ABCrossCheck {
  cplx A, B;              // defining route (normalized at y = L)
  cplx A_cross, B_cross;  // inverted route (normalized at y = 0)
  double discrepancy;     // max entrywise difference
};
ABCrossCheck compute_AB_cross(const Profile& g0, const Profile& g1, const Profile& g2,
                              cplx lambda, const IntegratorOptions& opt = {});

// Piecewise-constant matrix-exponential oracle for (a, b).  Intervals must be
// ordered and non-overlapping; gaps count as u = 0.
struct PiecewiseStep {
  double x_lo, x_hi;
  cplx u;
};
std::pair<cplx, cplx> oracle_ab_piecewise_constant(const std::vector<PiecewiseStep>& steps,
                                                   cplx lambda);
// The nearest-mode cell decomposition of a sampled profile, for feeding the
// oracle exactly what the interpolant integrates.
std::vector<PiecewiseStep> steps_from_profile_nearest(const Profile& p);

// One row of the spectral table.  On nodes where a spectral function is not
// defined (the transform diverges there), the stored value is the reflected
// conjugate conj(f(conj(lambda))) — exactly the combination every jump matrix
// consumes on that side; the file header records this convention.
struct SpectralRow {
  char kind = 'r';  // 'r': contour ray node, 's': interior sector line node
  int index = 0;    // ray 0..11 or sector 1..6
  cplx lambda, a, b, A, B;
};

struct SpectralTable {
  double X_max = 0.0;
  double L = 0.0;
  double tolerance = 1e-10;
  std::string grids;  // free-form description of the generating grids
  std::vector<SpectralRow> rows;
};

// Evaluates a, b, A, B on the contour ray nodes plus one interior radial line
// per sector (both half-lines, so the node set is closed under conjugation and
// negation).
SpectralTable build_spectral_table(const Profile& u0, const Profile& g0, const Profile& g1,
                                   const Profile& g2, const Contour& contour,
                                   const IntegratorOptions& opt = {});

void write_spectral_table(const SpectralTable& t, const std::string& path);
SpectralTable read_spectral_table(const std::string& path);

// Barycentric interpolation of table values along the ray or interior line
// that lambda lies on; never interpolates across sector boundaries.
struct SpectralValues {
  cplx a, b, A, B;
};
SpectralValues interpolate_spectral(const SpectralTable& t, cplx lambda);

}  // namespace csto
