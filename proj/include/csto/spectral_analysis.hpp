#pragma once

#include <functional>
#include <string>
#include <vector>

#include "csto/direct_problem.hpp"
#include "csto/types.hpp"

namespace csto {

// Column-swap combinations of the x- and y-transition functions, tabulated on
// the spectral row set.  Each node carries the one branch that is computable
// from boundedly-defined transition values at that angle:
//   alpha(l)      = conj(a(conj l)) A(l) - conj(b(conj l)) B(l)
//   alpha_star(l) = conj(alpha(conj l))
//   beta(l)       = a(l) B(l) - b(l) A(l)
//   beta_star(l)  = conj(beta(conj l))
// On the four rays where lambda^2 is real both branches exist and the direct
// one is stored; the reflected one follows from it by conjugation (and the
// parity of alpha, beta).
struct DerivedRow {
  cplx lambda;
  cplx alpha = 0.0;       // value of the branch named by alpha_kind
  char alpha_kind = 'n';  // 'a' direct, 's' reflected conjugate, 'n' unavailable
  cplx beta = 0.0;
  char beta_kind = 'n';   // 'b' direct, 's' reflected conjugate, 'n' unavailable
  cplx c_plus = 0.0;      // (aB - bA) exp(-4i lambda^6 L) where Im lambda^6 >= 0
  bool has_c_plus = false;
  bool flagged = false;   // |a| below the pole guard; excluded from cross-checks
};

struct DerivedSpectral {
  double L = 0.0;
  std::vector<DerivedRow> rows;  // parallel to the source table rows
  // Worst entrywise deviation in S1 * S3 = S2, the product identity linking
  // the three transition matrices, measured on the dual-branch rays.  The
  // conjugate-reflected entries are literal conjugates, so this deviation
  // equals |det S1 - 1| * |S2| there and is an honest measure of how well the
  // reflected branch approximates a true second solution.
  double s3_deviation = 0.0;
  int flagged_count = 0;
};

// Derives alpha, beta and c_plus from a canonically ordered spectral table
// (12 rays then 6 interior lines, as written by build_spectral_table).
DerivedSpectral derive_alpha_beta(const SpectralTable& table);

// Writes the table rows in the usual format with two extra columns appended
// (Re c_plus, Im c_plus) on the samples where the combination is defined.
void write_derived_table(const SpectralTable& table, const DerivedSpectral& derived,
                         const std::string& path);

// Pointwise record of the compatibility relation between initial and boundary
// spectral data: c_plus should stay bounded toward the truncation radius and
// aB - bA should decay there when both data sets come from one solution.
struct GlobalRelationRow {
  cplx lambda;
  double c_plus_abs = 0.0;
  double beta_abs = 0.0;  // |aB - bA|
};

struct GlobalRelationReport {
  std::vector<GlobalRelationRow> rows;  // samples with Im lambda^6 >= 0
  double max_c_plus = 0.0;
  double max_radial_growth = 0.0;  // worst outward consecutive-node |c_plus| ratio
  double outer_beta = 0.0;         // largest |aB - bA| among outermost nodes
};

GlobalRelationReport global_relation_residual(const SpectralTable& table, double L);

// ---------------------------------------------------------------------------
// zero location by the argument principle
// ---------------------------------------------------------------------------

struct SearchBox {
  double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
};

struct ZeroEntry {
  cplx location;
  cplx derivative;  // central-difference derivative of f at the zero
  int sector = 0;   // angular sector 1..12 counted from the positive real axis
  char family = 'a';
};

struct ZeroSet {
  std::vector<ZeroEntry> zeros;
  int winding_total = 0;  // argument-principle count over the whole search box
};

struct ZeroFindOptions {
  int max_depth = 10;
  double newton_tol = 1e-10;
  double derivative_step = 1e-6;
  cplx frame = 1.0;  // the search runs on g(z) = f(frame * z), box in z
  char family = 'a';
};

// Counts zeros inside the box by boundary winding, isolates them by recursive
// subdivision, and polishes each with Newton iteration.  Throws
// numerical_error when subdivision cannot separate the zeros (clustered or
// non-simple) or when a zero sits on a search boundary that nudging cannot
// clear.
ZeroSet find_zeros(const std::function<cplx(cplx)>& f, const SearchBox& box,
                   const ZeroFindOptions& opt = {});

// Largest |f - 1| sampled on the arc |lambda| = radius, arg in [arg_lo, arg_hi].
// A value below 1/2 certifies the arc encloses no sign change of f toward 1
// and is the exclusion bound used by the zero-free verdicts.
double boundary_deviation(const std::function<cplx(cplx)>& f, double radius, double arg_lo,
                          double arg_hi, int samples = 128);

// Argument-principle zero count of f over the annular sector
// { r_lo <= |lambda| <= r_hi, arg_lo <= arg lambda <= arg_hi }, the natural
// region shape for the wedge-analytic spectral functions.
int sector_winding(const std::function<cplx(cplx)>& f, double r_lo, double r_hi, double arg_lo,
                   double arg_hi);

// ---------------------------------------------------------------------------
// residue data for the pole-augmented solves
// ---------------------------------------------------------------------------

enum class RHPContext { principal, x_restricted, y_restricted, L_restricted };

// Evaluators for the spectral functions a residue coefficient needs; only the
// members a context uses have to be set.
struct SpectralFunctions {
  std::function<cplx(cplx)> b;     // principal and x contexts, zeros of a
  std::function<cplx(cplx)> B;     // y context, zeros of A
  std::function<cplx(cplx)> beta;  // principal and L contexts, zeros of alpha
};

// One pole condition: the residue of the given column at the pole equals
// coefficient * phase * (other column at the pole), with the phase factor
//   principal: exp(phase_sign * 2i theta),  theta = lambda^2 x + 2 lambda^6 y
//   x:         exp(phase_sign * 2i lambda^2 x)
//   y:         exp(phase_sign * 4i lambda^6 y)
//   L:         exp(phase_sign * 2i (lambda^2 x + 2 lambda^6 L))
struct ResidueEntry {
  cplx pole;
  int column = 2;
  cplx coefficient;
  int phase_sign = -1;
};

struct ResidueData {
  RHPContext context = RHPContext::principal;
  std::vector<ResidueEntry> entries;
};

// Builds the residue conditions for the zeros of the named family in the
// given solve context, pairing every pole with its conjugate-reflected
// partner.  Throws numerical_error when a coefficient denominator is
// degenerate and input_error when a zero family does not belong to the
// context or a needed evaluator is missing.
ResidueData residue_data(const ZeroSet& zeros, const SpectralFunctions& fs, RHPContext context);

}  // namespace csto
