#include "csto/direct_problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "csto/io.hpp"
#include "csto/lax_pair.hpp"
#include "csto/ode.hpp"
#include "csto/quad.hpp"

namespace csto {

namespace {

std::string lambda_context(cplx lambda) {
  std::ostringstream os;
  os << "lambda = (" << lambda.real() << ", " << lambda.imag() << ")";
  return os.str();
}

OdeOptions make_ode_options(const IntegratorOptions& opt, cplx lambda) {
  OdeOptions o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.context = lambda_context(lambda);
  return o;
}

// Relative size of the imaginary part of the phase variable, used to decide
// whether both columns of a trace stay bounded.
double rel_imag(cplx z) { return std::imag(z) / std::max(std::abs(z), 1.0); }

void require_x_phase_real(cplx lambda, const char* what) {
  const cplx l2 = lambda * lambda;
  if (std::abs(rel_imag(l2)) > 1e-9)
    throw input_error(std::string("unbounded column requested: ") + what +
                      " needs lambda^2 real, " + lambda_context(lambda));
}

// lambda^6 by explicit multiplication: exact sign symmetry under lambda -> -lambda.
cplx lambda6(cplx lambda) {
  const cplx l2 = lambda * lambda;
  return l2 * l2 * l2;
}

void require_y_phase_real(cplx lambda, const char* what) {
  const cplx l6 = lambda6(lambda);
  if (std::abs(rel_imag(l6)) > 1e-9)
    throw input_error(std::string("unbounded column requested: ") + what +
                      " needs lambda^6 real, " + lambda_context(lambda));
}

// ---------------------------------------------------------------------------
// x side: the gauge-transformed flow at y = 0 acting on single columns.
// Column two carries the extra phase -2i lambda^2, column one its mirror.
struct XSide {
  ProfileInterp interp;
  cplx lambda;
  InterpMode mode;
  // In nearest mode the field is frozen per integration segment so the solver's
  // stage evaluations never straddle a cell edge.
  cplx frozen_u{0.0};
  bool frozen = false;

  XSide(const Profile& u0, cplx lam, InterpMode m) : interp(u0, m), lambda(lam), mode(m) {}

  void begin_segment(double a, double b) {
    if (mode == InterpMode::nearest) {
      frozen_u = interp.value(0.5 * (a + b));
      frozen = true;
    }
  }

  cplx field(double x) const { return frozen ? frozen_u : interp.value(x); }

  void col2(double x, const std::array<cplx, 2>& y, std::array<cplx, 2>& dy) const {
    const cplx u = field(x);
    const cplx ph = std::exp(cplx(0.0, -2.0) * interp.gauge(x));  // e^{-2iI}
    dy[0] = (cplx(0.0, -2.0) * (lambda * lambda) - iu * u) * y[0] + lambda * u * ph * y[1];
    dy[1] = 2.0 * lambda / ph * y[0] + iu * u * y[1];
  }

  void col1(double x, const std::array<cplx, 2>& y, std::array<cplx, 2>& dy) const {
    const cplx u = field(x);
    const cplx ph = std::exp(cplx(0.0, -2.0) * interp.gauge(x));
    dy[0] = -iu * u * y[0] + lambda * u * ph * y[1];
    dy[1] = 2.0 * lambda / ph * y[0] + (cplx(0.0, 2.0) * (lambda * lambda) + iu * u) * y[1];
  }

  // Integration must stop at the interpolant's discontinuities in nearest mode.
  std::vector<double> breakpoints(const Profile& p) const {
    std::vector<double> b;
    const int n = static_cast<int>(p.samples.size());
    for (int k = 0; k + 1 < n; ++k) b.push_back((k + 0.5) * p.h);
    return b;
  }
};

// ---------------------------------------------------------------------------
// y side: boundary-trace interpolation plus the accumulated second gauge leg
// I2(y) = integral of the closed one-form's dy component along x = 0.
struct YSide {
  double h = 0.0;
  double end = 0.0;
  cplx lambda;
  cplx l6;
  std::vector<cplx> g0, g1, g2, i2;

  YSide(const Profile& p0, const Profile& p1, const Profile& p2, cplx lam)
      : lambda(lam), l6(lambda6(lam)) {
    p0.validate();
    p1.validate();
    p2.validate();
    if (p0.samples.size() != p1.samples.size() || p0.samples.size() != p2.samples.size() ||
        p0.h != p1.h || p0.h != p2.h)
      throw input_error("boundary traces must share one grid: g0, g1, g2 differ in step or count");
    h = p0.h;
    end = p0.end();
    g0 = p0.samples;
    g1 = p1.samples;
    g2 = p2.samples;
    std::vector<cplx> d2(g0.size());
    for (size_t k = 0; k < g0.size(); ++k)
      d2[k] = delta_one_form(FieldJet{g0[k], g1[k], g2[k]}).d2;
    i2 = cumulative_integral(d2, h);
  }

  cplx eval(const std::vector<cplx>& arr, double y) const {
    const int n = static_cast<int>(arr.size());
    double yc = std::clamp(y, 0.0, end);
    int k = static_cast<int>(std::floor(yc / h));
    int base = std::min(std::max(k - 1, 0), n - 4);
    const double t = yc / h - base;
    const double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
    const double c0 = -t1 * t2 * t3 / 6.0;
    const double c1 = t0 * t2 * t3 / 2.0;
    const double c2 = -t0 * t1 * t3 / 2.0;
    const double c3 = t0 * t1 * t2 / 6.0;
    return c0 * arr[base] + c1 * arr[base + 1] + c2 * arr[base + 2] + c3 * arr[base + 3];
  }

  Mat2 n2(double y) const {
    return assemble_N2(eval(g0, y), eval(g1, y), eval(g2, y), eval(i2, y), lambda);
  }

  void col2(double y, const std::array<cplx, 2>& s, std::array<cplx, 2>& ds) const {
    const Mat2 n = n2(y);
    ds[0] = (cplx(0.0, -4.0) * l6 + n.m11) * s[0] + n.m12 * s[1];
    ds[1] = n.m21 * s[0] + n.m22 * s[1];
  }

  void col1(double y, const std::array<cplx, 2>& s, std::array<cplx, 2>& ds) const {
    const Mat2 n = n2(y);
    ds[0] = n.m11 * s[0] + n.m12 * s[1];
    ds[1] = n.m21 * s[0] + (cplx(0.0, 4.0) * l6 + n.m22) * s[1];
  }
};

// Integrate one 2-component column through an ordered list of stops, recording
// the state at the flagged ones.  Stops are strictly monotone in the direction
// of travel; extra (non-recorded) stops mark interpolant discontinuities.  The
// hook runs before each segment (nearest mode freezes the field there).
template <class RHS, class Hook>
std::vector<std::array<cplx, 2>> run_column(RHS&& rhs, Hook&& hook, std::array<cplx, 2> state,
                                            const std::vector<double>& stops,
                                            const std::vector<bool>& record,
                                            const OdeOptions& oo) {
  std::vector<std::array<cplx, 2>> out;
  if (record[0]) out.push_back(state);
  for (size_t k = 0; k + 1 < stops.size(); ++k) {
    hook(stops[k], stops[k + 1]);
    integrate_ode<2>(rhs, stops[k], stops[k + 1], state, oo);
    if (record[k + 1]) out.push_back(state);
  }
  return out;
}

// Merge recording points and breakpoints into one monotone stop list.
void build_stops(const std::vector<double>& rec_pts, const std::vector<double>& breaks,
                 bool backward, std::vector<double>& stops, std::vector<bool>& record) {
  std::vector<std::pair<double, bool>> all;
  for (double r : rec_pts) all.emplace_back(r, true);
  const double lo = std::min(rec_pts.front(), rec_pts.back());
  const double hi = std::max(rec_pts.front(), rec_pts.back());
  for (double b : breaks)
    if (b > lo + 1e-15 && b < hi - 1e-15) all.emplace_back(b, false);
  std::sort(all.begin(), all.end());
  if (backward) std::reverse(all.begin(), all.end());
  stops.clear();
  record.clear();
  for (const auto& [pos, rec] : all) {
    if (!stops.empty() && std::abs(pos - stops.back()) < 1e-14) {
      record.back() = record.back() || rec;
      continue;
    }
    stops.push_back(pos);
    record.push_back(rec);
  }
}

std::vector<double> recording_grid(double h, size_t count, int stride) {
  std::vector<double> g;
  const int s = std::max(stride, 1);
  for (size_t k = 0; k < count; k += s) g.push_back(h * static_cast<double>(k));
  const double last = h * static_cast<double>(count - 1);
  if (g.back() != last) g.push_back(last);
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------

EigenfunctionTrace integrate_mu_x(const Profile& u0, cplx lambda, TraceKind which,
                                  const IntegratorOptions& opt) {
  if (which != TraceKind::mu1_y0 && which != TraceKind::mu3_y0)
    throw input_error("integrate_mu_x only produces the y = 0 traces");
  require_x_phase_real(lambda, "a full x-side trace");
  if (std::abs(lambda) < 1e-12)
    throw input_error("trace normalization is undefined at lambda = 0");

  XSide side(u0, lambda, opt.mode);
  const OdeOptions oo = make_ode_options(opt, lambda);
  const double X = side.interp.end();

  std::vector<double> rec = recording_grid(u0.h, u0.samples.size(), opt.trace_stride);
  std::vector<double> breaks =
      (opt.mode == InterpMode::nearest) ? side.breakpoints(u0) : std::vector<double>{};

  EigenfunctionTrace tr;
  tr.which = which;
  tr.lambda = lambda;

  const bool backward = (which == TraceKind::mu1_y0);
  if (backward) std::reverse(rec.begin(), rec.end());

  std::vector<double> stops;
  std::vector<bool> record;
  build_stops(rec, breaks, backward, stops, record);

  std::array<cplx, 2> c1, c2;
  if (which == TraceKind::mu1_y0) {
    // Normalized to I as x -> infinity; at the data's end the second column is
    // exactly (0,1) while the first keeps its non-decaying partner entry.
    const cplx tail = iu / lambda * std::exp(cplx(0.0, 2.0) * side.interp.gauge(X));
    c1 = {1.0, tail};
    c2 = {0.0, 1.0};
  } else {
    c1 = {1.0, 0.0};
    c2 = {0.0, 1.0};
  }

  auto seg = [&side](double a, double b) { side.begin_segment(a, b); };
  auto v1 = run_column([&side](double x, const auto& y, auto& dy) { side.col1(x, y, dy); },
                       seg, c1, stops, record, oo);
  auto v2 = run_column([&side](double x, const auto& y, auto& dy) { side.col2(x, y, dy); },
                       seg, c2, stops, record, oo);

  std::vector<double> grid;
  for (size_t k = 0; k < stops.size(); ++k)
    if (record[k]) grid.push_back(stops[k]);
  if (backward) {
    std::reverse(grid.begin(), grid.end());
    std::reverse(v1.begin(), v1.end());
    std::reverse(v2.begin(), v2.end());
  }
  tr.grid = std::move(grid);
  tr.values.resize(v1.size());
  for (size_t k = 0; k < v1.size(); ++k)
    tr.values[k] = {v1[k][0], v2[k][0], v1[k][1], v2[k][1]};
  return tr;
}

EigenfunctionTrace integrate_mu_y(const Profile& g0, const Profile& g1, const Profile& g2,
                                  cplx lambda, TraceKind which, const IntegratorOptions& opt) {
  if (which != TraceKind::mu2_x0 && which != TraceKind::mu3_x0)
    throw input_error("integrate_mu_y only produces the x = 0 traces");
  require_y_phase_real(lambda, "a full y-side trace");

  YSide side(g0, g1, g2, lambda);
  const OdeOptions oo = make_ode_options(opt, lambda);

  std::vector<double> rec = recording_grid(g0.h, g0.samples.size(), opt.trace_stride);

  EigenfunctionTrace tr;
  tr.which = which;
  tr.lambda = lambda;

  const bool backward = (which == TraceKind::mu2_x0);
  if (backward) std::reverse(rec.begin(), rec.end());

  std::vector<double> stops;
  std::vector<bool> record;
  build_stops(rec, {}, backward, stops, record);

  std::array<cplx, 2> c1 = {1.0, 0.0};
  std::array<cplx, 2> c2 = {0.0, 1.0};

  auto noseg = [](double, double) {};
  auto v1 = run_column([&side](double y, const auto& s, auto& ds) { side.col1(y, s, ds); },
                       noseg, c1, stops, record, oo);
  auto v2 = run_column([&side](double y, const auto& s, auto& ds) { side.col2(y, s, ds); },
                       noseg, c2, stops, record, oo);

  std::vector<double> grid;
  for (size_t k = 0; k < stops.size(); ++k)
    if (record[k]) grid.push_back(stops[k]);
  if (backward) {
    std::reverse(grid.begin(), grid.end());
    std::reverse(v1.begin(), v1.end());
    std::reverse(v2.begin(), v2.end());
  }
  tr.grid = std::move(grid);
  tr.values.resize(v1.size());
  for (size_t k = 0; k < v1.size(); ++k)
    tr.values[k] = {v1[k][0], v2[k][0], v1[k][1], v2[k][1]};
  return tr;
}

std::pair<cplx, cplx> compute_ab(const Profile& u0, cplx lambda, const IntegratorOptions& opt) {
  const cplx l2 = lambda * lambda;
  if (rel_imag(l2) < -1e-9)
    throw input_error("unbounded column requested: a and b need Im lambda^2 >= 0, " +
                      lambda_context(lambda));
  XSide side(u0, lambda, opt.mode);
  const OdeOptions oo = make_ode_options(opt, lambda);
  const double X = side.interp.end();

  std::array<cplx, 2> s = {0.0, 1.0};
  if (opt.mode == InterpMode::nearest) {
    std::vector<double> stops, breaks = side.breakpoints(u0);
    std::vector<bool> record;
    build_stops({X, 0.0}, breaks, true, stops, record);
    for (size_t k = 0; k + 1 < stops.size(); ++k) {
      side.begin_segment(stops[k], stops[k + 1]);
      integrate_ode<2>([&side](double x, const auto& y, auto& dy) { side.col2(x, y, dy); },
                       stops[k], stops[k + 1], s, oo);
    }
  } else {
    integrate_ode<2>([&side](double x, const auto& y, auto& dy) { side.col2(x, y, dy); },
                     X, 0.0, s, oo);
  }
  return {s[1], s[0]};  // a = mu1_22(0), b = mu1_12(0)
}

std::pair<cplx, cplx> compute_AB(const Profile& g0, const Profile& g1, const Profile& g2,
                                 cplx lambda, const IntegratorOptions& opt) {
  const cplx l6 = lambda6(lambda);
  if (rel_imag(l6) < -1e-9)
    throw input_error("unbounded column requested: A and B need Im lambda^6 >= 0, " +
                      lambda_context(lambda));
  YSide side(g0, g1, g2, lambda);
  const OdeOptions oo = make_ode_options(opt, lambda);

  std::array<cplx, 2> s = {0.0, 1.0};
  integrate_ode<2>([&side](double y, const auto& yy, auto& dy) { side.col2(y, yy, dy); },
                   side.end, 0.0, s, oo);
  return {s[1], s[0]};  // A = mu2_22(0), B = mu2_12(0)
}

ABCrossCheck compute_AB_cross(const Profile& g0, const Profile& g1, const Profile& g2,
                              cplx lambda, const IntegratorOptions& opt) {
  require_y_phase_real(lambda, "the cross-checked boundary spectral pair");
  auto [A, B] = compute_AB(g0, g1, g2, lambda, opt);

  // Independent route: integrate the eigenfunction normalized at y = 0 forward
  // and invert the y-scattering relation at y = L.
  EigenfunctionTrace tr = integrate_mu_y(g0, g1, g2, lambda, TraceKind::mu3_x0,
                                         [&] {
                                           IntegratorOptions o = opt;
                                           o.trace_stride = 1 << 30;  // endpoints only
                                           return o;
                                         }());
  const Mat2 m = tr.values.back();
  const double L = tr.grid.back();
  const cplx l6 = lambda6(lambda);
  const cplx B_cross = -m.m12 * std::exp(cplx(0.0, 4.0) * l6 * L);
  const cplx B_breve = -m.m21 * std::exp(cplx(0.0, -4.0) * l6 * L);
  const cplx A_breve = m.m22;
  const cplx A_cross = (1.0 + B_cross * B_breve) / A_breve;

  ABCrossCheck r;
  r.A = A;
  r.B = B;
  r.A_cross = A_cross;
  r.B_cross = B_cross;
  r.discrepancy = std::max(std::abs(A - A_cross), std::abs(B - B_cross));
  return r;
}

// ---------------------------------------------------------------------------

std::pair<cplx, cplx> oracle_ab_piecewise_constant(const std::vector<PiecewiseStep>& steps,
                                                   cplx lambda) {
  if (steps.empty()) return {1.0, 0.0};
  for (const auto& s : steps) {
    if (!(s.x_hi > s.x_lo)) throw input_error("piecewise-constant interval has non-positive length");
    if (s.x_lo < -1e-15) throw input_error("piecewise-constant interval starts left of 0");
  }
  for (size_t k = 1; k < steps.size(); ++k)
    if (steps[k].x_lo < steps[k - 1].x_hi - 1e-15)
      throw input_error("overlapping intervals in piecewise-constant data");

  const double X = steps.back().x_hi;
  const cplx l2 = lambda * lambda;
  if (std::abs(std::imag(l2)) * X > 600.0)
    throw numerical_error("matrix-exponential oracle overflows at " + lambda_context(lambda));

  // Ordered product of interval propagators for psi' = U psi, psi(0) = I,
  // with gaps between intervals contributing u = 0 (the flow matrix does not
  // vanish there).
  Mat2 phi = Mat2::identity();
  cplx gauge_total = 0.0;
  double pos = 0.0;
  auto advance = [&](double lo, double hi, cplx u) {
    if (hi - lo < 1e-15) return;
    const double len = hi - lo;
    phi = exp_tracefree(len * assemble_U(u, lambda)) * phi;
    gauge_total += u / 2.0 * len;
  };
  for (const auto& s : steps) {
    advance(pos, s.x_lo, 0.0);
    advance(std::max(pos, s.x_lo), s.x_hi, s.u);
    pos = s.x_hi;
  }

  // Undo the plane-wave dressing at the far end: the normalized eigenfunction
  // at 0 is phi(X)^{-1} e^{-i(lambda^2 X - I(X)) sigma3}, and (a, b) sit in its
  // second column.
  const Mat2 inv = phi.inverse();
  const cplx ph = std::exp(iu * (l2 * X - gauge_total));
  return {inv.m22 * ph, inv.m12 * ph};
}

std::vector<PiecewiseStep> steps_from_profile_nearest(const Profile& p) {
  p.validate();
  std::vector<PiecewiseStep> steps;
  const int n = static_cast<int>(p.samples.size());
  const double end = p.end();
  for (int k = 0; k < n; ++k) {
    const double lo = std::max(0.0, (k - 0.5) * p.h);
    const double hi = std::min((k + 0.5) * p.h, end);
    if (hi <= lo) continue;
    if (std::abs(p.samples[k]) == 0.0) continue;  // gaps are implicit zeros
    steps.push_back({lo, hi, p.samples[k]});
  }
  return steps;
}

// ---------------------------------------------------------------------------

namespace {

SpectralRow make_row(char kind, int index, cplx lambda, const Profile& u0, const Profile& g0,
                     const Profile& g1, const Profile& g2, const IntegratorOptions& opt) {
  SpectralRow row;
  row.kind = kind;
  row.index = index;
  row.lambda = lambda;

  // Branch selection is geometric (by ray or sector membership), so each
  // tabulated line carries one single-valued function of the radius: on rays
  // 4, 5, 10, 11 and the even-sector lines Im lambda^2 < 0 away from the
  // origin, and on the even-sector lines Im lambda^6 < 0; those nodes store
  // the reflected conjugate — the combination the jump matrices consume there.
  const bool ab_direct = (kind == 'r') ? !(index % 6 == 4 || index % 6 == 5) : (index <= 3);
  const bool AB_direct = (kind == 'r') ? true : (index % 2 == 1);

  if (ab_direct) {
    std::tie(row.a, row.b) = compute_ab(u0, lambda, opt);
  } else {
    auto [ar, br] = compute_ab(u0, std::conj(lambda), opt);
    row.a = std::conj(ar);
    row.b = std::conj(br);
  }

  if (AB_direct) {
    std::tie(row.A, row.B) = compute_AB(g0, g1, g2, lambda, opt);
  } else {
    auto [Ar, Br] = compute_AB(g0, g1, g2, std::conj(lambda), opt);
    row.A = std::conj(Ar);
    row.B = std::conj(Br);
  }
  return row;
}

}  // namespace

SpectralTable build_spectral_table(const Profile& u0, const Profile& g0, const Profile& g1,
                                   const Profile& g2, const Contour& contour,
                                   const IntegratorOptions& opt) {
  u0.validate();
  SpectralTable t;
  t.X_max = u0.end();
  t.L = g0.end();
  t.tolerance = opt.rtol;
  {
    std::ostringstream os;
    os << "u0: n=" << u0.samples.size() << " h=" << u0.h << "; g: n=" << g0.samples.size()
       << " h=" << g0.h << "; contour: R=" << contour.truncation_radius
       << " nodes_per_ray=" << contour.nodes_per_ray;
    t.grids = os.str();
  }

  for (int k = 0; k < 12; ++k)
    for (const auto& node : contour.ray_nodes(k))
      t.rows.push_back(make_row('r', k, node.lambda, u0, g0, g1, g2, opt));

  // One interior radial line per sector: the full mid-angle line, whose two
  // half-lines lie in the sector's two wedges, so the node set is closed under
  // conjugation and negation.
  const auto radii = contour.ray_nodes(0);
  for (int s = 1; s <= 6; ++s) {
    const double ang = (2 * s - 1) * pi / 12.0;
    const cplx dir = std::polar(1.0, ang);
    for (const auto& node : radii)
      t.rows.push_back(make_row('s', s, node.r * dir, u0, g0, g1, g2, opt));
    for (const auto& node : radii)
      t.rows.push_back(make_row('s', s, -(node.r * dir), u0, g0, g1, g2, opt));
  }
  return t;
}

void write_spectral_table(const SpectralTable& t, const std::string& path) {
  std::ostringstream ss;
  ss << "# spectral_table X_max=" << fmt17(t.X_max) << " L=" << fmt17(t.L)
     << " tol=" << fmt17(t.tolerance) << " rows=" << t.rows.size() << "\n";
  ss << "# grids " << t.grids << "\n";
  ss << "# convention: where Im lambda^2 < 0 the a,b columns hold conj(a(conj(lambda))),"
        " conj(b(conj(lambda))); likewise A,B where Im lambda^6 < 0\n";
  for (const auto& r : t.rows) {
    ss << (r.kind == 'r' ? "ray" : "sector") << ' ' << r.index;
    for (cplx v : {r.lambda, r.a, r.b, r.A, r.B})
      ss << ' ' << fmt17(v.real()) << ' ' << fmt17(v.imag());
    ss << "\n";
  }
  atomic_write(path, ss.str());
}

SpectralTable read_spectral_table(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty spectral table file: " + path);
  SpectralTable t;
  long nrows = 0;
  if (std::sscanf(line.c_str(), "# spectral_table X_max=%lf L=%lf tol=%lf rows=%ld", &t.X_max,
                  &t.L, &t.tolerance, &nrows) != 4)
    throw input_error("malformed spectral table header in " + path + " at line 1");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# grids ", 0) == 0) {
      t.grids = line.substr(8);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    char word[16];
    int index;
    double v[10];
    if (std::sscanf(line.c_str(), "%15s %d %lf %lf %lf %lf %lf %lf %lf %lf %lf %lf", word,
                    &index, &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &v[6], &v[7], &v[8],
                    &v[9]) != 12)
      throw input_error("parse error in " + path + " at line " + std::to_string(lineno));
    SpectralRow r;
    if (std::string(word) == "ray")
      r.kind = 'r';
    else if (std::string(word) == "sector")
      r.kind = 's';
    else
      throw input_error("parse error in " + path + " at line " + std::to_string(lineno) +
                        ": unknown node kind '" + word + "'");
    r.index = index;
    r.lambda = {v[0], v[1]};
    r.a = {v[2], v[3]};
    r.b = {v[4], v[5]};
    r.A = {v[6], v[7]};
    r.B = {v[8], v[9]};
    t.rows.push_back(r);
  }
  if (static_cast<long>(t.rows.size()) != nrows)
    throw input_error("spectral table row count mismatch in " + path + ": header says " +
                      std::to_string(nrows) + ", found " + std::to_string(t.rows.size()));
  return t;
}

SpectralValues interpolate_spectral(const SpectralTable& t, cplx lambda) {
  if (std::abs(lambda) == 0.0) throw input_error("origin is unclassifiable");

  // Collect the table group sharing lambda's ray or half-line.
  const double ang = std::arg(lambda);
  std::vector<const SpectralRow*> group;
  for (const auto& r : t.rows) {
    const double da = std::remainder(std::arg(r.lambda) - ang, 2.0 * pi);
    if (std::abs(da) < 1e-9) group.push_back(&r);
  }
  if (group.size() < 4)
    throw input_error("lambda is not on a tabulated ray or interior line; evaluate the "
                      "spectral functions directly instead");
  std::sort(group.begin(), group.end(),
            [](const SpectralRow* a, const SpectralRow* b) {
              return std::abs(a->lambda) < std::abs(b->lambda);
            });

  const double r = std::abs(lambda);
  const double r_max = std::abs(group.back()->lambda);
  const double r_min = std::abs(group.front()->lambda);
  if (r > r_max * (1.0 + 1e-12) || r < r_min * (1.0 - 1e-12))
    throw input_error("lambda radius lies outside the tabulated range of its ray");

  // Local barycentric interpolation in the radius: an 8-node window around r
  // keeps the node set well conditioned on the geometrically graded radii.
  const size_t n = group.size();
  std::vector<double> rad(n);
  for (size_t j = 0; j < n; ++j) rad[j] = std::abs(group[j]->lambda);
  for (size_t j = 0; j < n; ++j)
    if (std::abs(r - rad[j]) < 1e-13 * std::max(1.0, r))
      return {group[j]->a, group[j]->b, group[j]->A, group[j]->B};

  const size_t win = std::min<size_t>(8, n);
  size_t lo = std::upper_bound(rad.begin(), rad.end(), r) - rad.begin();
  lo = (lo > win / 2) ? lo - win / 2 : 0;
  lo = std::min(lo, n - win);

  std::vector<double> w(win, 1.0);
  for (size_t j = 0; j < win; ++j)
    for (size_t k = 0; k < win; ++k)
      if (k != j) w[j] /= (rad[lo + j] - rad[lo + k]);

  cplx num_a = 0, num_b = 0, num_A = 0, num_B = 0, den = 0;
  for (size_t j = 0; j < win; ++j) {
    const SpectralRow& row = *group[lo + j];
    const cplx c = w[j] / (r - rad[lo + j]);
    num_a += c * row.a;
    num_b += c * row.b;
    num_A += c * row.A;
    num_B += c * row.B;
    den += c;
  }
  return {num_a / den, num_b / den, num_A / den, num_B / den};
}

}  // namespace csto
