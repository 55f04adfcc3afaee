#include "csto/spectral_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>

#include "csto/io.hpp"

namespace csto {

namespace {

// Signs of Im lambda^2 (P) and Im lambda^6 (S) on a table line; both are
// constant along each ray or full interior line (lambda^2 and lambda^6 have
// period pi in the argument, so the two half-lines agree).
struct RegionSigns {
  int P = 0;
  int S = 0;
};

RegionSigns node_signs(char kind, int index) {
  if (kind == 'r') {
    const int m = index % 6;
    return {(m == 0 || m == 3) ? 0 : (m <= 2 ? 1 : -1), 0};
  }
  return {index <= 3 ? 1 : -1, index % 2 == 1 ? 1 : -1};
}

// Canonical row order produced by build_spectral_table: 12 rays of n nodes,
// then 6 interior lines of 2n nodes (positive half first).  The conjugate of
// a node is again a node: ray k maps to ray (12-k) mod 12, and the h-half of
// line s maps to the (1-h)-half of line 7-s.
struct TableLayout {
  int n = 0;

  int conj_partner(int row) const {
    if (row < 12 * n) {
      const int k = row / n, i = row % n;
      return ((12 - k) % 12) * n + i;
    }
    const int j = row - 12 * n;
    const int s = j / (2 * n) + 1, h = (j % (2 * n)) / n, i = j % n;
    return 12 * n + (7 - s - 1) * 2 * n + (1 - h) * n + i;
  }

  int negation_partner(int row) const {
    if (row < 12 * n) {
      const int k = row / n, i = row % n;
      return ((k + 6) % 12) * n + i;
    }
    const int j = row - 12 * n;
    const int s = j / (2 * n) + 1, h = (j % (2 * n)) / n, i = j % n;
    return 12 * n + (s - 1) * 2 * n + (1 - h) * n + i;
  }
};

TableLayout check_layout(const SpectralTable& t) {
  const size_t total = t.rows.size();
  if (total == 0 || total % 24 != 0)
    throw invariant_error("spectral table rows are not in canonical build order: expected "
                          "12 rays plus 6 interior lines with a common node count, got " +
                          std::to_string(total) + " rows");
  TableLayout lay{static_cast<int>(total / 24)};
  for (size_t r = 0; r < total; ++r) {
    const auto& row = t.rows[r];
    const bool is_ray = r < static_cast<size_t>(12 * lay.n);
    const int expect_index = is_ray ? static_cast<int>(r) / lay.n
                                    : static_cast<int>(r - 12 * lay.n) / (2 * lay.n) + 1;
    if (row.kind != (is_ray ? 'r' : 's') || row.index != expect_index)
      throw invariant_error("spectral table rows are not in canonical build order near row " +
                            std::to_string(r));
    const cplx mate = t.rows[lay.conj_partner(static_cast<int>(r))].lambda;
    if (std::abs(std::conj(row.lambda) - mate) > 1e-9 * (1.0 + std::abs(row.lambda)))
      throw invariant_error("spectral table node set is not closed under conjugation near row " +
                            std::to_string(r));
  }
  return lay;
}

cplx lambda6(cplx l) {
  const cplx l2 = l * l;
  return l2 * l2 * l2;
}

// Real part of the exponent in exp(-4i lambda^6 L); past ~300 the factor
// leaves double range and the sample is omitted rather than stored as inf.
constexpr double kPhaseExponentCap = 300.0;

}  // namespace

DerivedSpectral derive_alpha_beta(const SpectralTable& table) {
  const TableLayout lay = check_layout(table);
  DerivedSpectral d;
  d.L = table.L;
  d.rows.resize(table.rows.size());

  for (size_t r = 0; r < table.rows.size(); ++r) {
    const SpectralRow& row = table.rows[r];
    const SpectralRow& mate = table.rows[lay.conj_partner(static_cast<int>(r))];
    const RegionSigns g = node_signs(row.kind, row.index);
    DerivedRow& out = d.rows[r];
    out.lambda = row.lambda;

    // Each branch combines only boundedly-defined transition values: the a,b
    // slots are direct where P >= 0 and the A,B slots where S >= 0, and
    // conjugation swaps a node with its mate, flipping both signs.
    if (g.P <= 0 && g.S >= 0) {
      out.alpha = std::conj(mate.a) * row.A - std::conj(mate.b) * row.B;
      out.alpha_kind = 'a';
    } else if (g.P >= 0 && g.S <= 0) {
      out.alpha = row.a * std::conj(mate.A) - row.b * std::conj(mate.B);
      out.alpha_kind = 's';
    }

    if (g.P >= 0 && g.S >= 0) {
      out.beta = row.a * row.B - row.b * row.A;
      out.beta_kind = 'b';
      const cplx ex = -4.0 * iu * lambda6(row.lambda) * table.L;
      if (ex.real() < kPhaseExponentCap) {
        out.c_plus = out.beta * std::exp(ex);
        out.has_c_plus = true;
      }
    } else if (g.P <= 0 && g.S <= 0) {
      out.beta = std::conj(mate.a * mate.B - mate.b * mate.A);
      out.beta_kind = 's';
    }

    if (std::abs(row.a) < 1e-12) {
      out.flagged = true;
      ++d.flagged_count;
    }
  }

  // Product identity S1 * S3 = S2 between the three transition matrices,
  // checkable on the four rays where lambda^2 is real because both branches
  // of every entry are available there.  With the reflected entries filled by
  // literal conjugates the identity holds up to the deviation of
  // a(l) conj(a(conj l)) - b(l) conj(b(conj l)) from one, so the reported
  // number measures exactly that defect.
  for (int k : {0, 3, 6, 9}) {
    for (int i = 0; i < lay.n; ++i) {
      const int r = k * lay.n + i;
      const int m = lay.conj_partner(r);
      if (d.rows[r].flagged || d.rows[m].flagged) continue;
      const SpectralRow& row = table.rows[r];
      const SpectralRow& mate = table.rows[m];
      const Mat2 S1{std::conj(mate.a), row.b, std::conj(mate.b), row.a};
      const Mat2 S2{std::conj(mate.A), row.B, std::conj(mate.B), row.A};
      const Mat2 S3{std::conj(d.rows[m].alpha), d.rows[r].beta, std::conj(d.rows[m].beta),
                    d.rows[r].alpha};
      d.s3_deviation = std::max(d.s3_deviation, (S1 * S3 - S2).max_abs());
    }
  }
  return d;
}

void write_derived_table(const SpectralTable& table, const DerivedSpectral& derived,
                         const std::string& path) {
  if (derived.rows.size() != table.rows.size())
    throw input_error("derived rows do not match the table: " +
                      std::to_string(derived.rows.size()) + " vs " +
                      std::to_string(table.rows.size()));
  std::ostringstream ss;
  ss << "# spectral_table X_max=" << fmt17(table.X_max) << " L=" << fmt17(table.L)
     << " tol=" << fmt17(table.tolerance) << " rows=" << table.rows.size() << "\n";
  ss << "# grids " << table.grids << "\n";
  ss << "# convention: where Im lambda^2 < 0 the a,b columns hold conj(a(conj(lambda))),"
        " conj(b(conj(lambda))); likewise A,B where Im lambda^6 < 0\n";
  ss << "# appended columns: Re c_plus, Im c_plus, defined flag, pole-guard flag\n";
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto& der = derived.rows[r];
    ss << (row.kind == 'r' ? "ray" : "sector") << ' ' << row.index;
    for (cplx v : {row.lambda, row.a, row.b, row.A, row.B})
      ss << ' ' << fmt17(v.real()) << ' ' << fmt17(v.imag());
    ss << ' ' << fmt17(der.c_plus.real()) << ' ' << fmt17(der.c_plus.imag()) << ' '
       << (der.has_c_plus ? 1 : 0) << ' ' << (der.flagged ? 1 : 0) << "\n";
  }
  atomic_write(path, ss.str());
}

GlobalRelationReport global_relation_residual(const SpectralTable& table, double L) {
  if (!(L > 0)) throw input_error("global relation check needs a positive domain length L");
  SpectralTable at = table;
  at.L = L;
  const TableLayout lay = check_layout(at);
  const DerivedSpectral d = derive_alpha_beta(at);

  GlobalRelationReport rep;
  // Radial groups: each ray, and each half of each interior line.
  std::vector<std::vector<int>> groups;
  for (int k = 0; k < 12; ++k) {
    std::vector<int> g(lay.n);
    for (int i = 0; i < lay.n; ++i) g[i] = k * lay.n + i;
    groups.push_back(std::move(g));
  }
  for (int s = 1; s <= 6; ++s)
    for (int h = 0; h < 2; ++h) {
      std::vector<int> g(lay.n);
      for (int i = 0; i < lay.n; ++i) g[i] = 12 * lay.n + (s - 1) * 2 * lay.n + h * lay.n + i;
      groups.push_back(std::move(g));
    }

  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](int a, int b) {
      return std::abs(d.rows[a].lambda) < std::abs(d.rows[b].lambda);
    });
    const double r_max = std::abs(d.rows[g.back()].lambda);
    int last_defined = -1;
    double prev_c = 0.0, prev_r = 0.0;
    bool have_prev = false;
    for (int idx : g) {
      const DerivedRow& row = d.rows[idx];
      if (row.beta_kind != 'b') continue;
      last_defined = idx;
      if (!row.has_c_plus) continue;
      const double cabs = std::abs(row.c_plus);
      rep.rows.push_back({row.lambda, cabs, std::abs(row.beta)});
      rep.max_c_plus = std::max(rep.max_c_plus, cabs);
      // Outward growth ratios, measured over the outer span of the line where
      // the large-|lambda| decay should have set in (the combination rises
      // linearly through the origin, so inner ratios only reflect oddness).
      if (have_prev && prev_c > 1e-30 && prev_r >= r_max / 4.0 - 1e-12)
        rep.max_radial_growth = std::max(rep.max_radial_growth, cabs / prev_c);
      prev_c = cabs;
      prev_r = std::abs(row.lambda);
      have_prev = true;
    }
    if (last_defined >= 0)
      rep.outer_beta = std::max(rep.outer_beta, std::abs(d.rows[last_defined].beta));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// zero location
// ---------------------------------------------------------------------------

namespace {

cplx central_diff(const std::function<cplx(cplx)>& f, cplx z, double h) {
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

// Winding number of f along a closed polyline given as parametrized segments
// (each maps [0,1) to the plane, consecutive segments joined end to start).
// Returns nullopt when |f| vanishes on the path to working precision, so the
// caller can nudge the region instead of dividing by near-zero phases.
std::optional<int> path_winding(const std::function<cplx(cplx)>& f,
                                const std::vector<std::function<cplx(double)>>& segs) {
  for (int per = 64; per <= 4096; per *= 2) {
    double total = 0.0;
    double scale = 0.0, min_abs = std::numeric_limits<double>::infinity();
    bool fine = true;
    cplx first = f(segs[0](0.0));
    cplx prev = first;
    scale = std::abs(first);
    min_abs = std::abs(first);
    for (size_t s = 0; s < segs.size() && fine; ++s)
      for (int i = (s == 0 ? 1 : 0); i < per && fine; ++i) {
        const cplx cur = f(segs[s](static_cast<double>(i) / per));
        const double m = std::abs(cur);
        min_abs = std::min(min_abs, m);
        scale = std::max(scale, m);
        const double dphi = std::arg(cur / prev);
        if (std::abs(dphi) > 1.5) {
          fine = false;
          break;
        }
        total += dphi;
        prev = cur;
      }
    if (min_abs < 1e-12 * std::max(scale, 1e-200)) return std::nullopt;
    if (!fine) continue;
    total += std::arg(first / prev);
    const double turns = total / (2.0 * pi);
    const long w = std::lround(turns);
    if (std::abs(turns - w) < 0.25) return static_cast<int>(w);
  }
  throw numerical_error("winding estimate unstable on the search boundary");
}

std::vector<std::function<cplx(double)>> box_path(const SearchBox& b) {
  return {
      [b](double t) { return cplx{b.re_lo + t * (b.re_hi - b.re_lo), b.im_lo}; },
      [b](double t) { return cplx{b.re_hi, b.im_lo + t * (b.im_hi - b.im_lo)}; },
      [b](double t) { return cplx{b.re_hi - t * (b.re_hi - b.re_lo), b.im_hi}; },
      [b](double t) { return cplx{b.re_lo, b.im_hi - t * (b.im_hi - b.im_lo)}; },
  };
}

// Winding around a box, growing it a few percent when a zero sits on the
// boundary; the final box is written back so children keep covering it.
int box_winding(const std::function<cplx(cplx)>& g, SearchBox& b) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (auto w = path_winding(g, box_path(b))) return *w;
    const double cr = 0.5 * (b.re_lo + b.re_hi), ci = 0.5 * (b.im_lo + b.im_hi);
    const double grow = 1.0 + 0.017 * (attempt + 1);
    b.re_lo = cr + (b.re_lo - cr) * grow;
    b.re_hi = cr + (b.re_hi - cr) * grow;
    b.im_lo = ci + (b.im_lo - ci) * grow;
    b.im_hi = ci + (b.im_hi - ci) * grow;
  }
  throw numerical_error("a zero sits on the search-box boundary and nudging cannot clear it");
}

std::optional<cplx> newton_polish(const std::function<cplx(cplx)>& g, cplx z,
                                  const SearchBox& b, const ZeroFindOptions& opt) {
  const double wr = b.re_hi - b.re_lo, wi = b.im_hi - b.im_lo;
  for (int it = 0; it < 60; ++it) {
    const cplx fz = g(z);
    if (std::abs(fz) < opt.newton_tol) {
      if (z.real() < b.re_lo - 0.35 * wr || z.real() > b.re_hi + 0.35 * wr ||
          z.imag() < b.im_lo - 0.35 * wi || z.imag() > b.im_hi + 0.35 * wi)
        return std::nullopt;
      return z;
    }
    const cplx d = central_diff(g, z, opt.derivative_step);
    if (!(std::abs(d) > 1e-300)) return std::nullopt;
    z -= fz / d;
    if (z.real() < b.re_lo - 0.5 * wr || z.real() > b.re_hi + 0.5 * wr ||
        z.imag() < b.im_lo - 0.5 * wi || z.imag() > b.im_hi + 0.5 * wi)
      return std::nullopt;
  }
  return std::nullopt;
}

void hunt_zeros(const std::function<cplx(cplx)>& g, SearchBox box, int depth,
                const ZeroFindOptions& opt, std::vector<cplx>& found) {
  const int w = box_winding(g, box);
  if (w == 0) return;
  if (w == 1) {
    const cplx center{0.5 * (box.re_lo + box.re_hi), 0.5 * (box.im_lo + box.im_hi)};
    if (auto z = newton_polish(g, center, box, opt)) {
      found.push_back(*z);
      return;
    }
  }
  if (depth >= opt.max_depth) {
    std::ostringstream os;
    os << "clustered or non-simple zeros: " << w << " zero(s) remain unresolved in the box ["
       << box.re_lo << ", " << box.re_hi << "] x [" << box.im_lo << ", " << box.im_hi << "]";
    throw numerical_error(os.str());
  }
  SearchBox a = box, c = box;
  if (box.re_hi - box.re_lo >= box.im_hi - box.im_lo) {
    const double mid = 0.5 * (box.re_lo + box.re_hi);
    a.re_hi = mid;
    c.re_lo = mid;
  } else {
    const double mid = 0.5 * (box.im_lo + box.im_hi);
    a.im_hi = mid;
    c.im_lo = mid;
  }
  hunt_zeros(g, a, depth + 1, opt, found);
  hunt_zeros(g, c, depth + 1, opt, found);
}

}  // namespace

ZeroSet find_zeros(const std::function<cplx(cplx)>& f, const SearchBox& box,
                   const ZeroFindOptions& opt) {
  if (!f) throw input_error("zero search needs a function to evaluate");
  if (!(box.re_hi > box.re_lo) || !(box.im_hi > box.im_lo))
    throw input_error("zero search box must have positive extent in both directions");
  const cplx frame = opt.frame;
  if (!(std::abs(frame) > 0)) throw input_error("zero search frame must be nonzero");
  auto g = [&f, frame](cplx z) { return f(frame * z); };

  SearchBox top = box;
  ZeroSet out;
  out.winding_total = box_winding(g, top);
  std::vector<cplx> found;
  hunt_zeros(g, top, 0, opt, found);

  for (cplx z : found) {
    const cplx loc = frame * z;
    bool dup = false;
    for (const auto& known : out.zeros)
      if (std::abs(known.location - loc) < 1e-8) dup = true;
    if (dup) continue;
    ZeroEntry e;
    e.location = loc;
    e.derivative = central_diff(f, loc, opt.derivative_step);
    double ang = std::arg(loc);
    if (ang < 0) ang += 2.0 * pi;
    e.sector = std::min(11, static_cast<int>(ang / (pi / 6.0))) + 1;
    e.family = opt.family;
    out.zeros.push_back(e);
  }
  if (static_cast<int>(out.zeros.size()) != out.winding_total)
    throw numerical_error("argument principle counts " + std::to_string(out.winding_total) +
                          " zero(s) but " + std::to_string(out.zeros.size()) +
                          " isolated point(s) were found");
  return out;
}

double boundary_deviation(const std::function<cplx(cplx)>& f, double radius, double arg_lo,
                          double arg_hi, int samples) {
  if (!f) throw input_error("boundary deviation needs a function to evaluate");
  if (!(radius > 0) || !(arg_hi > arg_lo) || samples < 2)
    throw input_error("boundary deviation needs a positive radius, an increasing argument "
                      "range and at least two samples");
  double dev = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double a = arg_lo + (arg_hi - arg_lo) * i / (samples - 1);
    dev = std::max(dev, std::abs(f(radius * std::polar(1.0, a)) - 1.0));
  }
  return dev;
}

int sector_winding(const std::function<cplx(cplx)>& f, double r_lo, double r_hi, double arg_lo,
                   double arg_hi) {
  if (!f) throw input_error("sector winding needs a function to evaluate");
  if (!(0 < r_lo) || !(r_lo < r_hi) || !(arg_hi > arg_lo))
    throw input_error("sector winding needs 0 < r_lo < r_hi and an increasing argument range");
  const std::vector<std::function<cplx(double)>> segs = {
      [=](double t) { return (r_lo + t * (r_hi - r_lo)) * std::polar(1.0, arg_lo); },
      [=](double t) { return r_hi * std::polar(1.0, arg_lo + t * (arg_hi - arg_lo)); },
      [=](double t) { return (r_hi - t * (r_hi - r_lo)) * std::polar(1.0, arg_hi); },
      [=](double t) { return r_lo * std::polar(1.0, arg_hi - t * (arg_hi - arg_lo)); },
  };
  if (auto w = path_winding(f, segs)) return *w;
  throw numerical_error("a zero sits on the sector boundary; shift the radii or angles");
}

// ---------------------------------------------------------------------------
// residue data
// ---------------------------------------------------------------------------

namespace {

const std::function<cplx(cplx)>& need_fn(const std::function<cplx(cplx)>& fn, const char* name) {
  if (!fn)
    throw input_error(std::string("residue evaluation needs the ") + name +
                      " evaluator for this context");
  return fn;
}

[[noreturn]] void wrong_family(char family, const char* ctx, const char* expect) {
  throw input_error(std::string(ctx) + " residues take zeros of " + expect +
                    ", got a zero tagged '" + family + "'");
}

void check_simple(const ZeroEntry& z) {
  if (std::abs(z.derivative) < 1e-8) {
    std::ostringstream os;
    os << "zero at (" << z.location.real() << ", " << z.location.imag()
       << ") is not numerically simple: |derivative| = " << std::abs(z.derivative);
    throw numerical_error(os.str());
  }
}

void check_denominator(cplx v, const char* name, cplx at) {
  if (std::abs(v) < 1e-10) {
    std::ostringstream os;
    os << "degenerate residue: |" << name << "| = " << std::abs(v) << " at the pole ("
       << at.real() << ", " << at.imag() << ")";
    throw numerical_error(os.str());
  }
}

}  // namespace

ResidueData residue_data(const ZeroSet& zeros, const SpectralFunctions& fs, RHPContext context) {
  ResidueData out;
  out.context = context;
  for (const ZeroEntry& z : zeros.zeros) {
    check_simple(z);
    cplx coef;
    int column, sign;
    switch (context) {
      case RHPContext::x_restricted:
        if (z.family != 'a') wrong_family(z.family, "x-restricted", "a");
        coef = need_fn(fs.b, "b")(z.location) / z.derivative;
        column = 2;
        sign = -1;
        break;
      case RHPContext::y_restricted: {
        if (z.family != 'A') wrong_family(z.family, "y-restricted", "A");
        const cplx Bv = need_fn(fs.B, "B")(z.location);
        check_denominator(Bv, "B", z.location);
        coef = 1.0 / (z.derivative * Bv);
        column = 1;
        sign = 1;
        break;
      }
      case RHPContext::L_restricted: {
        if (z.family != 'l') wrong_family(z.family, "L-restricted", "alpha");
        const cplx bv = need_fn(fs.beta, "beta")(z.location);
        check_denominator(bv, "beta", z.location);
        coef = 1.0 / (z.derivative * bv);
        column = 1;
        sign = 1;
        break;
      }
      case RHPContext::principal:
        if (z.family == 'a') {
          coef = need_fn(fs.b, "b")(z.location) / z.derivative;
          column = 2;
          sign = -1;
        } else if (z.family == 'l') {
          coef = -std::conj(need_fn(fs.beta, "beta")(std::conj(z.location))) / z.derivative;
          column = 1;
          sign = 1;
        } else {
          wrong_family(z.family, "principal", "a or alpha");
        }
        break;
      default:
        throw input_error("unknown residue context");
    }
    out.entries.push_back({z.location, column, coef, sign});
    out.entries.push_back({std::conj(z.location), 3 - column, std::conj(coef), -sign});
  }
  return out;
}

}  // namespace csto
