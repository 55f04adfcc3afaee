#include "csto/rhp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "csto/io.hpp"
#include "csto/quad.hpp"

namespace csto {

namespace {

constexpr double kDenomFloor = 1e-12;     // singular-jump threshold
constexpr double kNearZone = 2.5;         // |z| below which the product rule is used
constexpr double kPoleClearance = 1e-3;   // minimum pole distance from the contour
constexpr double kPicardTol = 1e-13;
constexpr int kPicardMax = 60;
constexpr double kResidualTol = 1e-6;
constexpr double kConditionLimit = 1e12;
constexpr double kExponentCap = 300.0;    // |Re| cap before exp leaves double range

const std::vector<int> kAllRays{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
const std::vector<int> kAxisRays{0, 3, 6, 9};

bool uses_x_phase(RHPContext f) {
  return f == RHPContext::principal || f == RHPContext::x_restricted ||
         f == RHPContext::L_restricted;
}

// Exponent i*Phi with exp(-i Phi), exp(+i Phi) the two phase factors of the
// family's off-diagonal entries:
//   principal: Phi = 2 theta = 2(lambda^2 x + 2 lambda^6 y)
//   initial line: Phi = 2 lambda^2 x
//   boundary line: Phi = 4 lambda^6 y
//   final line: Phi = 2(lambda^2 x + 2 lambda^6 L)
cplx phase_exponent(RHPContext family, cplx lambda, double x, double y, double L) {
  const cplx l2 = lambda * lambda;
  const cplx l6 = l2 * l2 * l2;
  switch (family) {
    case RHPContext::principal: return 2.0 * iu * (l2 * x + 2.0 * l6 * y);
    case RHPContext::x_restricted: return 2.0 * iu * (l2 * x);
    case RHPContext::y_restricted: return 4.0 * iu * (l6 * y);
    case RHPContext::L_restricted: return 2.0 * iu * (l2 * x + 2.0 * l6 * L);
  }
  return {};
}

cplx safe_exp(cplx e) {
  if (e.real() > kExponentCap)
    throw numerical_error("phase factor overflows: Re exponent = " + fmt17(e.real()));
  if (e.real() < -kExponentCap) return 0.0;
  return std::exp(e);
}

void check_denominator(cplx v, const char* name, cplx lambda) {
  if (std::abs(v) < kDenomFloor)
    throw numerical_error(std::string("singular jump: |") + name + "| < 1e-12 at lambda = (" +
                          fmt17(lambda.real()) + ", " + fmt17(lambda.imag()) + ")");
}

// Jump on the rays where lambda^2 is real, common to the principal, initial-
// line, and final-line pictures up to which functions fill the slots.
Mat2 ray_jump(cplx aa, cplx bb, cplx as, cplx bs, cplx em, cplx ep, cplx lambda,
              const char* an, const char* asn) {
  check_denominator(aa, an, lambda);
  check_denominator(as, asn, lambda);
  return {1.0, (bb / aa) * em, -(bs / as) * ep, 1.0 / (aa * as)};
}

std::string family_name(RHPContext f) {
  switch (f) {
    case RHPContext::principal: return "principal";
    case RHPContext::x_restricted: return "initial-line";
    case RHPContext::y_restricted: return "boundary-line";
    case RHPContext::L_restricted: return "final-line";
  }
  return "?";
}

}  // namespace

const std::vector<int>& family_rays(RHPContext family) {
  return (family == RHPContext::principal || family == RHPContext::y_restricted) ? kAllRays
                                                                                 : kAxisRays;
}

Mat2 assemble_jump(RHPContext family, const SpectralTable& table, const DerivedSpectral& derived,
                   double x, double y, cplx lambda) {
  if (x < 0 || y < 0) throw input_error("x and y must be nonnegative");
  const Classification cls = classify(lambda);
  if (!cls.on_ray)
    throw input_error("lambda is not on a contour ray; jump matrices live on the rays only");
  const auto& rays = family_rays(family);
  if (std::find(rays.begin(), rays.end(), cls.ray) == rays.end())
    throw input_error("lambda lies on ray " + std::to_string(cls.ray) +
                      ", which carries no jump of the " + family_name(family) + " family");

  const SpectralValues sv = interpolate_spectral(table, lambda);
  const SpectralValues svc = interpolate_spectral(table, std::conj(lambda));
  // The exponent is evaluated lazily per branch: each triangular jump uses
  // only its decaying factor, and the two-sided jumps live on rays where the
  // exponent is purely imaginary.
  const cplx expo = phase_exponent(family, lambda, x, y, derived.L);
  const int k = cls.ray;

  if (family == RHPContext::y_restricted) {
    const cplx A = sv.A, B = sv.B;
    const cplx As = std::conj(svc.A), Bs = std::conj(svc.B);
    check_denominator(A, "A", lambda);
    check_denominator(As, "A reflection", lambda);
    return {1.0 / (A * As), (B / As) * safe_exp(-expo), -(Bs / A) * safe_exp(expo), 1.0};
  }

  if (family == RHPContext::L_restricted) {
    // All four final-line functions are available on these rays: the a,b
    // slots are direct both at lambda and at its conjugate.
    const cplx alpha = std::conj(svc.a) * sv.A - std::conj(svc.b) * sv.B;
    const cplx beta = sv.a * sv.B - sv.b * sv.A;
    const cplx alphas = sv.a * std::conj(svc.A) - sv.b * std::conj(svc.B);
    const cplx betas = std::conj(svc.a * svc.B - svc.b * svc.A);
    check_denominator(alpha, "alpha", lambda);
    check_denominator(alphas, "alpha reflection", lambda);
    return {1.0, -(beta / alphas) * safe_exp(-expo), (betas / alpha) * safe_exp(expo),
            1.0 / (alpha * alphas)};
  }

  if (family == RHPContext::x_restricted || k % 3 == 0) {
    // lambda^2 real: the two-sided jump in terms of a, b and their
    // reflections, with the principal phase collapsing to the initial-line
    // one at y = 0.
    return ray_jump(sv.a, sv.b, std::conj(svc.a), std::conj(svc.b), safe_exp(-expo),
                    safe_exp(expo), lambda, "a", "a reflection");
  }

  const int m = k % 6;
  if (m == 1 || m == 2) {
    // Sector boundary inside the upper lambda^2 half-plane: triangular jump
    // from a and the final-line alpha reflection; only the decaying phase
    // factor appears.
    const cplx a = sv.a;
    const cplx alphas = sv.a * std::conj(svc.A) - sv.b * std::conj(svc.B);
    const cplx Bs = std::conj(svc.B);
    check_denominator(a, "a", lambda);
    check_denominator(alphas, "alpha reflection", lambda);
    return {a / alphas, 0.0, -Bs * safe_exp(expo), alphas / a};
  }

  // Sector boundary inside the lower lambda^2 half-plane: the a,b slots hold
  // the reflected functions there, so the slot products give alpha directly.
  const cplx as = sv.a;
  const cplx alpha = sv.a * sv.A - sv.b * sv.B;
  const cplx B = sv.B;
  check_denominator(as, "a reflection", lambda);
  check_denominator(alpha, "alpha", lambda);
  return {as / alpha, B * safe_exp(-expo), 0.0, alpha / as};
}

Mat2 composite_jump(const SpectralTable& table, const DerivedSpectral& derived, double x, double y,
                    cplx lambda) {
  const Classification cls = classify(lambda);
  if (!cls.on_ray || cls.ray % 3 != 0)
    throw input_error("the composite jump needs the full slot set, which is only available "
                      "on the rays where lambda^2 is real");
  const SpectralValues sv = interpolate_spectral(table, lambda);
  const SpectralValues svc = interpolate_spectral(table, std::conj(lambda));
  // On these rays the exponent is purely imaginary, so both factors are safe.
  const cplx expo = phase_exponent(RHPContext::principal, lambda, x, y, derived.L);
  const cplx em = safe_exp(-expo);
  const cplx ep = safe_exp(expo);

  const Mat2 j1 = ray_jump(sv.a, sv.b, std::conj(svc.a), std::conj(svc.b), em, ep, lambda, "a",
                           "a reflection");
  const cplx alphas = sv.a * std::conj(svc.A) - sv.b * std::conj(svc.B);
  const cplx alpha = std::conj(svc.a) * sv.A - std::conj(svc.b) * sv.B;
  check_denominator(sv.a, "a", lambda);
  check_denominator(alphas, "alpha reflection", lambda);
  check_denominator(alpha, "alpha", lambda);
  const cplx as = std::conj(svc.a);
  check_denominator(as, "a reflection", lambda);
  const Mat2 j2{sv.a / alphas, 0.0, -std::conj(svc.B) * ep, alphas / sv.a};
  const Mat2 j3{as / alpha, sv.B * em, 0.0, alpha / as};
  return j2 * j1.inverse() * j3;
}

JumpAssembly make_jump_assembly(RHPContext family, const SpectralTable& table,
                                const DerivedSpectral& derived, const Contour& contour) {
  if (!derived.rows.empty() && std::abs(derived.L - table.L) > 1e-12 * (1.0 + std::abs(table.L)))
    throw invariant_error("derived spectral data carry a different final line than the table");
  bool any = false;
  for (int k : family_rays(family)) any = any || !contour.rays[k].panels.empty();
  if (!any) throw input_error("contour has no panels on the family's rays");
  JumpAssembly out;
  out.contour = contour;
  out.family = family;
  out.table = table;
  out.derived = derived;
  out.jump = [family, table, derived](cplx lambda, double xx, double yy) {
    return assemble_jump(family, table, derived, xx, yy, lambda);
  };
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Discretization: panels in local coordinates s = c + h t.  The complex
// half-length h encodes the traversal direction (even rays outward, odd rays
// inward), which puts the minus side of every ray at Im t < 0 in the local
// frame.  Node radii are Gauss-Legendre points, so (c, h) is recovered
// exactly from the stored radii.
// ---------------------------------------------------------------------------

struct PanelFrame {
  int first = 0;                // global index of the panel's first node
  int count = 0;
  cplx c{0.0}, h{0.0};
  std::vector<double> t;        // local node parameters
  std::vector<double> glw;      // standard [-1,1] GL weights
  std::vector<double> P;        // P[n * count + j] = P_n(t[j])
};

struct Discretization {
  std::vector<Contour::Node> nodes;
  std::vector<cplx> zeta;
  std::vector<cplx> wphys;      // oriented measure h * glw per node
  std::vector<PanelFrame> panels;
  std::vector<int> node_panel;
  std::vector<int> outer_nodes;  // outermost node of each active ray
};

void legendre_row(double x, int m, double* out) {
  if (m <= 0) return;
  out[0] = 1.0;
  if (m == 1) return;
  out[1] = x;
  for (int n = 1; n + 1 < m; ++n) out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1);
}

Discretization discretize(const Contour& contour, const std::vector<int>& rays) {
  Discretization d;
  for (int k : rays) {
    const Ray& ray = contour.rays[k];
    if (ray.panels.empty()) continue;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const int ray_first = static_cast<int>(d.nodes.size());
    for (const Panel& p : ray.panels) {
      const int nn = static_cast<int>(p.radii.size());
      if (nn < 2) throw input_error("contour panels need at least two nodes");
      const GaussRule& rule = gauss_legendre(nn);
      const double half =
          (p.radii.back() - p.radii.front()) / (rule.nodes.back() - rule.nodes.front());
      const double mid = p.radii.front() - half * rule.nodes.front();
      PanelFrame f;
      f.first = static_cast<int>(d.nodes.size());
      f.count = nn;
      f.c = mid * ray.direction;
      f.h = sign * half * ray.direction;
      f.t.resize(nn);
      f.glw = rule.weights;
      for (int j = 0; j < nn; ++j) {
        f.t[j] = sign * rule.nodes[j];
        const cplx lam =
            p.stored_lambda.empty() ? p.radii[j] * ray.direction : p.stored_lambda[j];
        d.nodes.push_back({k, p.radii[j], p.weights[j], lam});
        d.zeta.push_back(lam);
        d.wphys.push_back(f.h * f.glw[j]);
        d.node_panel.push_back(static_cast<int>(d.panels.size()));
      }
      f.P.resize(static_cast<size_t>(nn) * nn);
      for (int j = 0; j < nn; ++j) {
        std::vector<double> col(nn);
        legendre_row(f.t[j], nn, col.data());
        for (int n = 0; n < nn; ++n) f.P[static_cast<size_t>(n) * nn + j] = col[n];
      }
      d.panels.push_back(std::move(f));
    }
    d.outer_nodes.push_back(ray_first);
    // outermost node = largest radius on the ray (panels are stored by radius)
    int best = ray_first;
    for (int i = ray_first; i < static_cast<int>(d.nodes.size()); ++i)
      if (d.nodes[i].r > d.nodes[best].r) best = i;
    d.outer_nodes.back() = best;
  }
  return d;
}

// Legendre functions of the second kind by upward recurrence; stable in
// absolute terms for the small orders used here.
void legendre_q_complex(cplx z, int m, cplx* out) {
  out[0] = 0.5 * std::log((z + 1.0) / (z - 1.0));
  if (m == 1) return;
  out[1] = z * out[0] - 1.0;
  for (int n = 1; n + 1 < m; ++n)
    out[n + 1] = ((2.0 * n + 1.0) * z * out[n] - double(n) * out[n - 1]) / (n + 1.0);
}

void legendre_q_pv(double x, int m, double* out) {
  out[0] = 0.5 * std::log((1.0 + x) / (1.0 - x));
  if (m == 1) return;
  out[1] = x * out[0] - 1.0;
  for (int n = 1; n + 1 < m; ++n) out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1);
}

// Collocation row of the Cauchy transform: C[f](target) ~ sum_j row[j] f_j.
// When the target is node own_node, its own panel takes the minus-side
// boundary values; panels seen from outside use the analytic kernel, either
// the product rule (near zone) or plain quadrature against 1/(s - zeta).
void cauchy_row(const Discretization& d, cplx target, int own_node, cplx* row) {
  const cplx itwo_pi_i = 1.0 / (2.0 * pi * iu);
  for (size_t pi_ = 0; pi_ < d.panels.size(); ++pi_) {
    const PanelFrame& f = d.panels[pi_];
    const int nn = f.count;
    if (nn > 32) throw input_error("contour panels are limited to 32 nodes");
    const bool own = own_node >= 0 && d.node_panel[own_node] == static_cast<int>(pi_);
    cplx qbuf[32];
    if (own) {
      const double ti = f.t[own_node - f.first];
      double qpv[32];
      legendre_q_pv(ti, nn, qpv);
      double pv[32];
      legendre_row(ti, nn, pv);
      for (int n = 0; n < nn; ++n) qbuf[n] = qpv[n] + (0.5 * pi) * iu * pv[n];
    } else {
      const cplx z = (target - f.c) / f.h;
      if (std::abs(z) > kNearZone) {
        for (int j = 0; j < nn; ++j) {
          const cplx s = f.c + f.h * f.t[j];
          row[f.first + j] += itwo_pi_i * f.h * f.glw[j] / (s - target);
        }
        continue;
      }
      legendre_q_complex(z, nn, qbuf);
    }
    for (int j = 0; j < nn; ++j) {
      cplx acc = 0.0;
      for (int n = 0; n < nn; ++n)
        acc += static_cast<double>(2 * n + 1) * f.P[static_cast<size_t>(n) * nn + j] * qbuf[n];
      row[f.first + j] += -itwo_pi_i * f.glw[j] * acc;
    }
  }
}

// Non-finite entries must register as a huge norm: max-based reductions would
// otherwise silently discard NaN and fake convergence.
double mat_norm(const Mat2& a) {
  const double s = std::abs(a.m11) + std::abs(a.m12) + std::abs(a.m21) + std::abs(a.m22);
  return std::isfinite(s) ? a.max_abs() : std::numeric_limits<double>::infinity();
}

double finite_or_huge(double x) {
  return std::isfinite(x) ? x : std::numeric_limits<double>::infinity();
}

double dist_to_segment(cplx p, cplx dir, double r_hi) {
  const double proj = (p * std::conj(dir)).real();
  const double perp = std::abs((p * std::conj(dir)).imag());
  if (proj < 0) return std::abs(p);
  if (proj > r_hi) return std::abs(p - r_hi * dir);
  return perp;
}

cplx sign_of(cplx v) { return std::abs(v) == 0.0 ? cplx{1.0} : v / std::abs(v); }

double hager_condition(const Eigen::MatrixXcd& A, const Eigen::PartialPivLU<Eigen::MatrixXcd>& lu) {
  const Eigen::Index n = A.rows();
  double anorm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) anorm = std::max(anorm, A.col(j).cwiseAbs().sum());
  Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, cplx{1.0 / static_cast<double>(n)});
  double est = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXcd y = lu.solve(x);
    // An overflowing application of the inverse is itself a singularity
    // report (an exact zero pivot can even slip past the triangular kernels
    // when the touched right-hand side entries happen to be zero).
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    const double ynorm = y.cwiseAbs().sum();
    if (k > 0 && ynorm <= est) break;
    est = ynorm;
    Eigen::VectorXcd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = sign_of(y[i]);
    const Eigen::VectorXcd z = lu.adjoint().solve(xi);
    if (!z.allFinite()) return std::numeric_limits<double>::infinity();
    Eigen::Index jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    x.setZero();
    x[jmax] = 1.0;
  }
  return anorm * est;
}

struct PoleTerm {
  cplx pole;
  int column = 2;    // column of M carrying the pole
  cplx rho;          // coefficient including the evaluated phase factor
};

}  // namespace

RHPSolution solve_rhp(const JumpAssembly& assembly, const ResidueData& residues, double x,
                      double y) {
  if (!assembly.jump) throw input_error("assembly has no jump evaluator");
  if (x < 0 || y < 0) throw input_error("x and y must be nonnegative");
  if (!residues.entries.empty() && residues.context != assembly.family)
    throw input_error("residue data were built for a different solve context");

  RHPSolution sol;
  sol.family = assembly.family;
  sol.x = x;
  sol.y = y;
  if (uses_x_phase(assembly.family) && x > 5.0)
    sol.warnings.push_back("x = " + fmt17(x) +
                           " exceeds the calibrated oscillation range x <= 5; accuracy degrades");
  if ((assembly.family == RHPContext::principal || assembly.family == RHPContext::y_restricted) &&
      y > 1.0)
    sol.warnings.push_back("y = " + fmt17(y) +
                           " exceeds the calibrated oscillation range y <= 1; accuracy degrades");
  if (!assembly.derived.rows.empty() && assembly.family == RHPContext::principal &&
      y > assembly.derived.L * (1.0 + 1e-12))
    sol.warnings.push_back("y = " + fmt17(y) + " lies beyond the tabulated final line L = " +
                           fmt17(assembly.derived.L));

  const Discretization d = discretize(assembly.contour, family_rays(assembly.family));
  const int N = static_cast<int>(d.nodes.size());
  if (N == 0) throw input_error("contour has no nodes on the family's rays");

  // Jump data at the nodes.
  std::vector<Mat2> W(N), J(N);
  for (int i = 0; i < N; ++i) {
    J[i] = assembly.jump(d.zeta[i], x, y);
    W[i] = J[i] - Mat2::identity();
    sol.jump_det_drift = std::max(sol.jump_det_drift, std::abs(J[i].det() - 1.0));
  }
  for (int i : d.outer_nodes)
    sol.outer_jump_deviation = std::max(sol.outer_jump_deviation, mat_norm(W[i]));

  // Residue terms: evaluate the phase at each pole and check clearance.
  const int nq = static_cast<int>(residues.entries.size());
  std::vector<PoleTerm> poles(nq);
  for (int q = 0; q < nq; ++q) {
    const ResidueEntry& e = residues.entries[q];
    double dist = std::numeric_limits<double>::infinity();
    for (int k : family_rays(assembly.family)) {
      if (assembly.contour.rays[k].panels.empty()) continue;
      const double r_hi = assembly.contour.rays[k].panels.back().radii.back();
      dist = std::min(dist, dist_to_segment(e.pole, assembly.contour.rays[k].direction, r_hi));
    }
    if (dist < kPoleClearance)
      throw input_error("residue pole at (" + fmt17(e.pole.real()) + ", " +
                        fmt17(e.pole.imag()) + ") is closer than 1e-3 to the contour");
    poles[q].pole = e.pole;
    poles[q].column = e.column;
    poles[q].rho = e.coefficient * safe_exp(static_cast<double>(e.phase_sign) *
                                            phase_exponent(assembly.family, e.pole, x, y,
                                                           assembly.derived.L));
  }

  // Collocation kernel, then off-contour rows at the poles.
  Eigen::MatrixXcd K(N, N);
  {
    std::vector<cplx> row(N);
    for (int i = 0; i < N; ++i) {
      std::fill(row.begin(), row.end(), cplx{0.0});
      cauchy_row(d, d.zeta[i], i, row.data());
      for (int j = 0; j < N; ++j) K(i, j) = row[j];
    }
  }
  Eigen::MatrixXcd Koff(nq, N);
  {
    std::vector<cplx> row(N);
    for (int q = 0; q < nq; ++q) {
      std::fill(row.begin(), row.end(), cplx{0.0});
      cauchy_row(d, poles[q].pole, -1, row.data());
      for (int j = 0; j < N; ++j) Koff(q, j) = row[j];
    }
  }

  // Fixed-point sweep for U = M_minus - I and the pole column values v.
  std::vector<Mat2> U(N);
  std::vector<std::array<cplx, 2>> v(nq);
  for (int q = 0; q < nq; ++q) v[q] = {poles[q].column == 2 ? 1.0 : 0.0,
                                       poles[q].column == 2 ? 0.0 : 1.0};
  auto apply_map = [&](const std::vector<Mat2>& Uin, const std::vector<std::array<cplx, 2>>& vin,
                       std::vector<Mat2>& Uout, std::vector<std::array<cplx, 2>>& vout) {
    Eigen::MatrixXcd psi(N, 4);
    for (int j = 0; j < N; ++j) {
      const Mat2 p = (Mat2::identity() + Uin[j]) * W[j];
      psi(j, 0) = p.m11;
      psi(j, 1) = p.m12;
      psi(j, 2) = p.m21;
      psi(j, 3) = p.m22;
    }
    const Eigen::MatrixXcd c = K * psi;
    for (int i = 0; i < N; ++i) {
      Mat2 u{c(i, 0), c(i, 1), c(i, 2), c(i, 3)};
      for (int q = 0; q < nq; ++q) {
        const cplx t = poles[q].rho / (d.zeta[i] - poles[q].pole);
        if (poles[q].column == 1) {
          u.m11 += t * vin[q][0];
          u.m21 += t * vin[q][1];
        } else {
          u.m12 += t * vin[q][0];
          u.m22 += t * vin[q][1];
        }
      }
      Uout[i] = u;
    }
    const Eigen::MatrixXcd coff = Koff * psi;
    for (int q = 0; q < nq; ++q) {
      const int want = 3 - poles[q].column;  // column of M the condition reads
      std::array<cplx, 2> val{want == 1 ? 1.0 : 0.0, want == 1 ? 0.0 : 1.0};
      val[0] += coff(q, want == 1 ? 0 : 1);
      val[1] += coff(q, want == 1 ? 2 : 3);
      for (int p = 0; p < nq; ++p) {
        if (p == q || poles[p].column != want) continue;
        const cplx t = poles[p].rho / (poles[q].pole - poles[p].pole);
        val[0] += t * vin[p][0];
        val[1] += t * vin[p][1];
      }
      vout[q] = val;
    }
  };

  std::vector<Mat2> Unew(N);
  std::vector<std::array<cplx, 2>> vnew(nq);
  bool converged = false;
  double best_delta = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= kPicardMax; ++iter) {
    apply_map(U, v, Unew, vnew);
    double delta = 0.0, unorm = 0.0;
    for (int i = 0; i < N; ++i) {
      delta = std::max(delta, mat_norm(Unew[i] - U[i]));
      unorm = std::max(unorm, mat_norm(Unew[i]));
    }
    for (int q = 0; q < nq; ++q)
      delta = std::max({delta, finite_or_huge(std::abs(vnew[q][0] - v[q][0])),
                        finite_or_huge(std::abs(vnew[q][1] - v[q][1]))});
    U.swap(Unew);
    v.swap(vnew);
    sol.iterations = iter;
    if (delta <= kPicardTol * std::max(1.0, unorm)) {
      converged = true;
      break;
    }
    if (delta < best_delta) best_delta = delta;
    if (iter >= 6 && delta > 4.0 * best_delta && delta > 1e-10) break;  // diverging
  }

  if (!converged) {
    // Direct path: one dense system per row of U; the coefficient matrix is
    // shared because right-multiplication by W never mixes rows.
    const int dim = 2 * N + nq;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(dim, dim);
    for (int i = 0; i < N; ++i)
      for (int c = 1; c <= 2; ++c)
        for (int j = 0; j < N; ++j)
          for (int dd = 1; dd <= 2; ++dd) {
            const cplx w = (dd == 1) ? (c == 1 ? W[j].m11 : W[j].m12)
                                     : (c == 1 ? W[j].m21 : W[j].m22);
            A(2 * i + c - 1, 2 * j + dd - 1) -= K(i, j) * w;
          }
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < nq; ++q)
        A(2 * i + poles[q].column - 1, 2 * N + q) -= poles[q].rho / (d.zeta[i] - poles[q].pole);
    for (int q = 0; q < nq; ++q) {
      const int want = 3 - poles[q].column;
      for (int j = 0; j < N; ++j)
        for (int dd = 1; dd <= 2; ++dd) {
          const cplx w = (dd == 1) ? (want == 1 ? W[j].m11 : W[j].m12)
                                   : (want == 1 ? W[j].m21 : W[j].m22);
          A(2 * N + q, 2 * j + dd - 1) -= Koff(q, j) * w;
        }
      for (int p = 0; p < nq; ++p) {
        if (p == q || poles[p].column != want) continue;
        A(2 * N + q, 2 * N + p) -= poles[p].rho / (poles[q].pole - poles[p].pole);
      }
    }

    Eigen::MatrixXcd rhs(dim, 2);
    for (int row = 1; row <= 2; ++row) {
      for (int i = 0; i < N; ++i)
        for (int c = 1; c <= 2; ++c) {
          cplx g = 0.0;
          for (int j = 0; j < N; ++j)
            g += K(i, j) * (row == 1 ? (c == 1 ? W[j].m11 : W[j].m12)
                                     : (c == 1 ? W[j].m21 : W[j].m22));
          rhs(2 * i + c - 1, row - 1) = g;
        }
      for (int q = 0; q < nq; ++q) {
        const int want = 3 - poles[q].column;
        cplx g = (row == want) ? 1.0 : 0.0;
        for (int j = 0; j < N; ++j)
          g += Koff(q, j) * (row == 1 ? (want == 1 ? W[j].m11 : W[j].m12)
                                      : (want == 1 ? W[j].m21 : W[j].m22));
        rhs(2 * N + q, row - 1) = g;
      }
    }

    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    sol.condition = hager_condition(A, lu);
    // A non-finite estimate is an ill-conditioning report too, so compare
    // through the negation.
    if (!(sol.condition <= kConditionLimit))
      throw numerical_error("collocation system is ill-conditioned: condition estimate " +
                            fmt17(sol.condition) + " exceeds 1e12");
    const Eigen::MatrixXcd sol2 = lu.solve(rhs);
    for (int i = 0; i < N; ++i) {
      U[i].m11 = sol2(2 * i + 0, 0);
      U[i].m12 = sol2(2 * i + 1, 0);
      U[i].m21 = sol2(2 * i + 0, 1);
      U[i].m22 = sol2(2 * i + 1, 1);
    }
    for (int q = 0; q < nq; ++q) v[q] = {sol2(2 * N + q, 0), sol2(2 * N + q, 1)};
    sol.iterations = 0;
  }

  // Residual of the fixed-point equation with the final data.
  apply_map(U, v, Unew, vnew);
  double delta = 0.0, mnorm = 1.0;
  for (int i = 0; i < N; ++i) {
    delta = std::max(delta, mat_norm(Unew[i] - U[i]));
    mnorm = std::max(mnorm, mat_norm(Mat2::identity() + U[i]));
  }
  for (int q = 0; q < nq; ++q)
    delta = std::max({delta, finite_or_huge(std::abs(vnew[q][0] - v[q][0])),
                      finite_or_huge(std::abs(vnew[q][1] - v[q][1]))});
  sol.residual = delta / mnorm;
  if (!(sol.residual <= kResidualTol))
    throw numerical_error("collocation did not converge: residual " + fmt17(sol.residual) +
                          " after " + std::to_string(sol.iterations) +
                          " sweeps (condition estimate " + fmt17(sol.condition) + ")");

  // Boundary values, drift metrics, and the expansion coefficients.
  sol.nodes = d.nodes;
  sol.M_minus.resize(N);
  sol.M_plus.resize(N);
  for (int i = 0; i < N; ++i) {
    sol.M_minus[i] = Mat2::identity() + U[i];
    sol.M_plus[i] = sol.M_minus[i] * J[i];
    sol.det_m_drift = std::max(sol.det_m_drift, std::abs(sol.M_minus[i].det() - 1.0));
  }
  for (int i : d.outer_nodes)
    sol.outer_solution_deviation =
        std::max(sol.outer_solution_deviation, mat_norm(sol.M_minus[i] - Mat2::identity()));

  const cplx mtwo_pi_i = -1.0 / (2.0 * pi * iu);
  for (int j = 0; j < 5; ++j) sol.m[j] = Mat2{};
  for (int i = 0; i < N; ++i) {
    const Mat2 psi = sol.M_minus[i] * W[i];
    cplx mono = 1.0;
    for (int j = 0; j < 5; ++j) {
      sol.m[j] = sol.m[j] + (mtwo_pi_i * d.wphys[i] * mono) * psi;
      mono *= d.zeta[i];
    }
  }
  for (int q = 0; q < nq; ++q) {
    cplx mono = 1.0;
    for (int j = 0; j < 5; ++j) {
      Mat2 R{};
      if (poles[q].column == 1) {
        R.m11 = poles[q].rho * v[q][0];
        R.m21 = poles[q].rho * v[q][1];
      } else {
        R.m12 = poles[q].rho * v[q][0];
        R.m22 = poles[q].rho * v[q][1];
      }
      sol.m[j] = sol.m[j] + mono * R;
      mono *= poles[q].pole;
    }
  }
  sol.pole_values.assign(v.begin(), v.end());
  return sol;
}

std::vector<Mat2> extract_coefficients(const RHPSolution& solution, int order) {
  if (order < 1 || order > 5)
    throw input_error("coefficient order " + std::to_string(order) +
                      " is unsupported; orders 1..5 are available");
  return {solution.m.begin(), solution.m.begin() + order};
}

Mat2 cyclic_ray_product(const JumpAssembly& assembly, double x, double y, double r) {
  if (!(r > 0)) throw input_error("cyclic product radius must be positive");
  Mat2 prod = Mat2::identity();
  for (int k : family_rays(assembly.family)) {
    const Mat2 j = assembly.jump(r * ray_direction(k), x, y);
    prod = prod * ((k % 2 == 0) ? j : j.inverse());
  }
  return prod;
}

std::array<std::vector<double>, 12> phase_graded_bounds(RHPContext family, double radius,
                                                        double x_max, double y_max, double L,
                                                        double phase_budget) {
  if (!(radius > 2e-3)) throw input_error("truncation radius must exceed 2e-3");
  if (!(phase_budget > 0)) throw input_error("phase budget must be positive");
  if (x_max < 0 || y_max < 0 || L < 0) throw input_error("coordinate bounds must be nonnegative");
  double c2 = 0.0, c6 = 0.0;
  switch (family) {
    case RHPContext::principal: c2 = 2.0 * x_max; c6 = 4.0 * y_max; break;
    case RHPContext::x_restricted: c2 = 2.0 * x_max; break;
    case RHPContext::y_restricted: c6 = 4.0 * y_max; break;
    case RHPContext::L_restricted: c2 = 2.0 * x_max; c6 = 4.0 * L; break;
  }
  const auto phase = [&](double r) { return c2 * r * r + c6 * std::pow(r, 6); };

  std::vector<double> b{1e-3};
  while (b.back() < radius * (1.0 - 1e-12)) {
    const double cur = b.back();
    double next = std::min({cur * 2.8, cur + 0.45, radius});
    if (phase(next) - phase(cur) > phase_budget) {
      double lo = cur, hi = next;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phase(mid) - phase(cur) > phase_budget ? hi : lo) = mid;
      }
      next = hi;
    }
    if (!(next > cur * (1.0 + 1e-9)))
      throw numerical_error("phase grading stalled: oscillation too fast for a panel");
    b.push_back(next);
  }
  b.back() = radius;
  std::array<std::vector<double>, 12> out;
  for (auto& e : out) e = b;
  return out;
}

std::string solve_report(const RHPSolution& s) {
  std::ostringstream ss;
  ss << "family " << family_name(s.family) << "\n";
  ss << "x " << fmt17(s.x) << "\n";
  ss << "y " << fmt17(s.y) << "\n";
  ss << "nodes " << s.nodes.size() << "\n";
  ss << "residual " << fmt17(s.residual) << "\n";
  ss << "condition " << fmt17(s.condition) << "\n";
  ss << "jump-det-drift " << fmt17(s.jump_det_drift) << "\n";
  ss << "det-m-drift " << fmt17(s.det_m_drift) << "\n";
  ss << "outer-jump " << fmt17(s.outer_jump_deviation) << "\n";
  ss << "outer-solution " << fmt17(s.outer_solution_deviation) << "\n";
  ss << "m1 " << fmt17(s.m[0].m11.real()) << " " << fmt17(s.m[0].m11.imag()) << " "
     << fmt17(s.m[0].m12.real()) << " " << fmt17(s.m[0].m12.imag()) << " "
     << fmt17(s.m[0].m21.real()) << " " << fmt17(s.m[0].m21.imag()) << " "
     << fmt17(s.m[0].m22.real()) << " " << fmt17(s.m[0].m22.imag()) << "\n";
  for (const auto& w : s.warnings) ss << "warning " << w << "\n";
  return ss.str();
}

}  // namespace csto
