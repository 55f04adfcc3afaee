#include "csto/pde_oracle.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "csto/lax_pair.hpp"
#include "csto/profile.hpp"
#include "doctest.h"

namespace {

using csto::cplx;
using csto::iu;

bool mentions(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

// Manufactured solution u*(x,y) = eps * exp(q(x)) * exp(i*omega*y) with a
// quadratic exponent q, so q''' = 0 and the forcing that makes u* solve the
// equation exactly has closed form.
struct Manufactured {
  double eps = 0.05;
  double omega = 0.0;

  static cplx q(double x) { return iu * (x - x * x / 20.0) - (x / 1.3) * (x / 1.3); }
  static cplx qp(double x) { return iu * (1.0 - x / 10.0) - 2.0 * x / (1.3 * 1.3); }
  static cplx qpp() { return -iu / 10.0 - 2.0 / (1.3 * 1.3); }

  cplx value(double x, double y) const {
    return eps * std::exp(q(x)) * std::exp(iu * omega * y);
  }
  cplx forcing(double x, double y) const {
    const cplx w = value(x, y);
    const cplx a = qp(x), b = qpp();
    return (iu * omega + 0.5 * (3.0 * a * b + a * a * a)) * w -
           1.5 * iu * (b + 2.0 * a * a) * w * w - 1.5 * a * w * w * w;
  }
  csto::Profile initial(double x_end, int n) const {
    return csto::sample_profile(csto::ProfileTag::x, x_end, n,
                                [&](double x) { return value(x, 0.0); });
  }
};

csto::FieldGrid run_manufactured(const Manufactured& m, double hx, double hy, double L,
                                 bool store_all = false) {
  csto::EvolveOptions opt;
  opt.hx = hx;
  opt.hy = hy;
  opt.X_max = 6.0;
  const long steps = std::lround(L / hy);
  opt.store_stride_y = store_all ? 1 : static_cast<int>(steps);
  opt.forcing = [m](double x, double y) { return m.forcing(x, y); };
  const int n = static_cast<int>(std::lround(6.0 / hx)) + 1;
  return csto::evolve(m.initial(6.0, n), L, opt);
}

double final_row_error(const csto::FieldGrid& f, const Manufactured& m) {
  double err = 0.0;
  for (int i = 0; i < f.nx; ++i)
    err = std::max(err, std::abs(f.at(i, f.ny - 1) - m.value(i * f.hx, f.y_max())));
  return err;
}

double l2_norm_row(const csto::FieldGrid& f, int j) {
  double s = 0.0;
  for (int i = 0; i < f.nx; ++i) s += std::norm(f.at(i, j));
  return std::sqrt(s * f.hx);
}

}  // namespace

TEST_SUITE("pde_oracle") {

TEST_CASE("zero data evolves to the zero field with zero traces") {
  csto::Profile u0;
  u0.tag = csto::ProfileTag::x;
  u0.h = 0.05;
  u0.samples.assign(121, cplx{0.0});
  csto::EvolveOptions opt;
  opt.X_max = 6.0;
  opt.hy = 1e-4;
  const auto field = csto::evolve(u0, 1e-3, opt);
  CHECK(field.nx == 121);
  CHECK(field.ny == 11);
  double mx = 0.0;
  for (const auto& v : field.u) mx = std::max(mx, std::abs(v));
  CHECK(mx == 0.0);

  const auto tr = csto::extract_traces(field);
  for (const auto* p : {&tr.u0, &tr.g0, &tr.g1, &tr.g2, &tr.h_L}) {
    double t = 0.0;
    for (const auto& v : p->samples) t = std::max(t, std::abs(v));
    CHECK(t == 0.0);
  }
}

TEST_CASE("stationary manufactured solution is tracked to high accuracy") {
  Manufactured m;  // omega = 0: the exact solution does not move
  const auto field = run_manufactured(m, 0.05, 1e-4, 0.01, true);
  CHECK(field.ny == 101);
  // wall nodes sit inside the reduced-order closure layer; the interior is
  // two orders cleaner
  CHECK(final_row_error(field, m) < 2e-4);
  double interior = 0.0;
  for (int i = 0; i < field.nx; ++i)
    if (i * field.hx >= 1.0)
      interior = std::max(interior,
                          std::abs(field.at(i, field.ny - 1) - m.value(i * field.hx, 0.01)));
  CHECK(interior < 1e-7);

  // Relative L2 drift over the run; the exact modulus is y-independent, so
  // this isolates the numerical error.
  const double n0 = l2_norm_row(field, 0);
  const double nL = l2_norm_row(field, field.ny - 1);
  CHECK(std::abs(nL - n0) / n0 < 1e-3);
}

TEST_CASE("y-refinement shows second-order steps") {
  Manufactured m;
  m.omega = 3.0;  // rotating target so y errors are visible
  const double L = 4e-3;
  const auto fa = run_manufactured(m, 0.1, 4e-5, L);
  const auto fb = run_manufactured(m, 0.1, 2e-5, L);
  const auto fc = run_manufactured(m, 0.1, 1e-5, L);
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < fa.nx; ++i) {
    d1 = std::max(d1, std::abs(fa.at(i, 1) - fb.at(i, 1)));
    d2 = std::max(d2, std::abs(fb.at(i, 1) - fc.at(i, 1)));
  }
  // successive differences of a second-order scheme shrink by 4 per halving
  CHECK(d1 / d2 > 3.0);
  CHECK(d1 / d2 < 5.2);
}

TEST_CASE("x-refinement shows fourth-order stencils away from the wall") {
  Manufactured m;
  m.omega = 3.0;
  const double L = 1e-3, hy = 2e-5;
  const auto fa = run_manufactured(m, 0.05, hy, L);
  const auto fb = run_manufactured(m, 0.025, hy, L);
  const auto fc = run_manufactured(m, 0.0125, hy, L);
  // The free one-sided closure of the third-derivative operator carries a
  // reduced-order error layer at x = 0; the interior is clean fourth order.
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < fa.nx; ++i) {
    const double x = i * fa.hx;
    if (x < 1.0 || x > 4.5) continue;
    d1 = std::max(d1, std::abs(fa.at(i, 1) - fb.at(2 * i, 1)));
    d2 = std::max(d2, std::abs(fb.at(2 * i, 1) - fc.at(4 * i, 1)));
  }
  CHECK(d1 / d2 > 10.0);
  CHECK(d1 / d2 < 24.0);

  // The wall value itself still converges under refinement.
  const double e1 = std::abs(fa.at(0, 1) - m.value(0.0, L));
  const double e2 = std::abs(fb.at(0, 1) - m.value(0.0, L));
  CHECK(e2 < 0.6 * e1);
}

TEST_CASE("trace extraction matches the exact boundary jets") {
  Manufactured m;
  m.omega = 3.0;
  const auto field = run_manufactured(m, 0.05, 1e-4, 2e-3, true);
  const auto tr = csto::extract_traces(field);
  CHECK(tr.u0.samples.size() == static_cast<size_t>(field.nx));
  CHECK(tr.g0.samples.size() == static_cast<size_t>(field.ny));
  CHECK(tr.h_L.h == field.hx);

  // corner samples are shared, not re-derived
  CHECK(tr.g0.samples[0] == tr.u0.samples[0]);
  for (int i = 0; i < field.nx; ++i) {
    CHECK(tr.u0.samples[i] == field.at(i, 0));
    CHECK(tr.h_L.samples[i] == field.at(i, field.ny - 1));
  }

  const cplx u00 = m.value(0.0, 0.0);
  const cplx g1_exact = Manufactured::qp(0.0) * u00;
  const cplx g2_exact =
      (Manufactured::qpp() + Manufactured::qp(0.0) * Manufactured::qp(0.0)) * u00;
  CHECK(std::abs(tr.g0.samples[0] - u00) < 1e-12);
  CHECK(std::abs(tr.g1.samples[0] - g1_exact) < 1e-5);
  CHECK(std::abs(tr.g2.samples[0] - g2_exact) < 1e-3);

  const int jl = field.ny - 1;
  const cplx rot = std::exp(iu * m.omega * field.y_max());
  CHECK(std::abs(tr.g0.samples[jl] - u00 * rot) < 1e-5);
  CHECK(std::abs(tr.g1.samples[jl] - g1_exact * rot) < 1e-4);
}

TEST_CASE("trace extraction refuses a grid too narrow for its stencils") {
  csto::FieldGrid f;
  f.hx = 0.1;
  f.hy = 0.1;
  f.nx = 5;
  f.ny = 2;
  f.u.assign(10, cplx{0.0});
  f.scheme = "handmade";
  CHECK_THROWS_WITH_AS(csto::extract_traces(f),
                       doctest::Contains("at least 6 x-samples"), csto::input_error);
}

TEST_CASE("field invariants hold on evolver output") {
  // A free (unforced) run: residuals of the compatibility system on the
  // computed field measure pure discretization error.
  Manufactured m;
  csto::EvolveOptions opt;
  opt.hx = 0.05;
  opt.hy = 1e-4;
  opt.X_max = 6.0;
  const auto field = csto::evolve(m.initial(6.0, 121), 2e-3, opt);
  CHECK(csto::zero_curvature_residual(field) < 5e-3);
  CHECK(csto::conservation_residual(field) < 5e-3);
}

TEST_CASE("unstable step size is detected with a concrete suggestion") {
  const auto u0 = csto::sample_profile(csto::ProfileTag::x, 8.0, 81, [](double x) {
    return 0.4 * std::exp(-(x - 2.0) * (x - 2.0) / 0.25);
  });
  csto::EvolveOptions opt;
  opt.hx = 0.1;
  opt.hy = 0.5;
  opt.X_max = 8.0;
  try {
    csto::evolve(u0, 5.0, opt);
    FAIL("expected a stability failure");
  } catch (const csto::numerical_error& e) {
    CHECK(mentions(e, "unstable"));
    CHECK(mentions(e, "retry with h_y <="));
  }
}

TEST_CASE("amplitude envelope of the scheme is enforced") {
  const auto u0 = csto::sample_profile(csto::ProfileTag::x, 8.0, 161, [](double x) {
    return 0.6 * std::exp(-(x - 2.0) * (x - 2.0) / 0.25);
  });
  CHECK_THROWS_WITH_AS(csto::evolve(u0, 0.01, {}), doctest::Contains("envelope"),
                       csto::input_error);
}

TEST_CASE("corner compatibility residuals") {
  Manufactured m;  // homogeneous run: traces of an honest solution are compatible
  csto::EvolveOptions opt;
  opt.hx = 0.05;
  opt.hy = 2e-5;
  opt.X_max = 6.0;
  const auto field = csto::evolve(m.initial(6.0, 121), 1e-3, opt);
  auto tr = csto::extract_traces(field);

  const auto rep = csto::compatibility_check(tr.u0, tr.g0, tr.g1, tr.g2);
  CHECK(rep.corner_value == 0.0);
  CHECK(rep.corner_slope < 1e-5);
  CHECK(rep.corner_curvature < 1e-3);
  CHECK(rep.corner_evolution < 1e-3);

  SUBCASE("a shifted g0 shows up in the first residual only") {
    for (auto& v : tr.g0.samples) v += 0.1;
    const auto shifted = csto::compatibility_check(tr.u0, tr.g0, tr.g1, tr.g2);
    CHECK(shifted.corner_value == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(shifted.corner_slope == rep.corner_slope);
    CHECK(shifted.corner_evolution == doctest::Approx(rep.corner_evolution).epsilon(1e-9));
  }

  SUBCASE("zero data is perfectly compatible") {
    csto::Profile zx, zy;
    zx.tag = csto::ProfileTag::x;
    zx.h = 0.1;
    zx.samples.assign(9, cplx{0.0});
    zy.tag = csto::ProfileTag::y;
    zy.h = 0.01;
    zy.samples.assign(6, cplx{0.0});
    const auto z = csto::compatibility_check(zx, zy, zy, zy);
    CHECK(z.corner_value == 0.0);
    CHECK(z.corner_slope == 0.0);
    CHECK(z.corner_curvature == 0.0);
    CHECK(z.corner_evolution == 0.0);
  }
}

}  // TEST_SUITE
