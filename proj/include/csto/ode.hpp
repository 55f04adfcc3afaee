#pragma once

#include <array>
#include <cmath>
#include <string>

#include "csto/types.hpp"

namespace csto {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double initial_step = 0.0;  // 0: pick from the span
  long max_steps = 2000000;
  std::string context;  // appended to failure messages (e.g. "|lambda| = 3.2")
};

// Dormand-Prince 5(4) adaptive integrator for a fixed-size complex system.
// Integrates y' = f(t, y) from t0 to t1 (either direction) in place.
template <int N, class F>
void integrate_ode(F&& f, double t0, double t1, std::array<cplx, N>& y,
                   const OdeOptions& opt = {}) {
  using State = std::array<cplx, N>;
  if (t0 == t1) return;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double h = (opt.initial_step > 0 ? opt.initial_step : span / 100.0) * dir;
  double t = t0;

  auto rhs = [&f](double tt, const State& yy, State& out) { f(tt, yy, out); };

  State k1, k2, k3, k4, k5, k6, k7, ytmp, y5, y4;
  rhs(t, y, k1);
  bool have_k1 = true;

  for (long step = 0; step < opt.max_steps; ++step) {
    if (std::abs(t - t1) < 1e-15 * span || t == t1) return;
    if ((t + h - t1) * dir > 0) h = t1 - t;
    if (std::abs(h) < 1e-14 * span)
      throw numerical_error("adaptive integrator step size collapsed" +
                            (opt.context.empty() ? "" : " at " + opt.context));
    if (!have_k1) rhs(t, y, k1);

    for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h * (0.2 * k1[i]);
    rhs(t + 0.2 * h, ytmp, k2);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i]);
    rhs(t + 0.3 * h, ytmp, k3);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i] + 32.0 / 9.0 * k3[i]);
    rhs(t + 0.8 * h, ytmp, k4);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i] +
                            64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i]);
    rhs(t + 8.0 / 9.0 * h, ytmp, k5);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i] +
                            46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i] -
                            5103.0 / 18656.0 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (int i = 0; i < N; ++i)
      y5[i] = y[i] + h * (35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i] +
                          125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i] +
                          11.0 / 84.0 * k6[i]);
    rhs(t + h, y5, k7);
    for (int i = 0; i < N; ++i)
      y4[i] = y[i] + h * (5179.0 / 57600.0 * k1[i] + 7571.0 / 16695.0 * k3[i] +
                          393.0 / 640.0 * k4[i] - 92097.0 / 339200.0 * k5[i] +
                          187.0 / 2100.0 * k6[i] + 1.0 / 40.0 * k7[i]);

    double err2 = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc =
          opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = std::abs(y5[i] - y4[i]) / sc;
      err2 += e * e;
    }
    const double err = std::sqrt(err2 / N);

    if (err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // first-same-as-last
      have_k1 = true;
    } else {
      have_k1 = false;
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h *= fac;
  }
  throw numerical_error("adaptive integrator exceeded the step budget" +
                        (opt.context.empty() ? "" : " at " + opt.context));
}

}  // namespace csto
