#pragma once

#include <string>
#include <vector>

#include "csto/types.hpp"

namespace csto {

enum class ProfileTag { x, y };

// Uniformly sampled data line: initial data u0(x) (tag x) or a boundary trace
// on [0, L] (tag y).  Samples start at 0 with step h.
struct Profile {
  ProfileTag tag = ProfileTag::x;
  double start = 0.0;
  double h = 0.0;
  std::vector<cplx> samples;

  double end() const { return start + h * (samples.empty() ? 0 : samples.size() - 1); }
  // count >= 4 and positive step; x-profiles additionally must decay
  // (|last| < 1e-8 * max|samples|) because integrations truncate there, while
  // y-traces live on a finite interval and may end at any value.
  void validate() const;
};

void write_profile(const Profile& p, const std::string& path);
Profile read_profile(const std::string& path);

// How sampled data is read between samples: smooth fields use a 4-point cubic;
// nearest reproduces piecewise-constant data on cells [x_k - h/2, x_k + h/2).
enum class InterpMode { smooth4, nearest };

// Evaluator bundling the field value and its accumulated half-integral
// I(x) = ∫₀ˣ u/2 (the x-leg of the gauge phase).  Evaluations beyond the last
// sample return 0 resp. the constant terminal integral.
class ProfileInterp {
 public:
  ProfileInterp(const Profile& p, InterpMode mode);

  cplx value(double x) const;
  cplx gauge(double x) const;  // ∫₀ˣ u(ξ)/2 dξ
  double end() const { return end_; }
  double max_abs() const { return max_abs_; }

 private:
  InterpMode mode_;
  double h_;
  double end_;
  double max_abs_;
  std::vector<cplx> samples_;
  std::vector<cplx> cum_;  // smooth4: ∫ u/2 at sample points; nearest: at cell edges
};

// Helper for tests and the CLI: sample an analytic function on [0, x_end].
template <class F>
Profile sample_profile(ProfileTag tag, double x_end, int n, F&& f) {
  Profile p;
  p.tag = tag;
  p.h = x_end / (n - 1);
  p.samples.resize(n);
  for (int k = 0; k < n; ++k) p.samples[k] = f(p.h * k);
  return p;
}

}  // namespace csto
