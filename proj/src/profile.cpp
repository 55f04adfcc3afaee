#include "csto/profile.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "csto/io.hpp"
#include "csto/quad.hpp"

namespace csto {

void Profile::validate() const {
  if (samples.size() < 4) throw input_error("profile needs at least 4 samples");
  if (!(h > 0)) throw input_error("profile step must be positive");
  if (start != 0.0) throw input_error("profile must start at 0");
  if (tag == ProfileTag::x) {
    double mx = 0.0;
    for (const auto& v : samples) mx = std::max(mx, std::abs(v));
    if (mx > 0 && std::abs(samples.back()) >= 1e-8 * mx)
      throw input_error("profile does not decay: |last sample| >= 1e-8 * max");
  }
}

void write_profile(const Profile& p, const std::string& path) {
  std::ostringstream ss;
  ss << "# profile " << (p.tag == ProfileTag::x ? 'x' : 'y') << " h=" << fmt17(p.h)
     << " n=" << p.samples.size() << "\n";
  for (const auto& v : p.samples) ss << fmt17(v.real()) << ' ' << fmt17(v.imag()) << "\n";
  atomic_write(path, ss.str());
}

Profile read_profile(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty profile file: " + path);
  char tag = 0;
  double h = 0.0;
  long n = 0;
  if (std::sscanf(line.c_str(), "# profile %c h=%lf n=%ld", &tag, &h, &n) != 3 ||
      (tag != 'x' && tag != 'y'))
    throw input_error("malformed profile header in " + path + " at line 1");
  Profile p;
  p.tag = (tag == 'x') ? ProfileTag::x : ProfileTag::y;
  p.h = h;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    double re, im;
    if (std::sscanf(line.c_str(), "%lf %lf", &re, &im) != 2)
      throw input_error("parse error in " + path + " at line " + std::to_string(lineno));
    p.samples.emplace_back(re, im);
  }
  if (static_cast<long>(p.samples.size()) != n)
    throw input_error("profile sample count mismatch in " + path + ": header says " +
                      std::to_string(n) + ", found " + std::to_string(p.samples.size()));
  p.validate();
  return p;
}

ProfileInterp::ProfileInterp(const Profile& p, InterpMode mode)
    : mode_(mode), h_(p.h), end_(p.end()) {
  p.validate();
  samples_ = p.samples;
  max_abs_ = 0.0;
  for (const auto& v : samples_) max_abs_ = std::max(max_abs_, std::abs(v));
  const size_t n = samples_.size();
  if (mode_ == InterpMode::smooth4) {
    std::vector<cplx> half(n);
    for (size_t k = 0; k < n; ++k) half[k] = samples_[k] / 2.0;
    cum_ = cumulative_integral(half, h_);
  } else {
    // Cell edges e_k = (k + 1/2) h; cum_[k] = ∫ u/2 up to edge k.
    cum_.resize(n);
    cplx acc = samples_[0] / 2.0 * (h_ / 2.0);
    cum_[0] = acc;
    for (size_t k = 1; k < n; ++k) {
      acc += samples_[k] / 2.0 * h_;
      cum_[k] = acc;
    }
  }
}

cplx ProfileInterp::value(double x) const {
  const int n = static_cast<int>(samples_.size());
  if (x >= end_ || x < 0.0) return 0.0;
  if (mode_ == InterpMode::nearest) {
    int cell = static_cast<int>(std::floor(x / h_ + 0.5));
    if (cell < 0) cell = 0;
    if (cell >= n) return 0.0;
    return samples_[cell];
  }
  // 4-point cubic Lagrange on the uniform grid, clamped at the ends.
  int k = static_cast<int>(std::floor(x / h_));
  int base = std::min(std::max(k - 1, 0), n - 4);
  const double t = x / h_ - base;  // in [0,3]
  const double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
  const double c0 = -t1 * t2 * t3 / 6.0;
  const double c1 = t0 * t2 * t3 / 2.0;
  const double c2 = -t0 * t1 * t3 / 2.0;
  const double c3 = t0 * t1 * t2 / 6.0;
  return c0 * samples_[base] + c1 * samples_[base + 1] + c2 * samples_[base + 2] +
         c3 * samples_[base + 3];
}

cplx ProfileInterp::gauge(double x) const {
  const int n = static_cast<int>(samples_.size());
  if (x <= 0.0) return 0.0;
  if (mode_ == InterpMode::nearest) {
    if (x >= end_ + h_ / 2.0) return cum_.back();
    // locate the cell containing x and integrate linearly within it
    int cell = static_cast<int>(std::floor(x / h_ + 0.5));
    if (cell >= n) return cum_.back();
    const double e_prev = (cell - 0.5) * h_;
    const cplx base = (cell == 0) ? cplx{0.0} : cum_[cell - 1];
    const double from = std::max(e_prev, 0.0);
    return base + samples_[cell] / 2.0 * (x - from);
  }
  if (x >= end_) return cum_.back();
  int k = static_cast<int>(std::floor(x / h_));
  int base = std::min(std::max(k - 1, 0), n - 4);
  const double t = x / h_ - base;
  const double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
  const double c0 = -t1 * t2 * t3 / 6.0;
  const double c1 = t0 * t2 * t3 / 2.0;
  const double c2 = -t0 * t1 * t3 / 2.0;
  const double c3 = t0 * t1 * t2 / 6.0;
  return c0 * cum_[base] + c1 * cum_[base + 1] + c2 * cum_[base + 2] + c3 * cum_[base + 3];
}

}  // namespace csto
