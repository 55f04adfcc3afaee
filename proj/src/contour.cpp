#include "csto/contour.hpp"

#include <cmath>
#include <sstream>

#include "csto/io.hpp"
#include "csto/quad.hpp"

namespace csto {

namespace {
constexpr double kRayAngleTol = 1e-10;
constexpr double kRMin = 1e-3;
}  // namespace

Sector sector_info(int index) {
  if (index < 1 || index > 6) throw input_error("sector index must lie in 1..6");
  return {index, (index - 1) * pi / 6.0, index * pi / 6.0};
}

cplx ray_direction(int k) {
  k = ((k % 12) + 12) % 12;
  switch (k) {
    case 0: return {1.0, 0.0};
    case 3: return {0.0, 1.0};
    case 6: return {-1.0, 0.0};
    case 9: return {0.0, -1.0};
    default: return {std::cos(k * pi / 6.0), std::sin(k * pi / 6.0)};
  }
}

Classification classify(cplx lambda) {
  if (lambda == cplx{0.0, 0.0}) throw input_error("origin is unclassifiable");
  const double phi = std::arg(lambda);  // (-π, π]
  const double step = pi / 6.0;
  const long k = std::lround(phi / step);
  if (std::abs(phi - k * step) < kRayAngleTol) {
    return {true, static_cast<int>(((k % 12) + 12) % 12), -1};
  }
  // Sector index repeats with period π in the argument.
  double m = std::fmod(phi, pi);
  if (m < 0) m += pi;
  int sec = static_cast<int>(m / step) + 1;
  if (sec > 6) sec = 6;
  return {false, -1, sec};
}

cplx theta(cplx lambda, double x, double y) {
  const cplx l2 = lambda * lambda;
  const cplx l6 = l2 * l2 * l2;
  return l2 * x + 2.0 * l6 * y;
}

int Contour::total_nodes() const {
  int n = 0;
  for (const auto& ray : rays)
    for (const auto& p : ray.panels) n += static_cast<int>(p.radii.size());
  return n;
}

std::vector<Contour::Node> Contour::ray_nodes(int k) const {
  std::vector<Node> out;
  const Ray& ray = rays.at(k);
  for (const auto& p : ray.panels)
    for (size_t j = 0; j < p.radii.size(); ++j) {
      const cplx lam = p.stored_lambda.empty() ? p.radii[j] * ray.direction
                                               : p.stored_lambda[j];
      out.push_back({k, p.radii[j], p.weights[j], lam});
    }
  return out;
}

std::vector<Contour::Node> Contour::nodes() const {
  std::vector<Node> out;
  for (int k = 0; k < 12; ++k) {
    auto rn = ray_nodes(k);
    out.insert(out.end(), rn.begin(), rn.end());
  }
  return out;
}

namespace {

Panel make_panel(double r_lo, double r_hi, int n) {
  Panel p;
  p.r_lo = r_lo;
  p.r_hi = r_hi;
  const auto& rule = gauss_legendre(n);
  const double mid = (r_hi + r_lo) / 2.0, half = (r_hi - r_lo) / 2.0;
  p.radii.resize(n);
  p.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    p.radii[j] = mid + half * rule.nodes[j];
    p.weights[j] = half * rule.weights[j];
  }
  return p;
}

}  // namespace

Contour build_contour(double truncation_radius, int nodes_per_ray) {
  if (!(truncation_radius > 0)) throw input_error("truncation radius must be positive");
  if (nodes_per_ray < 4) throw input_error("nodes_per_ray must be at least 4");

  // Panels hold at most 10 nodes; spread the requested count as evenly as possible.
  const int n_panels = (nodes_per_ray + 9) / 10;
  std::vector<int> sizes(n_panels, nodes_per_ray / n_panels);
  for (int i = 0; i < nodes_per_ray % n_panels; ++i) ++sizes[i];

  std::vector<double> bounds(n_panels + 1);
  for (int i = 0; i <= n_panels; ++i)
    bounds[i] = kRMin * std::pow(truncation_radius / kRMin,
                                 static_cast<double>(i) / n_panels);
  bounds.back() = truncation_radius;

  Contour c;
  c.truncation_radius = truncation_radius;
  c.nodes_per_ray = nodes_per_ray;
  for (int k = 0; k < 12; ++k) {
    c.rays[k].index = k;
    c.rays[k].direction = ray_direction(k);
    for (int i = 0; i < n_panels; ++i)
      c.rays[k].panels.push_back(make_panel(bounds[i], bounds[i + 1], sizes[i]));
  }
  return c;
}

Contour build_contour_with_boundaries(const std::array<std::vector<double>, 12>& bounds,
                                      int nodes_per_panel) {
  if (nodes_per_panel < 2) throw input_error("nodes_per_panel must be at least 2");
  Contour c;
  c.truncation_radius = 0.0;
  int max_nodes = 0;
  for (int k = 0; k < 12; ++k) {
    c.rays[k].index = k;
    c.rays[k].direction = ray_direction(k);
    const auto& b = bounds[k];
    if (b.size() < 2) continue;
    for (size_t i = 0; i + 1 < b.size(); ++i) {
      if (!(b[i] > 0) || !(b[i + 1] > b[i]))
        throw input_error("panel boundaries must be positive and increasing");
      c.rays[k].panels.push_back(make_panel(b[i], b[i + 1], nodes_per_panel));
    }
    c.truncation_radius = std::max(c.truncation_radius, b.back());
    max_nodes = std::max(max_nodes, static_cast<int>((b.size() - 1) * nodes_per_panel));
  }
  c.nodes_per_ray = max_nodes;
  return c;
}

void write_contour(const Contour& c, const std::string& path) {
  std::ostringstream ss;
  ss << "# contour radius=" << fmt17(c.truncation_radius)
     << " nodes_per_ray=" << c.nodes_per_ray << "\n";
  for (const auto& node : c.nodes())
    ss << node.ray << ' ' << fmt17(node.lambda.real()) << ' ' << fmt17(node.lambda.imag())
       << ' ' << fmt17(node.w) << "\n";
  atomic_write(path, ss.str());
}

Contour read_contour(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string header;
  std::getline(in, header);
  double radius = 0.0;
  int npr = 0;
  if (std::sscanf(header.c_str(), "# contour radius=%lf nodes_per_ray=%d", &radius, &npr) != 2)
    throw input_error("malformed contour header in " + path);

  Contour c;
  c.truncation_radius = radius;
  c.nodes_per_ray = npr;
  for (int k = 0; k < 12; ++k) {
    c.rays[k].index = k;
    c.rays[k].direction = ray_direction(k);
  }
  // Rebuild one panel per ray holding the stored nodes verbatim.
  std::array<Panel, 12> panels;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    int ray;
    double re, im, w;
    if (std::sscanf(line.c_str(), "%d %lf %lf %lf", &ray, &re, &im, &w) != 4)
      throw input_error("parse error in " + path + " at line " + std::to_string(lineno));
    if (ray < 0 || ray > 11)
      throw input_error("ray index out of range in " + path + " at line " + std::to_string(lineno));
    panels[ray].radii.push_back(std::hypot(re, im));
    panels[ray].weights.push_back(w);
    panels[ray].stored_lambda.emplace_back(re, im);
  }
  for (int k = 0; k < 12; ++k) {
    if (panels[k].radii.empty()) continue;
    panels[k].r_lo = panels[k].radii.front();
    panels[k].r_hi = panels[k].radii.back();
    c.rays[k].panels.push_back(std::move(panels[k]));
  }
  return c;
}

}  // namespace csto
