#include "csto/field_grid.hpp"

#include <cstdio>
#include <sstream>

#include "csto/io.hpp"

namespace csto {

void FieldGrid::validate() const {
  if (nx < 2 || ny < 2) throw input_error("field grid needs at least 2 samples per direction");
  if (!(hx > 0) || !(hy > 0)) throw input_error("field grid steps must be positive");
  if (u.size() != static_cast<size_t>(nx) * ny)
    throw input_error("field grid sample count does not match nx*ny");
}

void write_field(const FieldGrid& f, const std::string& path) {
  f.validate();
  std::ostringstream ss;
  ss << "# field hx=" << fmt17(f.hx) << " hy=" << fmt17(f.hy) << " nx=" << f.nx
     << " ny=" << f.ny << "\n";
  if (!f.scheme.empty()) ss << "# scheme " << f.scheme << "\n";
  for (const auto& v : f.u) ss << fmt17(v.real()) << ' ' << fmt17(v.imag()) << "\n";
  atomic_write(path, ss.str());
}

FieldGrid read_field(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty field file: " + path);
  FieldGrid f;
  if (std::sscanf(line.c_str(), "# field hx=%lf hy=%lf nx=%d ny=%d", &f.hx, &f.hy, &f.nx,
                  &f.ny) != 4)
    throw input_error("malformed field header in " + path);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# scheme ", 0) == 0) {
      f.scheme = line.substr(9);
      continue;
    }
    if (line[0] == '#') continue;
    double re, im;
    if (std::sscanf(line.c_str(), "%lf %lf", &re, &im) != 2)
      throw input_error("parse error in " + path + " at line " + std::to_string(lineno));
    f.u.emplace_back(re, im);
  }
  f.validate();
  return f;
}

}  // namespace csto
