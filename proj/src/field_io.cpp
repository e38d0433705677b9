#include "qscope/field_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qscope {

void write_field(std::ostream& out, const ScalarField& f) {
  const Grid& g = f.grid();
  out << std::setprecision(17);
  out << g.nx << ' ' << g.ny << ' ' << g.hx << ' ' << g.hy << '\n';
  for (double v : f.values()) out << v << '\n';
}

void write_field(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field(out, f);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ScalarField read_field(std::istream& in) {
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  if (!(in >> nx >> ny >> hx >> hy)) throw std::runtime_error("field dump: malformed header");
  const Grid g = make_grid(nx, ny);
  if (std::abs(hx - g.hx) > 1e-12 || std::abs(hy - g.hy) > 1e-12)
    throw std::runtime_error("field dump: spacing does not match node count");
  std::vector<double> values(g.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::string token;
    if (!(in >> token))
      throw std::runtime_error("field dump: expected " + std::to_string(values.size()) +
                               " values, got " + std::to_string(k));
    std::size_t used = 0;
    values[k] = std::stod(token, &used);
    if (used != token.size() || !std::isfinite(values[k]))
      throw std::runtime_error("field dump: bad value '" + token + "' at entry " + std::to_string(k));
  }
  return ScalarField(g, std::move(values));
}

ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_field(in);
}

void write_mask(const std::filesystem::path& path, const RegionMask& mask) {
  ScalarField f(mask.grid());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = mask.contains(k) ? 1.0 : 0.0;
  write_field(path, f);
}

}  // namespace qscope
