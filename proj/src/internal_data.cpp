#include "qscope/internal_data.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qscope/field_io.hpp"
#include "qscope/rng.hpp"

namespace qscope {

std::string to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::none:
      return "none";
    case NoiseModel::deterministic:
      return "deterministic";
    case NoiseModel::random:
      return "random";
  }
  return "unknown";
}

std::optional<NoiseModel> parse_noise_model(const std::string& s) {
  if (s == "none") return NoiseModel::none;
  if (s == "deterministic") return NoiseModel::deterministic;
  if (s == "random") return NoiseModel::random;
  return std::nullopt;
}

InternalData synthesize(const ScalarField& q, const ScalarField& u) {
  require_same_grid(q.grid(), u.grid(), "synthesize");
  InternalData d{ScalarField(q.grid()), ScalarField(q.grid()), {}};
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] < 0.0) {
      std::ostringstream msg;
      msg << "synthesize: negative q = " << q[k] << " at node " << k;
      throw std::invalid_argument(msg.str());
    }
    d.I[k] = q[k] * u[k] * u[k];
    d.J[k] = std::sqrt(q[k]) * std::abs(u[k]);
  }
  return d;
}

ScalarField noise_profile(const Grid& grid, NoiseModel model, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  ScalarField rho(grid);
  switch (model) {
    case NoiseModel::none:
      return rho;
    case NoiseModel::deterministic:
      rho = ScalarField::sample(grid, [](double x, double y) { return std::sin(3 * pi * x) * std::sin(3 * pi * y); });
      break;
    case NoiseModel::random: {
      SplitMix64 rng(seed);
      double a[4][4];
      for (auto& row : a)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
      rho = ScalarField::sample(grid, [&](double x, double y) {
        double s = 0.0;
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) s += a[m][n] * std::sin((m + 1) * pi * x) * std::sin((n + 1) * pi * y);
        return s;
      });
      break;
    }
  }
  const double nrm = h1_norm(rho);
  if (!(nrm > 0.0)) throw std::runtime_error("noise_profile: degenerate profile");
  return (1.0 / nrm) * rho;
}

InternalData add_noise(const InternalData& d, NoiseModel model, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("add_noise: eps must be finite and >= 0");
  if (model == NoiseModel::none && eps > 0.0) throw std::invalid_argument("add_noise: model 'none' with eps > 0");
  InternalData out = d;
  out.noise = {model, eps, seed};
  if (eps == 0.0) return out;
  const ScalarField rho = noise_profile(d.J.grid(), model, seed);
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double jt = std::max(d.J[k] + eps * rho[k], 0.0);
    out.J[k] = jt;
    out.I[k] = jt * jt;
  }
  return out;
}

double data_diff_h1(const InternalData& a, const InternalData& b) { return h1_norm(a.J - b.J); }

void save_data(const std::filesystem::path& dir, const std::string& stem, const InternalData& d) {
  write_field(dir / (stem + "_I.txt"), d.I);
  write_field(dir / (stem + "_J.txt"), d.J);
  std::ofstream meta(dir / (stem + "_meta.txt"));
  if (!meta) throw std::runtime_error("cannot write metadata for " + stem);
  meta << std::setprecision(17) << to_string(d.noise.model) << ' ' << d.noise.eps << ' ' << d.noise.seed << '\n';
}

InternalData load_data(const std::filesystem::path& dir, const std::string& stem) {
  InternalData d{read_field(dir / (stem + "_I.txt")), read_field(dir / (stem + "_J.txt")), {}};
  require_same_grid(d.I.grid(), d.J.grid(), "load_data");
  std::ifstream meta(dir / (stem + "_meta.txt"));
  std::string model;
  if (!(meta >> model >> d.noise.eps >> d.noise.seed)) throw std::runtime_error("malformed metadata for " + stem);
  const auto m = parse_noise_model(model);
  if (!m) throw std::runtime_error("unknown noise model '" + model + "'");
  d.noise.model = *m;
  return d;
}

}  // namespace qscope
