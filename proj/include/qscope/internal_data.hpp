#pragma once

// Internal data I = q u^2 and J = sqrt(I), noise injection on J, persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "qscope/grid.hpp"

namespace qscope {

enum class NoiseModel { none, deterministic, random };

std::string to_string(NoiseModel m);
std::optional<NoiseModel> parse_noise_model(const std::string& s);

struct NoiseInfo {
  NoiseModel model = NoiseModel::none;
  double eps = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const NoiseInfo&) const = default;
};

struct InternalData {
  ScalarField I;
  ScalarField J;
  NoiseInfo noise;
};

// I = q u^2, J = sqrt(q) |u|. Throws std::invalid_argument for negative q.
InternalData synthesize(const ScalarField& q, const ScalarField& u);

// Unit-H1 perturbation profile. deterministic: sin(3 pi x) sin(3 pi y);
// random: sum_{m,n=1..4} a_mn sin(m pi x) sin(n pi y), a_mn ~ U[-1,1) drawn
// in (m, n) row order from SplitMix64(seed).
ScalarField noise_profile(const Grid& grid, NoiseModel model, std::uint64_t seed);

// J~ = max(J + eps rho, 0), I~ = J~^2. eps = 0 returns the input unchanged.
// Throws for eps < 0 or model none with eps > 0.
InternalData add_noise(const InternalData& d, NoiseModel model, double eps, std::uint64_t seed);

// ||J1 - J2||_{H1}.
double data_diff_h1(const InternalData& a, const InternalData& b);

// Writes <stem>_I.txt, <stem>_J.txt and <stem>_meta.txt (`model eps seed`).
void save_data(const std::filesystem::path& dir, const std::string& stem, const InternalData& d);
InternalData load_data(const std::filesystem::path& dir, const std::string& stem);

}  // namespace qscope
