#pragma once

// Both sides of the weighted-Lipschitz estimate, the logarithmic modulus
// phi(s) = C0 [ |ln(C1 |ln s|)|^-1 + s ], and noise / bump sweeps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qscope/forward.hpp"
#include "qscope/internal_data.hpp"
#include "qscope/reconstruction.hpp"

namespace qscope {

struct WeightedSides {
  double lhs = 0.0;  // ||J (q - q~)||_{H1}
  double rhs = 0.0;  // ||J - J~||_{H1}^{1/2}
};

WeightedSides weighted_sides(const ScalarField& q, const ScalarField& q_t, const InternalData& d,
                             const InternalData& d_t);

struct InterpCheck {
  double sup_U_diff = 0.0;      // ||u^2 - u~^2||_inf
  double data_err_theta = 0.0;  // ||J - J~||_{H1}^theta
  double ratio = 0.0;           // 0 when data_err_theta = 0
};

InterpCheck interp_check(const InternalData& d, const InternalData& d_t, const ScalarField& u,
                         const ScalarField& u_t, double theta);

// Throws std::domain_error for s <= 0, s = 1 or C1 |ln s| = 1.
double phi_eval(double s, double c0, double c1);

struct PhiFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double residual = 0.0;  // RMS of (phi(s_i) - e_i) / e_i
};

// Fits e_i ~ phi(s_i) with s_i = data_i^theta. Pairs are (data_err, error).
// Needs at least 4 pairs with positive error and admissible s_i.
PhiFit phi_fit(const std::vector<std::pair<double, double>>& pairs, double theta);

// Least-squares slope of ln y against ln x over pairs with x, y > 0.
double power_law_exponent(const std::vector<std::pair<double, double>>& pairs);

enum class SweepFamily { noise, bump };
std::string to_string(SweepFamily f);
std::optional<SweepFamily> parse_family(const std::string& s);

struct SweepOptions {
  SweepFamily family = SweepFamily::noise;
  double theta = 0.2;
  NoiseModel noise_model = NoiseModel::deterministic;
  std::uint64_t seed = 0;
  ReconOptions recon{};
  // Admissible box [q* - radius, q* + radius] around the reference level.
  double q_star = 2.0;
  double q0 = 1.0;
  double k = 0.5;
  // Project reconstructed q onto the admissible box (noise family).
  bool project = true;
  double forward_tol = 1e-11;
  unsigned threads = 1;
};

struct StabilityRecord {
  double eps = 0.0;
  double data_err = 0.0;
  double weighted_lhs = 0.0;
  double weighted_rhs = 0.0;
  double weighted_ratio = 0.0;  // 0 when weighted_rhs = 0
  double sup_err_all = 0.0;
  std::array<double, 4> sup_err_band{};
  double theta = 0.0;
  double phi_c0 = 0.0;
  double phi_c1 = 0.0;
  double phi_residual = 0.0;
  InterpCheck interp{};
  int picard_iterations = 0;
  bool converged = true;
};

struct SweepResult {
  std::vector<StabilityRecord> records;
  double box_lo = 0.0;
  double box_hi = 0.0;
  bool phi_fitted = false;
  PhiFit phi{};
};

// One record per eps, in input order. The phi fit uses the innermost-band
// error of the records with eps > 0 and is copied into every record.
SweepResult stability_sweep(const Problem& p, const std::vector<double>& eps_list, const SweepOptions& opts);

inline constexpr const char* kStabilityHeader =
    "eps,data_err,weighted_lhs,weighted_rhs,weighted_ratio,sup_err_all,sup_err_b0,sup_err_b1,sup_err_b2,"
    "sup_err_b3,theta,phi_C0,phi_C1,phi_residual";

void write_stability_csv(const std::filesystem::path& path, const std::vector<StabilityRecord>& records);

}  // namespace qscope
