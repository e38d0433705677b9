#pragma once

// Numerical evaluation of the auxiliary inequalities: Caccioppoli, doubling,
// reverse Hoelder / Muckenhoupt, three spheres, the doubly exponential lower
// bound, the Carleman estimate, and the delta* level of the smallness lemma.
// All ball integrals use node-inclusion masks intersected with the square.

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qscope/grid.hpp"

namespace qscope {

struct Sides {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Distance from p to the boundary of the unit square.
double dist_to_boundary(Point p);

// lhs = int_{B_r} |grad u|^2, rhs = r^-2 int_{B_2r} u^2. Requires 0 < 2r < dist(x, boundary).
Sides caccioppoli_ratio(const ScalarField& u, Point x, double r);

// int_{B_2r} u^2 / int_{B_r} u^2; +inf when u vanishes on B_r.
double doubling_ratio(const ScalarField& u, Point x, double r);

struct NegPower {
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t excluded = 0;  // nodes with |u| < 1e-12 ||u||_inf
  double neg_mass = 0.0;     // int over the kept nodes of |u|^(-2/(kappa-1))
};

// lhs = (mean u^{2(1+delta)})^{1/(1+delta)}, rhs = mean u^2 over B_r.
NegPower reverse_holder(const ScalarField& u, Point x, double r, double delta);
// lhs = mean(u^2) (mean |u|^{-2/(kappa-1)})^{kappa-1}, rhs = 1.
NegPower muckenhoupt(const ScalarField& u, Point x, double r, double kappa);

struct ThreeSpheres {
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;  // ||u||_{H1(B_kr)}
  // Exponent with the radius-normalised norm
  //   I~_k^2 = r^-2 int_{B_kr} u^2 + int_{B_kr} |grad u|^2,
  // s = ln(I~3 / I~2) / ln(I~3 / I~1).
  double s = 0.0;
  double s_raw = 0.0;  // ln(I3 / (r I2)) / ln(I3 / I1) with plain norms
};

// Requires 3r < dist(y, boundary).
ThreeSpheres three_spheres_fit(const ScalarField& u, Point y, double r);

struct UcpSample {
  Point x;
  double r = 0.0;
  double norm = 0.0;   // ||u||_{H1(B(x,r) cap Omega)}
  double c_i = 0.0;    // smallest c with exp(-c exp(c/r)) <= norm
  double slack = 0.0;  // ln norm + c exp(c/r) with the fitted c
};

struct UcpFit {
  double c = std::numeric_limits<double>::infinity();
  bool finite = false;
  std::vector<UcpSample> samples;
};

UcpFit ucp_lowerbound_fit(const ScalarField& u, const std::vector<std::pair<Point, double>>& samples);

struct CarlemanSides {
  double lhs = 0.0;
  double rhs = 0.0;
  bool shifted = false;  // weight exp(2 tau (phi - max phi)), max over the integrand support
};

// Throws std::invalid_argument when psi has a critical point on the grid.
CarlemanSides carleman_ratio(const ScalarField& v, const TensorField& a, const ScalarField& psi,
                             double lambda_c, double tau);

std::pair<double, double> alpha_beta(double lambda_c);

// Coefficients of the rescaled operator div(A(c + s (x - c)) grad .) on the
// same grid, bilinearly interpolated from the nodal values. s in (0, 1].
TensorField rescaled_coefficients(const TensorField& a, Point c, double s);

// min over an m x m lattice of centres of max_{B(x, r_star) cap Omega} u^2.
double delta_star_probe(const ScalarField& u, double r_star, int lattice = 11);

// (1 - |x - c|^2 / R^2)^p inside the ball, 0 outside.
ScalarField bump_field(const Grid& grid, Point c, double radius, int power);

enum class PsiKind { linear_x, radial };

// linear_x: psi = x; radial: psi = -|x - x0|^2 with x0 = (-0.5, 0.5).
ScalarField psi_field(const Grid& grid, PsiKind kind);

// ---------------------------------------------------------------------------
// Batch evaluation.

struct ProbeRow {
  double cx = 0.0, cy = 0.0, r = 0.0;
  std::vector<double> params;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

struct ProbeReport {
  std::string tag;
  std::vector<std::string> param_names;
  std::vector<ProbeRow> rows;
  // max lhs/rhs over rows with rhs > 0. ucp: the fitted c. delta_star: the result.
  double fitted = 0.0;
  // Generic: every row satisfies lhs <= fitted rhs. three_spheres: every s in
  // (0, 1). ucp: finite c and all slacks >= 0. carleman: bounded ratios
  // non-increasing in tau for psi = x, per bump and scale. delta_star: result > 0.
  bool pass = false;
  std::vector<std::string> notes;
};

inline const std::vector<std::string> kProbeNames{"caccioppoli", "doubling",   "reverse_holder", "muckenhoupt",
                                                  "three_spheres", "ucp",       "carleman",       "delta_star"};

struct ProbeSettings {
  std::vector<std::string> selected;
  int lattice = 5;  // centres per axis on [lattice_lo, lattice_hi]^2
  double lattice_lo = 0.2;
  double lattice_hi = 0.8;
  std::vector<double> radii{0.025, 0.05};
  double delta = 1.0;
  double kappa = 3.0;
  double lambda_c = 2.0;
  std::vector<double> taus{4.0, 8.0, 16.0, 32.0};
  double tau0 = 4.0;
  double lambda0 = 1.0;
  // Carleman test functions: (centre, radius) of each bump.
  std::vector<std::pair<Point, double>> bumps{{{0.5, 0.5}, 0.25}, {{0.3, 0.5}, 0.2}};
  int bump_power = 4;
  // Carleman runs once per scale s with A(c + s (x - c)), c = (0.5, 0.5).
  std::vector<double> carleman_scales{1.0};
  double r_star = 0.3;
  int delta_lattice = 11;
  unsigned threads = 1;
};

std::vector<Point> lattice_centres(const ProbeSettings& s);

// Throws std::invalid_argument for an empty or unknown selection.
std::vector<ProbeReport> run_probes(const ScalarField& u, const TensorField& a, const ProbeSettings& s);

// center_x,center_y,r,<params>,lhs,rhs,ratio
void write_probe_csv(const std::filesystem::path& path, const ProbeReport& report);

}  // namespace qscope
