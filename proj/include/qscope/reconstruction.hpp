#pragma once

// Recovery of q from internal data through the identity
//   u div(A grad u) = -q u^2 = -I,
// iterated as a lagged-coefficient (Picard) sequence of linear elliptic solves.
//
// The iteration runs on a signed unknown v ~ u rather than on |u|: |u| has a
// gradient jump across every nodal line, which the linear solve cannot
// reproduce. The sign is read off the data (nodal domains of J) together with
// the sign of the boundary data g. Outputs are w = |v| and q = I / w^2.

#include <array>
#include <limits>
#include <vector>

#include "qscope/forward.hpp"
#include "qscope/internal_data.hpp"

namespace qscope {

struct ReconOptions {
  double w_floor = 1e-6;
  double damping = 0.7;  // theta_d in (0, 1]
  double picard_tol = 1e-8;
  int max_picard = 200;
  double trust_threshold = 0.1;
  // Upper clamp on the local ratio I / v^2 in the source term. Keeps iterates
  // bounded where noisy I does not vanish on the true nodal set.
  double q_cap = std::numeric_limits<double>::infinity();
  // Nodal domains are the components of {J >= sign_threshold * max J}.
  double sign_threshold = 0.02;
  double solver_tol = 1e-10;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct ReconResult {
  ScalarField v;  // signed iterate
  ScalarField w;  // |v|
  ScalarField q_rec;
  RegionMask trust;  // {w >= trust_threshold}
  ScalarField sign;
  int iterations = 0;
  std::vector<double> history;  // relative l2 update per step
  bool converged = false;
  double nonlinear_residual = 0.0;  // ||v div(A grad v) + I||_{l2(interior)}
  double min_iterate = 0.0;         // min over steps of min v on sign(+) nodes
};

// +-1 per node. Components of the superlevel set of J are grown to cover the
// grid by breadth-first nearest-component assignment; each component takes
// the majority sign of g on the boundary nodes it owns, and components not
// touching the boundary take the opposite sign of a neighbour.
ScalarField nodal_sign(const ScalarField& J, const ScalarField& g, double threshold);

// g supplies the Dirichlet data; only its boundary values are read.
// `initial` (optional) is a nonnegative starting w; the harmonic lift of g is
// used otherwise. Non-convergence is reported, linear solve failure throws
// SolveError.
ReconResult reconstruct_w(const InternalData& d, const TensorField& a, const ScalarField& g,
                          const ReconOptions& opts, const ScalarField* initial = nullptr);

// I / max(w, w_floor)^2.
ScalarField recover_q(const InternalData& d, const ScalarField& w, const ReconOptions& opts);

// Distance bands to the nodal set: [0,0.05), [0.05,0.1), [0.1,0.2), [0.2,inf).
inline constexpr std::array<double, 5> kBandEdges{0.0, 0.05, 0.1, 0.2, std::numeric_limits<double>::infinity()};

// Max of |err| on each band; 0 for an empty band.
std::array<double, 4> band_sup(const ScalarField& err, const ScalarField& distance);

struct RoundTrip {
  ScalarField u;
  InternalData clean;
  InternalData noisy;
  ReconResult recon;
  double data_err = 0.0;
  double sup_err_trust = 0.0;      // max |q_rec - q| on the trust region
  double rel_err_trust = 0.0;      // sup_err_trust / max |q| on the trust region
  std::array<double, 4> band_err{};  // per distance band of the clean u
};

// Forward solve, synthesize, perturb, reconstruct, compare.
RoundTrip roundtrip(const Problem& p, NoiseModel model, double eps, std::uint64_t seed,
                    const ReconOptions& opts, double forward_tol = 1e-11);

}  // namespace qscope
