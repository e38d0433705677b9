// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.
//
//   qscope_acceptance <path-to-qscope> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qscope/forward.hpp"
#include "qscope/probes.hpp"
#include "qscope/reconstruction.hpp"
#include "qscope/runner.hpp"
#include "qscope/stability.hpp"

using namespace qscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome forward_convergence() {
  std::vector<double> err;
  for (int n : {65, 129, 257}) {
    const auto m = manufactured(ManufacturedCase::k1, n);
    const auto sol = solve_forward(m.problem, 1e-13);
    if (!sol.report.converged()) return {false, fmt("solve did not converge at n=%d", n)};
    err.push_back(linf_norm(sol.u - ScalarField::sample(m.problem.grid, m.exact)));
  }
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
  return {p1 >= 1.8 && p2 >= 1.8 && err[2] <= 5e-5,
          fmt("orders %.3f, %.3f; err(257) = %.3e", p1, p2, err[2])};
}

Outcome resolvent() {
  const auto m = manufactured(ManufacturedCase::k1, 129);
  const auto sys = make_system(m.problem.a, ScalarField(m.problem.grid, 0.0));
  const double sigma = smallest_singular_estimate(sys.matrix, 1e-12);
  const double ref = 2.0 * std::numbers::pi * std::numbers::pi;
  const double rel = std::abs(sigma - ref) / ref;
  return {rel <= 0.05, fmt("sigma_min = %.6f, 2 pi^2 = %.6f, rel diff %.2e", sigma, ref, rel)};
}

Outcome uniqueness() {
  bool ok = true;
  std::string d;
  for (auto tag : {ManufacturedCase::k1, ManufacturedCase::k2}) {
    const auto m = manufactured(tag, 257);
    const ReconOptions o;
    const auto rt = roundtrip(m.problem, NoiseModel::none, 0.0, 0, o, 1e-13);
    const RegionMask trust = RegionMask::at_least(map(rt.u, [](double t) { return std::abs(t); }), 0.1);
    const double rel = linf_norm(rt.recon.q_rec - m.problem.q, trust) / linf_norm(m.problem.q, trust);
    const auto again = reconstruct_w(rt.noisy, m.problem.a, m.problem.g, o);
    const bool same = again.q_rec == rt.recon.q_rec;
    ok = ok && rel <= 1e-2 && same && rt.recon.converged;
    d += fmt("%s rel err %.2e%s; ", to_string(tag).c_str(), rel, same ? ", repeat bit-identical" : ", repeat DIFFERS");
  }
  return {ok, d};
}

Outcome weighted_stability() {
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  double mx[2] = {0.0, 0.0};
  bool finite = true;
  int idx = 0;
  for (int n : {129, 257}) {
    const auto m = manufactured(ManufacturedCase::k1, n);
    SweepOptions o;
    o.family = SweepFamily::bump;
    o.q_star = m.q_level;
    o.forward_tol = 1e-13;
    o.threads = worker_count();
    const auto res = stability_sweep(m.problem, eps, o);
    for (const auto& r : res.records) {
      finite = finite && std::isfinite(r.weighted_ratio) && r.weighted_rhs > 0.0;
      mx[idx] = std::max(mx[idx], r.weighted_ratio);
    }
    ++idx;
  }
  const double change = std::abs(mx[1] - mx[0]) / mx[0];
  return {finite && change < 0.5, fmt("max ratio %.4g (n=129), %.4g (n=257), change %.1f%%", mx[0], mx[1], 100 * change)};
}

Outcome degradation() {
  const auto m = manufactured(ManufacturedCase::k2, 257);
  SweepOptions o;
  o.q_star = m.q_level;
  o.forward_tol = 1e-13;
  o.threads = worker_count();
  const auto res = stability_sweep(m.problem, {1e-2, 1e-3, 1e-4, 1e-5}, o);
  std::vector<double> prod;
  std::vector<std::pair<double, double>> outer;
  for (const auto& r : res.records) {
    prod.push_back(r.sup_err_band[0] * std::abs(std::log(r.data_err)));
    outer.emplace_back(r.data_err, r.sup_err_band[3]);
  }
  const double med = median(prod);
  double spread = 0.0;
  for (double p : prod) spread = std::max({spread, p / med, med / p});
  const double expo = power_law_exponent(outer);
  const double resid = res.phi_fitted ? res.phi.residual : INFINITY;
  std::string list;
  for (double p : prod) list += fmt("%.3g ", p);
  return {spread <= 3.0 && expo >= 0.4 && resid <= 0.5,
          fmt("b0*|ln de| = [ %s] max/median factor %.2f; outer exponent %.3f; phi residual %.3f", list.c_str(),
              spread, expo, resid)};
}

Outcome probes() {
  std::string d;
  bool ok = true;

  // (a) fitted constants under refinement, on both manufactured solutions
  for (auto tag : {ManufacturedCase::k1, ManufacturedCase::k2}) {
    ProbeSettings s;
    s.selected = {"caccioppoli", "doubling", "reverse_holder"};
    s.threads = worker_count();
    std::vector<double> c[2];
    int i = 0;
    for (int n : {129, 257}) {
      const auto m = manufactured(tag, n);
      const auto u = solve_forward(m.problem, 1e-13).u;
      for (const auto& r : run_probes(u, m.problem.a, s)) c[i].push_back(r.fitted);
      ++i;
    }
    for (std::size_t k = 0; k < c[0].size(); ++k) {
      const double f = std::max(c[0][k], c[1][k]) / std::min(c[0][k], c[1][k]);
      ok = ok && std::isfinite(f) && f < 2.0;
      d += fmt("%s %s %.3g->%.3g; ", to_string(tag).c_str(), s.selected[k].c_str(), c[0][k], c[1][k]);
    }
  }

  const auto m = manufactured(ManufacturedCase::k2, 257);
  const auto u = solve_forward(m.problem, 1e-13).u;
  ProbeSettings s;
  s.threads = worker_count();

  // (b) three spheres at the 25 lattice centres
  s.selected = {"three_spheres"};
  s.radii = {0.05};
  const auto ts = run_probes(u, m.problem.a, s).front();
  int inside = 0;
  for (const auto& r : ts.rows) inside += r.lhs > 0.0 && r.lhs < 1.0;
  ok = ok && inside == 25 && ts.rows.size() == 25;
  d += fmt("three spheres %d/%zu in (0,1), max s %.3f; ", inside, ts.rows.size(), ts.fitted);

  // (c) Carleman on the bump family
  s.selected = {"carleman"};
  const auto cr = run_probes(u, m.problem.a, s).front();
  bool bounded = std::isfinite(cr.fitted);
  ok = ok && cr.pass && bounded;
  d += fmt("carleman %s (max ratio %.3g)%s; ", cr.pass ? "monotone" : "NOT monotone", cr.fitted,
           cr.notes.empty() ? "" : (" note: " + cr.notes.front()).c_str());

  // (d) ucp
  s.selected = {"ucp"};
  s.radii = {0.025, 0.05};
  const auto uc = run_probes(u, m.problem.a, s).front();
  double min_slack = INFINITY;
  for (const auto& r : uc.rows) min_slack = std::min(min_slack, r.params[2]);
  ok = ok && uc.pass && std::isfinite(uc.fitted) && min_slack >= 0.0;
  d += fmt("ucp c = %.4g, min slack %.3g", uc.fitted, min_slack);
  return {ok, d};
}

Outcome linear_algebra() {
  double worst = 0.0;
  int systems = 0;
  auto compare = [&](const SparseMatrix& a, bool spd) {
    std::vector<double> b(a.dim());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::sin(0.37 * static_cast<double>(i) + 1.0);
    const auto ref = oracle::lu_solve(a.to_dense(), b);
    double scale = 0.0;
    for (double x : ref) scale = std::max(scale, std::abs(x));
    std::vector<SolveResult> runs{bicgstab_solve(a, b, 1e-14, 20000)};
    if (spd) runs.push_back(cg_solve(a, b, 1e-14, 20000));
    for (const auto& r : runs) worst = std::max(worst, oracle::max_abs_diff(r.x, ref) / scale);
    ++systems;
  };
  for (int n : {8, 15, 22}) {  // 36, 169, 400 unknowns
    for (auto tag : {ManufacturedCase::k1, ManufacturedCase::variable}) {
      const auto m = manufactured(tag, n);
      compare(make_system(m.problem.a, ScalarField(m.problem.grid, 0.0)).matrix, true);
      const auto sys = make_system(m.problem.a, m.problem.q);
      compare(sys.matrix, sys.positive_definite);
      // indefinite: shift past the first eigenvalues
      compare(make_system(m.problem.a, ScalarField(m.problem.grid, 70.0)).matrix, false);
    }
  }
  return {worst <= 1e-8, fmt("%d systems, max relative deviation from LU %.2e", systems, worst)};
}

Outcome determinism(const std::string& exe, const fs::path& work) {
  fs::remove_all(work / "det");
  fs::create_directories(work / "det");
  const fs::path cfg = work / "det" / "run.cfg";
  std::ofstream(cfg) << "[grid]\nn = 65\n[problem]\ntag = k2\n[stability]\neps = 0, 1e-1, 1e-2, 1e-3, 1e-4\n"
                        "noise_model = random\nseed = 5\n";
  std::string manifests[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = work / "det" / (i ? "b" : "a");
    const std::string cmd = "\"" + exe + "\" all --config \"" + cfg.string() + "\" --out \"" + out.string() +
                            "\" --seed 42 2> \"" + (work / "det" / "log.txt").string() + "\"";
    if (std::system(cmd.c_str()) != 0) return {false, "qscope all exited nonzero"};
    std::ifstream in(out / "manifest.json", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    manifests[i] = s.str();
  }
  const bool ok = !manifests[0].empty() && manifests[0] == manifests[1] &&
                  manifests[0].find("\"status\": \"ok\"") != std::string::npos;
  return {ok, fmt("manifests %s (%zu bytes)", manifests[0] == manifests[1] ? "identical" : "DIFFER",
                  manifests[0].size())};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <qscope> <work-dir>\n", argv[0]);
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path work = argv[2];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 forward convergence", forward_convergence},
      {"2 resolvent estimate", resolvent},
      {"3 uniqueness round trip", uniqueness},
      {"4 weighted stability", weighted_stability},
      {"5 critical-point degradation", degradation},
      {"6 inequality probes", probes},
      {"7 linear algebra vs LU", linear_algebra},
      {"8 determinism", [&] { return determinism(exe, work); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
