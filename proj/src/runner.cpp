#include "qscope/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qscope/field_io.hpp"
#include "qscope/kernels.hpp"

namespace qscope {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QSCOPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return hw;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest init failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Session {
 public:
  Session(const Config& cfg, std::ostream& log) : cfg_(cfg), log_(log), dir_(cfg.out_dir), threads_(worker_count()) {
    fs::create_directories(dir_);
  }

  template <class F>
  void stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    log_ << "[" << name << "]\n";
    body();
    timings_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  fs::path file(const std::string& name) {
    files_.insert(name);
    return dir_ / name;
  }

  void forward() {
    stage("forward", [&] {
      const auto& [p, level] = problem();
      auto sol = solve_forward(p, cfg_.forward_tol);
      write_field(file("u.txt"), sol.u);
      const ScalarField res = residual_field(p, sol.u);
      const auto adm = estimate_admissibility(p.a, p.q, ScalarField(p.grid, cfg_.q_star.value_or(level)), cfg_.q0,
                                              cfg_.k);
      double err = std::nan("");
      if (cfg_.tag == "k1" || cfg_.tag == "k2") {
        const auto m = manufactured(*parse_case(cfg_.tag), cfg_.n);
        err = linf_norm(sol.u - ScalarField::sample(p.grid, m.exact));
      }
      std::ofstream out(file("forward.csv"));
      out << "n,method,status,iterations,relative_residual,max_abs_residual,err_inf,q_star,radius,member\n";
      out << cfg_.n << ',' << to_string(sol.report.method) << ',' << to_string(sol.report.status) << ','
          << sol.report.iterations << ',' << num(sol.report.relative_residual) << ',' << num(linf_norm(res)) << ','
          << num(err) << ',' << num(cfg_.q_star.value_or(level)) << ',' << num(adm.radius) << ','
          << (adm.member ? 1 : 0) << '\n';
      log_ << "  " << to_string(sol.report.method) << " " << sol.report.iterations << " iterations, residual "
           << sol.report.relative_residual << "\n";
      if (!adm.diagnostic.empty()) log_ << "  admissibility: " << adm.diagnostic << "\n";
      if (!sol.report.converged()) throw SolveError("forward solve did not converge", sol.report);
    });
  }

  void synth() {
    stage("synth", [&] {
      const auto& [p, level] = problem();
      auto sol = solve_forward(p, cfg_.forward_tol);
      if (!sol.report.converged()) throw SolveError("forward solve did not converge", sol.report);
      const auto clean = synthesize(p.q, sol.u);
      const auto model = cfg_.data_eps > 0.0 ? *parse_noise_model(cfg_.noise_model) : NoiseModel::none;
      const auto noisy = add_noise(clean, model, cfg_.data_eps, cfg_.seed);
      file("data_I.txt");
      file("data_J.txt");
      file("data_meta.txt");
      save_data(dir_, "data", noisy);
      log_ << "  data error " << data_diff_h1(clean, noisy) << "\n";
    });
  }

  void reconstruct() {
    stage("reconstruct", [&] {
      const auto& [p, level] = problem();
      ReconOptions opts = recon_options(cfg_);
      const auto model = cfg_.data_eps > 0.0 ? *parse_noise_model(cfg_.noise_model) : NoiseModel::none;
      const RoundTrip rt = roundtrip(p, model, cfg_.data_eps, cfg_.seed, opts, cfg_.forward_tol);
      write_field(file("w.txt"), rt.recon.w);
      write_field(file("q_rec.txt"), rt.recon.q_rec);
      write_mask(file("trust.txt"), rt.recon.trust);
      std::ofstream out(file("recon.csv"));
      out << "eps,data_err,iterations,converged,nonlinear_residual,sup_err_trust,rel_err_trust,err_b0,err_b1,"
             "err_b2,err_b3\n";
      out << num(cfg_.data_eps) << ',' << num(rt.data_err) << ',' << rt.recon.iterations << ','
          << (rt.recon.converged ? 1 : 0) << ',' << num(rt.recon.nonlinear_residual) << ','
          << num(rt.sup_err_trust) << ',' << num(rt.rel_err_trust);
      for (double b : rt.band_err) out << ',' << num(b);
      out << '\n';
      log_ << "  " << rt.recon.iterations << " Picard steps, relative q error on trust region " << rt.rel_err_trust
           << "\n";
      if (!rt.recon.converged) throw std::runtime_error("reconstruction did not converge");
    });
  }

  void sweep() {
    stage("sweep", [&] {
      const auto& [p, level] = problem();
      const auto res = stability_sweep(p, cfg_.eps, sweep_options(cfg_, level, threads_));
      write_stability_csv(file("stability.csv"), res.records);
      log_ << "  " << res.records.size() << " records, box [" << res.box_lo << ", " << res.box_hi << "]";
      if (res.phi_fitted) log_ << ", phi residual " << res.phi.residual;
      log_ << "\n";
    });
  }

  void probe() {
    stage("probe", [&] {
      if (cfg_.probes.empty()) throw std::invalid_argument("empty probe set");
      const auto& [p, level] = problem();
      auto sol = solve_forward(p, cfg_.forward_tol);
      if (!sol.report.converged()) throw SolveError("forward solve did not converge", sol.report);
      const auto reports = run_probes(sol.u, p.a, probe_settings(cfg_, threads_));
      for (const auto& r : reports) {
        write_probe_csv(file("probes_" + r.tag + ".csv"), r);
        log_ << "  " << r.tag << ": fitted " << r.fitted << (r.pass ? " pass" : " FAIL") << "\n";
        for (const auto& n : r.notes) log_ << "    " << n << "\n";
      }
    });
  }

  void finish(const std::string& subcommand, bool ok, const std::string& error) {
    ordered_json files = ordered_json::array();
    for (const auto& name : files_) {
      const fs::path path = dir_ / name;
      if (!fs::exists(path)) continue;
      files.push_back({{"name", name}, {"bytes", fs::file_size(path)}, {"sha256", sha256_file(path)}});
    }
    ordered_json m;
    m["artifact"] = "qscope";
    m["version"] = QSCOPE_VERSION;
    m["subcommand"] = subcommand;
    m["status"] = ok ? "ok" : "failed";
    if (!ok) m["error"] = error;
    m["seed"] = cfg_.seed;
    Config echo = cfg_;
    echo.out_dir = Config{}.out_dir;  // location is not part of the run
    m["config"] = to_text(echo);
    m["files"] = files;

    ordered_json t;
    t["kernels"] = std::string(kernels::name(kernels::active().isa));
    t["threads"] = threads_;
    for (const auto& [k, v] : timings_) t["seconds"][k] = v;
    std::ofstream(dir_ / "timings.json") << t.dump(2) << '\n';

    const fs::path tmp = dir_ / "manifest.json.tmp";
    {
      std::ofstream out(tmp);
      out << m.dump(2) << '\n';
      if (!out) throw std::runtime_error("cannot write manifest");
    }
    fs::rename(tmp, dir_ / "manifest.json");
  }

 private:
  const std::pair<Problem, double>& problem() {
    if (!problem_) {
      double level = 0.0;
      Problem p = build_problem(cfg_, &level);
      validate(p, true);
      problem_.emplace(std::move(p), level);
    }
    return *problem_;
  }

  const Config& cfg_;
  std::ostream& log_;
  fs::path dir_;
  unsigned threads_;
  std::set<std::string> files_;
  std::map<std::string, double> timings_;
  std::optional<std::pair<Problem, double>> problem_;
};

}  // namespace

int run(const std::string& subcommand, const Config& cfg, std::ostream& log) {
  if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end()) {
    log << "unknown subcommand '" << subcommand << "'\n";
    return 2;
  }
  Session s(cfg, log);
  bool ok = true;
  std::string error;
  try {
    const bool all = subcommand == "all";
    if (all || subcommand == "forward") s.forward();
    if (all || subcommand == "synth") s.synth();
    if (all || subcommand == "reconstruct") s.reconstruct();
    if (all || subcommand == "sweep") s.sweep();
    if (all || subcommand == "probe") s.probe();
  } catch (const std::exception& e) {
    ok = false;
    error = e.what();
    log << "error: " << error << "\n";
  }
  s.finish(subcommand, ok, error);
  return ok ? 0 : 1;
}

}  // namespace qscope
