#include <doctest.h>

#include <cmath>
#include <string>

#include "qscope/config.hpp"

using namespace qscope;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const Config c = parse_config("[grid]\nn = 65\n");
    CHECK(c.n == 65);
    CHECK(c.tag == "k1");
    CHECK_FALSE(c.q_star.has_value());
    CHECK(c.theta == 0.2);
    CHECK(c.eps == std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(std::isinf(c.q_cap));
    CHECK(c.out_dir == "out");
    CHECK(parse_config("") == Config{});
  }

  TEST_CASE("values, comments and lists") {
    const Config c = parse_config(
        "# header\n"
        "[problem]\n"
        "tag = k2   # nodal lines\n"
        "[admissibility]\n"
        "q_star = 8\n"
        "[recon]\n"
        "q_cap = inf\n"
        "[stability]\n"
        "eps = 0, 1e-2 ,1e-3\n"
        "seed = 18446744073709551615\n"
        "project = false\n"
        "[probes]\n"
        "select = ucp, doubling, ucp\n"
        "bumps = 0.5 0.5 0.2, 0.3 0.4 0.1\n"
        "[output]\n"
        "dir = results/run1\n");
    CHECK(c.tag == "k2");
    CHECK(c.q_star == 8.0);
    CHECK(c.eps == std::vector<double>{0.0, 1e-2, 1e-3});
    CHECK(c.seed == 18446744073709551615ull);
    CHECK_FALSE(c.project);
    CHECK(c.probes == std::vector<std::string>{"ucp", "doubling"});
    CHECK(c.bumps == std::vector<double>{0.5, 0.5, 0.2, 0.3, 0.4, 0.1});
    CHECK(c.out_dir == "results/run1");

    const auto p = probe_settings(c, 2);
    REQUIRE(p.bumps.size() == 2);
    CHECK(p.bumps[1].second == 0.1);
    CHECK(p.threads == 2);
    const auto s = sweep_options(c, 8.0, 1);
    CHECK(s.q_star == 8.0);
    CHECK_FALSE(s.project);
  }

  TEST_CASE("errors carry the line number") {
    CHECK(error_line("[grid]\nn = 2\n") == 2);
    CHECK(error_line("[grid]\nn = 1.5\n") == 2);
    CHECK(error_line("\n\n[stability]\ntheta = 0.3\n") == 4);
    CHECK(error_line("[stability]\ntheta = 0\n") == 2);
    CHECK(error_line("[grid]\nsize = 5\n") == 2);
    CHECK(error_line("[mesh]\n") == 1);
    CHECK(error_line("[grid]\nn = 5\nn = 9\n") == 3);
    CHECK(error_line("[grid]\nn 5\n") == 2);
    CHECK(error_line("n = 5\n") == 1);
    CHECK(error_line("[grid\n") == 1);
    CHECK(error_line("[stability]\neps = 1e-2, x\n") == 2);
    CHECK(error_line("[stability]\neps = -1e-2\n") == 2);
    CHECK(error_line("[stability]\nseed = -1\n") == 2);
    CHECK(error_line("[stability]\nproject = maybe\n") == 2);
    CHECK(error_line("[problem]\ntag = k3\n") == 2);
    CHECK(error_line("[probes]\nselect = caccioppoli, bogus\n") == 2);
    CHECK(error_line("[probes]\ntaus = 8, 4\n") == 2);
    CHECK(error_line("[probes]\nbumps = 0.5 0.5\n") == 2);
    CHECK(error_line("[probes]\ncarleman_scales = 0.5, 2\n") == 2);
    CHECK(error_line("[probes]\nlattice_lo = 0.7\nlattice_hi = 0.3\n") == 3);
    CHECK(error_line("[problem]\nq_path = q.txt\n") == 2);
    CHECK(error_line("[problem]\ntag = custom\n") == 2);
    CHECK(error_line("[admissibility]\nk = 1\n") == 2);
    CHECK(error_line("[admissibility]\nq_star = nan\n") == 2);
  }

  TEST_CASE("property: canonical text round-trips") {
    Config c;
    c.n = 17;
    c.tag = "variable";
    c.q_star = 2.25;
    c.q_cap = 40.0;
    c.eps = {0.0, 0.1, 1.0 / 3.0};
    c.seed = 123456789012345ull;
    c.probes = {"ucp"};
    c.bumps = {0.25, 0.5, 0.125};
    c.carleman_scales = {1.0, 0.25};
    c.out_dir = "x";
    CHECK(parse_config(to_text(c)) == c);
    CHECK(parse_config(to_text(Config{})) == Config{});
    CHECK(to_text(parse_config(to_text(c))) == to_text(c));

    Config e;
    e.probes.clear();
    CHECK(parse_config(to_text(e)) == e);
  }

  TEST_CASE("build_problem") {
    Config c;
    c.n = 17;
    c.tag = "k2";
    double level = 0.0;
    const Problem p = build_problem(c, &level);
    CHECK(level == 8.0);
    CHECK(p.grid.nx == 17);
    CHECK_THROWS(load_config("/nonexistent/qscope.cfg"));
  }
}
