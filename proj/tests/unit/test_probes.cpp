#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "qscope/forward.hpp"
#include "qscope/probes.hpp"

using namespace qscope;
using std::numbers::pi;

TEST_SUITE("probes") {
  TEST_CASE("caccioppoli on closed forms") {
    const Grid g = make_grid(129);
    const ScalarField one(g, 1.0);
    const auto c = caccioppoli_ratio(one, {0.5, 0.5}, 0.1);
    CHECK(c.lhs == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c.rhs == doctest::Approx(pi * 0.04 / 0.01).epsilon(0.02));

    // u = x: |grad u|^2 = 1, lhs = pi r^2
    const auto lin = ScalarField::sample(g, [](double x, double) { return x; });
    const auto s = caccioppoli_ratio(lin, {0.5, 0.5}, 0.1);
    CHECK(s.lhs == doctest::Approx(pi * 0.01).epsilon(0.03));
    // int_{B_2r} x^2 = pi (2r)^2 x0^2 + pi (2r)^4 / 4
    CHECK(s.rhs == doctest::Approx((pi * 0.04 * 0.25 + pi * 0.0016 / 4.0) / 0.01).epsilon(0.03));
    CHECK_THROWS_AS(caccioppoli_ratio(lin, {0.5, 0.5}, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(caccioppoli_ratio(lin, {0.5, 0.5}, 0.0), std::invalid_argument);
  }

  TEST_CASE("caccioppoli ratio is stable over radii for a solution") {
    const auto k1 = manufactured(ManufacturedCase::k1, 129);
    const auto u = solve_forward(k1.problem, 1e-12).u;
    double lo = 1e300, hi = 0.0;
    for (double r : {0.025, 0.05, 0.1}) {
      const auto s = caccioppoli_ratio(u, {0.5, 0.5}, r);
      lo = std::min(lo, s.lhs / s.rhs);
      hi = std::max(hi, s.lhs / s.rhs);
    }
    CHECK(hi < 1.0);
  }

  TEST_CASE("doubling") {
    const Grid g = make_grid(257);
    const ScalarField one(g, 1.0);
    CHECK(doubling_ratio(one, {0.5, 0.5}, 0.1) == doctest::Approx(4.0).epsilon(0.03));
    const auto b = bump_field(g, {0.2, 0.2}, 0.05, 2);
    CHECK(std::isinf(doubling_ratio(b, {0.5, 0.5}, 0.1)));
  }

  TEST_CASE("reverse Hoelder and Muckenhoupt on constants") {
    const Grid g = make_grid(65);
    const ScalarField c(g, 3.0);
    const auto rh = reverse_holder(c, {0.5, 0.5}, 0.2, 1.0);
    CHECK(rh.lhs == doctest::Approx(rh.rhs).epsilon(1e-12));
    CHECK(rh.rhs == doctest::Approx(9.0).epsilon(1e-12));
    const auto m = muckenhoupt(c, {0.5, 0.5}, 0.2, 3.0);
    CHECK(m.lhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.excluded == 0);
    CHECK_THROWS_AS(reverse_holder(c, {0.5, 0.5}, 0.2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(muckenhoupt(c, {0.5, 0.5}, 0.2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(muckenhoupt(c, {0.1, 0.5}, 0.2, 3.0), std::invalid_argument);
  }

  TEST_CASE("property: Hoelder and Jensen lower bounds") {
    const auto k2 = manufactured(ManufacturedCase::k2, 65);
    const auto u = solve_forward(k2.problem, 1e-12).u;
    for (Point x : {Point{0.3, 0.3}, Point{0.6, 0.4}, Point{0.5, 0.7}}) {
      const auto rh = reverse_holder(u, x, 0.1, 1.0);
      CHECK(rh.lhs >= rh.rhs * (1.0 - 1e-12));
      const auto m = muckenhoupt(u, x, 0.1, 3.0);
      CHECK(std::isfinite(m.lhs));
      CHECK(m.lhs >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("three spheres") {
    const Grid g = make_grid(129);
    const auto u = ScalarField::sample(g, [](double x, double y) {
      return (x - 0.5) * (x - 0.5) - (y - 0.5) * (y - 0.5);
    });
    const auto t = three_spheres_fit(u, {0.5, 0.5}, 0.1);
    CHECK(t.i1 < t.i2);
    CHECK(t.i2 < t.i3);
    CHECK(t.s > 0.0);
    CHECK(t.s < 1.0);
    CHECK(std::isfinite(t.s_raw));
    CHECK_THROWS_AS(three_spheres_fit(u, {0.5, 0.5}, 0.2), std::invalid_argument);

    const auto k2 = manufactured(ManufacturedCase::k2, 129);
    const auto w = solve_forward(k2.problem, 1e-12).u;
    for (Point y : {Point{0.3, 0.3}, Point{0.785, 0.5}, Point{0.5, 0.5}}) {
      const auto s = three_spheres_fit(w, y, 0.05).s;
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }

  TEST_CASE("ucp lower-bound fit") {
    const Grid g = make_grid(65);
    const ScalarField small(g, 1e-3);
    const auto f = ucp_lowerbound_fit(small, {{{0.5, 0.5}, 0.1}, {{0.5, 0.5}, 0.2}});
    REQUIRE(f.finite);
    CHECK(f.c > 0.0);
    for (const auto& s : f.samples) {
      CHECK(s.slack >= -1e-9);
      CHECK(s.c_i * std::exp(s.c_i / s.r) == doctest::Approx(-std::log(s.norm)).epsilon(1e-9));
    }
    CHECK(f.c == std::max(f.samples[0].c_i, f.samples[1].c_i));

    const ScalarField zero(g, 0.0);
    const auto z = ucp_lowerbound_fit(zero, {{{0.5, 0.5}, 0.1}});
    CHECK_FALSE(z.finite);
    CHECK(std::isinf(z.c));
    CHECK_THROWS_AS(ucp_lowerbound_fit(small, {}), std::invalid_argument);
  }

  TEST_CASE("property: ucp slack ordering survives scaling") {
    const auto k2 = manufactured(ManufacturedCase::k2, 65);
    const auto u = solve_forward(k2.problem, 1e-12).u;
    const std::vector<std::pair<Point, double>> pts{{{0.3, 0.3}, 0.05}, {{0.785, 0.785}, 0.025}, {{0.5, 0.6}, 0.1}};
    const auto a = ucp_lowerbound_fit(u, pts), b = ucp_lowerbound_fit(2.0 * u, pts);
    REQUIRE(a.finite);
    REQUIRE(b.finite);
    CHECK(b.c <= a.c);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(a.samples[i].slack >= 0.0);
      CHECK(b.samples[i].slack >= 0.0);
      CHECK(b.samples[i].norm == doctest::Approx(2.0 * a.samples[i].norm).epsilon(1e-12));
    }
  }

  TEST_CASE("carleman") {
    const auto k1 = manufactured(ManufacturedCase::k1, 129);
    const Grid& g = k1.problem.grid;
    const auto psi = psi_field(g, PsiKind::linear_x);
    const auto z = carleman_ratio(ScalarField(g, 0.0), k1.problem.a, psi, 2.0, 4.0);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);

    const auto v = bump_field(g, {0.5, 0.5}, 0.25, 4);
    double prev = 1e300;
    for (double tau : {4.0, 8.0, 16.0, 32.0}) {
      const auto s = carleman_ratio(v, k1.problem.a, psi, 2.0, tau);
      REQUIRE(s.rhs > 0.0);
      const double r = s.lhs / s.rhs;
      CHECK(std::isfinite(r));
      CHECK(r <= prev);
      prev = r;
    }

    const auto big = carleman_ratio(v, k1.problem.a, psi, 2.0, 200.0);
    CHECK(big.shifted);
    CHECK(std::isfinite(big.lhs / big.rhs));

    const auto crit = ScalarField::sample(g, [](double x, double y) { return -((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)); });
    CHECK_THROWS_AS(carleman_ratio(v, k1.problem.a, crit, 2.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(carleman_ratio(v, k1.problem.a, psi, 0.0, 4.0), std::invalid_argument);
  }

  TEST_CASE("rescaled coefficients") {
    const Grid g = make_grid(33);
    const auto a = TensorField::sample(
        g, [](double x, double) { return 1.0 + 0.3 * x; }, [](double x, double y) { return 0.1 * x * y; },
        [](double, double y) { return 1.0 + 0.3 * y; });
    CHECK(rescaled_coefficients(a, {0.5, 0.5}, 1.0).a11 == a.a11);
    const auto h = rescaled_coefficients(a, {0.5, 0.5}, 0.5);
    // a11 is linear, so interpolation is exact: 1 + 0.3 (0.5 + 0.5 (x - 0.5))
    for (int i = 0; i < g.nx; ++i) {
      const double x = i * g.hx;
      CHECK(h.a11[g.index(i, 7)] == doctest::Approx(1.0 + 0.3 * (0.25 + 0.5 * x)).epsilon(1e-13));
    }
    CHECK(h.ellipticity() >= a.ellipticity() - 1e-12);
    CHECK_THROWS_AS(rescaled_coefficients(a, {0.5, 0.5}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rescaled_coefficients(a, {0.5, 0.5}, 1.5), std::invalid_argument);

    // the probe runs once per scale and tags rows with it
    const auto k1 = manufactured(ManufacturedCase::variable, 129);
    ProbeSettings s;
    s.selected = {"carleman"};
    s.carleman_scales = {1.0, 0.5};
    const auto rep = run_probes(ScalarField(k1.problem.grid, 1.0), k1.problem.a, s).front();
    CHECK(rep.rows.size() == 2 * 2 * 2 * 4);
    CHECK(rep.param_names.back() == "scale");
    CHECK(rep.pass);
  }

  TEST_CASE("alpha_beta and delta_star") {
    const auto [a, b] = alpha_beta(1.0);
    CHECK(a == doctest::Approx(0.8647).epsilon(1e-4));
    CHECK(b == doctest::Approx(0.1065).epsilon(1e-3));

    const auto k1 = manufactured(ManufacturedCase::k1, 65);
    const auto u = solve_forward(k1.problem, 1e-12).u;
    const double eta = std::cos(1.0) * std::cos(1.0);
    CHECK(delta_star_probe(u, 0.3) >= eta * eta * (1.0 - 1e-6));

    const auto k2 = manufactured(ManufacturedCase::k2, 65);
    const auto w = solve_forward(k2.problem, 1e-12).u;
    CHECK(delta_star_probe(w, 0.3) > 0.0);
    CHECK_THROWS_AS(delta_star_probe(w, 0.3, 1), std::invalid_argument);
  }

  TEST_CASE("run_probes") {
    const auto k2 = manufactured(ManufacturedCase::k2, 65);
    const auto u = solve_forward(k2.problem, 1e-12).u;
    ProbeSettings s;
    CHECK_THROWS_AS(run_probes(u, k2.problem.a, s), std::invalid_argument);
    s.selected = {"nonsense"};
    CHECK_THROWS_AS(run_probes(u, k2.problem.a, s), std::invalid_argument);

    s.selected = {"caccioppoli", "doubling", "three_spheres", "ucp", "delta_star"};
    const auto reps = run_probes(u, k2.problem.a, s);
    REQUIRE(reps.size() == 5);
    CHECK(reps[0].tag == "caccioppoli");
    CHECK(reps[0].rows.size() == 25 * 2);
    for (const auto& r : reps) {
      CHECK(r.pass);
      CHECK(std::isfinite(r.fitted));
    }
    CHECK(lattice_centres(s).size() == 25);

    s.threads = 3;
    const auto again = run_probes(u, k2.problem.a, s);
    for (std::size_t i = 0; i < reps.size(); ++i) {
      REQUIRE(reps[i].rows.size() == again[i].rows.size());
      for (std::size_t j = 0; j < reps[i].rows.size(); ++j) CHECK(reps[i].rows[j].ratio == again[i].rows[j].ratio);
    }

    const auto path = std::filesystem::temp_directory_path() / "qscope_probe_test.csv";
    write_probe_csv(path, reps[0]);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "center_x,center_y,r,lhs,rhs,ratio");
    std::filesystem::remove(path);
  }
}
