#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "qscope/forward.hpp"
#include "qscope/internal_data.hpp"
#include "qscope/rng.hpp"

using namespace qscope;
using std::numbers::pi;

TEST_SUITE("internal_data") {
  TEST_CASE("splitmix64 reference stream") {
    // First outputs for seed 0 of the reference generator.
    SplitMix64 r(0);
    CHECK(r.next() == 0xE220A8397B1DCDAFULL);
    CHECK(r.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(r.next() == 0x06C45D188009454FULL);
    SplitMix64 u(123);
    for (int i = 0; i < 1000; ++i) {
      const double x = u.uniform();
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }

  TEST_CASE("synthesize examples") {
    const auto m = manufactured(ManufacturedCase::k1, 33);
    const auto u = ScalarField::sample(m.problem.grid, m.exact);
    const auto d = synthesize(m.problem.q, u);
    CHECK(d.I(0, 0) == doctest::Approx(2.0));
    const auto z = synthesize(m.problem.q, ScalarField(m.problem.grid, 0.0));
    CHECK(linf_norm(z.I) == 0.0);
    CHECK(linf_norm(z.J) == 0.0);
    CHECK_THROWS_AS(synthesize(ScalarField(m.problem.grid, -1.0), u), std::invalid_argument);

    const Grid g = make_grid(129);
    const auto u2 = ScalarField::sample(g, [](double x, double y) { return std::cos(2 * x) * std::cos(2 * y); });
    const auto d2 = synthesize(ScalarField(g, 8.0), u2);
    // I vanishes on the nodal line up to the O(h) offset of the nearest node.
    const int i = static_cast<int>(std::lround(pi / 4 / g.hx));
    for (int j = 0; j < g.ny; ++j) CHECK(d2.I(i, j) <= 8.0 * 4.0 * g.hx * g.hx);
  }

  TEST_CASE("property: sqrt consistency") {
    for (auto tag : {ManufacturedCase::k1, ManufacturedCase::k2}) {
      const auto m = manufactured(tag, 65);
      const auto d = synthesize(m.problem.q, ScalarField::sample(m.problem.grid, m.exact));
      CHECK(linf_norm(d.J * d.J - d.I) <= 1e-12 * linf_norm(d.I));
    }
  }

  TEST_CASE("property: nodal set of J equals nodal set of u") {
    const auto m = manufactured(ManufacturedCase::k2, 65);
    const auto u = solve_forward(m.problem, 1e-12).u;
    const auto d = synthesize(m.problem.q, u);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK((d.J[k] == 0.0) == (u[k] == 0.0));
    // Sign changes of u sit where J has a local minimum across the edge.
    const auto zu = zero_points(u);
    CHECK_FALSE(zu.empty());
  }

  TEST_CASE("add_noise") {
    const auto m = manufactured(ManufacturedCase::k1, 65);
    const auto d = synthesize(m.problem.q, ScalarField::sample(m.problem.grid, m.exact));
    const auto same = add_noise(d, NoiseModel::deterministic, 0.0, 1);
    CHECK(same.I == d.I);
    CHECK(same.J == d.J);
    // J >= cos(1)^2 sqrt(2) > 0.4, so eps <= 0.1 never clips.
    for (double eps : {1e-1, 1e-3, 1e-6}) {
      const auto n = add_noise(d, NoiseModel::deterministic, eps, 0);
      CHECK(data_diff_h1(d, n) == doctest::Approx(eps).epsilon(1e-10));
      CHECK(linf_norm(n.J * n.J - n.I) <= 1e-12 * linf_norm(n.I));
      CHECK(n.noise.eps == eps);
    }
    const auto r1 = add_noise(d, NoiseModel::random, 1e-2, 99), r2 = add_noise(d, NoiseModel::random, 1e-2, 99);
    CHECK(r1.I == r2.I);
    CHECK(r1.J == r2.J);
    CHECK(data_diff_h1(d, r1) == doctest::Approx(1e-2).epsilon(1e-10));
    const auto r3 = add_noise(d, NoiseModel::random, 1e-2, 100);
    CHECK_FALSE(r3.J == r1.J);
    CHECK_THROWS_AS(add_noise(d, NoiseModel::deterministic, -1e-3, 0), std::invalid_argument);
    CHECK_THROWS_AS(add_noise(d, NoiseModel::none, 1e-3, 0), std::invalid_argument);
    CHECK(parse_noise_model("random") == NoiseModel::random);
    CHECK_FALSE(parse_noise_model("gaussian"));
  }

  TEST_CASE("clipping keeps I nonnegative") {
    const auto m = manufactured(ManufacturedCase::k2, 65);
    const auto d = synthesize(m.problem.q, ScalarField::sample(m.problem.grid, m.exact));
    const auto n = add_noise(d, NoiseModel::deterministic, 0.5, 0);
    for (std::size_t k = 0; k < n.I.size(); ++k) {
      CHECK(n.J[k] >= 0.0);
      CHECK(n.I[k] == n.J[k] * n.J[k]);
    }
  }

  TEST_CASE("property: noise is monotone in eps") {
    const auto m = manufactured(ManufacturedCase::k1, 33);
    const auto d = synthesize(m.problem.q, ScalarField::sample(m.problem.grid, m.exact));
    double prev = 0.0;
    for (double eps : {1e-5, 1e-4, 1e-3, 1e-2, 5e-2}) {
      const double e = data_diff_h1(add_noise(d, NoiseModel::deterministic, eps, 0), d);
      CHECK(e >= prev);
      prev = e;
    }
  }

  TEST_CASE("data_diff_h1 matches an independent norm computation") {
    const auto a = manufactured(ManufacturedCase::k1, 65);
    Problem pb = a.problem;
    pb.q = ScalarField(pb.grid, 2.1);
    const auto ua = solve_forward(a.problem, 1e-12).u, ub = solve_forward(pb, 1e-12).u;
    const auto da = synthesize(a.problem.q, ua), db = synthesize(pb.q, ub);
    const double v = data_diff_h1(da, db);
    CHECK(v > 0.0);
    const auto diff = map(ua, [](double t) { return std::sqrt(2.0) * std::abs(t); }) -
                      map(ub, [](double t) { return std::sqrt(2.1) * std::abs(t); });
    CHECK(v == doctest::Approx(h1_norm(diff)).epsilon(1e-12));
    CHECK(data_diff_h1(da, da) == 0.0);
  }

  TEST_CASE("save and load round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "qscope_internal_data_test";
    std::filesystem::create_directories(dir);
    const auto m = manufactured(ManufacturedCase::k2, 17);
    const auto d = add_noise(synthesize(m.problem.q, ScalarField::sample(m.problem.grid, m.exact)), NoiseModel::random,
                             0.125, 18446744073709551615ULL);
    save_data(dir, "set", d);
    const auto back = load_data(dir, "set");
    CHECK(back.I == d.I);
    CHECK(back.J == d.J);
    CHECK(back.noise == d.noise);
    std::filesystem::remove_all(dir);
  }
}
