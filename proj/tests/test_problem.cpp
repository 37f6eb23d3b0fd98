#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <numbers>

#include "lmcf/problem.hpp"

using namespace lmcf;

TEST_CASE("space-time scale") {
    std::array<double, 2> x{3.0, 4.0};
    CHECK(r_scale(x, 0.0) == doctest::Approx(std::sqrt(26.0)));
    std::array<double, 1> origin{0.0};
    CHECK(r_scale(origin, -9.0) == doctest::Approx(std::sqrt(10.0)));
    CHECK_THROWS_AS(r_scale(origin, 0.5), std::invalid_argument);
}

TEST_CASE("quadratic profile ties its drift to the curvature") {
    QuadraticProfile q(SymMatrix::identity(2), {0.0, 0.0}, 0.0);
    CHECK(q.tau == doctest::Approx(std::numbers::pi / 2));
    std::array<double, 2> x{1.0, 1.0};
    CHECK(q.eval(x, -1.0) == doctest::Approx(1.0 - std::numbers::pi / 2));

    QuadraticProfile q2(SymMatrix::diagonal(std::array<double, 2>{1.0, 3.0}),
                        {1.0, -1.0}, 2.0);
    CHECK(q2.tau == doctest::Approx(std::atan(1.0) + std::atan(3.0)));
    std::array<double, 2> y{1.0, 2.0};
    // 0.5*(1 + 12) + (1 - 2) + 2 = 7.5 at t = 0
    CHECK(q2.eval(y, 0.0) == doctest::Approx(7.5));
    CHECK(eval_quadratic(q2, y, 0.0) == q2.eval(y, 0.0));

    CHECK_THROWS_AS(QuadraticProfile(SymMatrix::identity(2), {0.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("compact bump forcing vanishes outside its support") {
    Forcing f = Forcing::compact_bump({0.0, 0.0}, 1.0, 2.0, 1.0);
    CHECK(f.compact());
    CHECK(f.support_radius() == doctest::Approx(1.0));
    CHECK(f.support_time() == doctest::Approx(1.0));
    std::array<double, 2> center{0.0, 0.0};
    // peak value: phi(0)^2 * amplitude at the time-window center t=-1/2
    CHECK(eval_forcing(f, center, -0.5) == doctest::Approx(2.0));
    CHECK(f.sup_abs() == doctest::Approx(2.0));
    std::array<double, 2> outside{1.5, 0.0};
    CHECK(eval_forcing(f, outside, -0.5) == 0.0);
    CHECK(eval_forcing(f, center, -1.5) == 0.0);
    CHECK(eval_forcing(f, center, 0.0) == 0.0);
    // smooth and strictly inside: positive
    std::array<double, 2> inside{0.5, 0.0};
    CHECK(eval_forcing(f, inside, -0.25) > 0.0);
}

TEST_CASE("algebraic forcing follows the scale") {
    Forcing f = Forcing::algebraic_decay(2, 3.0, 2.0);
    CHECK(!f.compact());
    std::array<double, 2> x{3.0, 4.0};
    double expected = 2.0 * std::pow(std::sqrt(27.0), -3.0);
    CHECK(eval_forcing(f, x, -1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(Forcing::algebraic_decay(2, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("tabulated forcing interpolates and clips") {
    // 1d table on [-1,1], spacing 1: three nodes; two time slices
    std::vector<std::vector<double>> values{{0.0, 1.0, 0.0}, {0.0, 3.0, 0.0}};
    Forcing f = Forcing::tabulated(1, 1.0, 1.0, {-1.0, 0.0}, values);
    std::array<double, 1> mid{0.0};
    CHECK(eval_forcing(f, mid, -1.0) == doctest::Approx(1.0));
    CHECK(eval_forcing(f, mid, -0.5) == doctest::Approx(2.0));
    std::array<double, 1> half{0.5};
    CHECK(eval_forcing(f, half, 0.0) == doctest::Approx(1.5));
    std::array<double, 1> outside{2.0};
    CHECK(eval_forcing(f, outside, -0.5) == 0.0);
    CHECK(eval_forcing(f, mid, -2.0) == 0.0);
    CHECK(f.sup_abs() == doctest::Approx(3.0));
}

TEST_CASE("grid geometry and ordering") {
    SpaceTimeGrid g{2, 1.0, 0.5, -1.0, 0.0, 0.05};
    g.validate();
    CHECK(g.points_per_axis() == 5);
    CHECK(g.node_count() == 25);
    CHECK(g.steps() == 20);
    CHECK(g.cfl_bound() == doctest::Approx(0.0625));
    CHECK(g.coordinate(0) == doctest::Approx(-1.0));
    CHECK(g.coordinate(4) == doctest::Approx(1.0));

    // last axis fastest
    std::array<double, 2> x{};
    g.node_coords(1, x);
    CHECK(x[0] == doctest::Approx(-1.0));
    CHECK(x[1] == doctest::Approx(-0.5));
    auto idx = g.unpack(7);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 2);
    std::array<int, 2> back{1, 2};
    CHECK(g.pack(back) == 7);
    CHECK(g.is_boundary(0));
    CHECK(!g.is_boundary(g.pack(std::array<int, 2>{2, 2})));
}

TEST_CASE("grid validation names the stability bound") {
    SpaceTimeGrid g{2, 1.0, 0.5, -1.0, 0.0, 0.2};
    try {
        g.validate();
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("0.0625") != std::string::npos);
    }

    SpaceTimeGrid bad_points{1, 1.0, 0.3, -1.0, 0.0, 0.01};
    CHECK_THROWS_AS(bad_points.validate(), std::invalid_argument);

    SpaceTimeGrid bad_dim{4, 1.0, 0.5, -1.0, 0.0, 0.01};
    CHECK_THROWS_AS(bad_dim.validate(), std::invalid_argument);
}

TEST_CASE("fields guard their shape") {
    SpaceTimeGrid g{1, 1.0, 0.5, -1.0, 0.0, 0.05};
    GridField u(g);
    u.add_level(-1.0, std::vector<double>(5, 0.0));
    CHECK_THROWS_AS(u.add_level(-0.5, std::vector<double>(4, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(u.add_level(-1.0, std::vector<double>(5, 0.0)), std::invalid_argument);
    u.add_level(-0.5, std::vector<double>(5, 1.0));
    CHECK(u.level_count() == 2);
    CHECK(u.value(1, 3) == 1.0);
}

TEST_CASE("quadratic sampling matches pointwise evaluation") {
    SpaceTimeGrid g{2, 1.0, 0.5, -1.0, 0.0, 0.05};
    QuadraticProfile q(SymMatrix::identity(2), {0.5, 0.0}, -1.0);
    std::vector<double> vals = sample_quadratic(g, q, -0.5);
    std::array<double, 2> x{};
    for (std::int64_t node = 0; node < g.node_count(); ++node) {
        g.node_coords(node, x);
        CHECK(vals[node] == doctest::Approx(q.eval(x, -0.5)).epsilon(1e-15));
    }
}
