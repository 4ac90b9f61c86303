#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "splab/barriers.hpp"
#include "splab/radialfem.hpp"

using namespace splab;
using Catch::Approx;

TEST_CASE("power solutions of Delta_p u = varrho |x|^b") {
    SECTION("p=2, N=3, b=0, varrho=3: the parabola |x|^2/2") {
        const auto ps = power_solution(2.0, 3, 0.0, 3.0);
        CHECK(ps.lambda == 2.0);
        CHECK(ps.sigma == Approx(0.5).epsilon(1e-14));
        for (double rho : {0.5, 1.0, 2.0}) {
            const double fd =
                p_laplacian_fd([&](double r) { return ps.sigma * std::pow(r, ps.lambda); }, 2.0, 3, rho);
            CHECK(fd == Approx(3.0).epsilon(1e-6));
        }
    }
    SECTION("p=2, N=3, b=-4, varrho=-1: negative decaying forcing") {
        const auto ps = power_solution(2.0, 3, -4.0, -1.0);
        CHECK(ps.lambda == -2.0);
        CHECK(ps.sigma < 0.0);  // same sign as varrho
        for (double rho : {0.8, 1.5, 3.0}) {
            const double fd =
                p_laplacian_fd([&](double r) { return ps.sigma * std::pow(r, ps.lambda); }, 2.0, 3, rho);
            CHECK(fd == Approx(-std::pow(rho, -4.0)).epsilon(1e-4));
        }
    }
    SECTION("p=3 case against the finite-difference oracle") {
        const auto ps = power_solution(3.0, 4, -5.0, -2.0);
        CHECK(ps.lambda == -1.0);
        CHECK(ps.sigma < 0.0);
        for (double rho : {0.7, 1.3, 2.4}) {
            const double fd =
                p_laplacian_fd([&](double r) { return ps.sigma * std::pow(r, ps.lambda); }, 3.0, 4, rho);
            CHECK(fd == Approx(-2.0 * std::pow(rho, -5.0)).epsilon(1e-4));
        }
    }
    SECTION("zero forcing and singular parameters") {
        CHECK(power_solution(2.0, 3, 0.0, 0.0).sigma == 0.0);
        CHECK_THROWS_AS(power_solution(2.0, 3, -2.0, 1.0), std::invalid_argument);  // lambda = 0
        CHECK_THROWS_AS(power_solution(2.0, 3, -3.0, 1.0), std::invalid_argument);  // N + b = 0
        CHECK_THROWS_AS(power_solution(1.0, 3, 0.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("decay-tail barrier: hand-evaluated reference case") {
    // p=2, N=3, vartheta=4, A=3, r=1
    const auto z = barrier_z(2.0, 3, 4.0, 3.0, 1.0);
    CHECK(z.H == 1.0);  // A (vt-N)/N r^vt
    CHECK(z.C_match == Approx(1.0).epsilon(1e-14));
    CHECK(z.tail_coeff == Approx(0.5).epsilon(1e-14));
    CHECK(z.tail_exp == -2.0);
    CHECK(z.value(0.0) == Approx(1.0));
    CHECK(z.value(0.5) == Approx(1.0 - 0.125));   // C - rho^2/2
    CHECK(z.value(2.0) == Approx(0.5 / 4.0));     // rho^{-2}/2
    CHECK(z.derivative_interior_at_r() == Approx(-1.0).epsilon(1e-14));
    CHECK(z.derivative_tail_at_r() == Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("barriers satisfy their defining equations (finite differences)") {
    for (const auto& z : {barrier_z(2.0, 3, 4.0, 3.0, 1.0), barrier_z(3.0, 4, 5.0, 2.0, 1.0)}) {
        const auto v = verify_barrier_fd(z, 20);
        CHECK(v.max_rel_interior <= 1e-3);
        CHECK(v.max_rel_tail <= 1e-3);
        CHECK(v.deriv_mismatch <= 1e-12);
        CHECK(v.ok);
    }
    const auto vh = verify_barrier_fd(barrier_zh(2.0, 3, 3.0, 1.0), 20);
    CHECK(vh.ok);
    const auto vh2 = verify_barrier_fd(barrier_zh(2.5, 4, 1.7, 0.8), 20);
    CHECK(vh2.ok);
}

TEST_CASE("barriers are radially decreasing and tend to the shift limit") {
    for (const auto& z : {barrier_z(2.0, 3, 4.0, 3.0, 1.0), barrier_zh(2.0, 3, 3.0, 1.0)}) {
        double prev = z.value(0.0);
        for (int i = 1; i <= 200; ++i) {
            const double cur = z.value(0.05 * i);
            CHECK(cur <= prev + 1e-15);
            prev = cur;
        }
        CHECK(z.value(1e9) == Approx(z.shift).margin(1e-8));
        CHECK(z.derivative(0.5) < 0.0);
        CHECK(z.derivative(2.5) < 0.0);
    }
}

TEST_CASE("harmonic-tail barrier and the Hopf constant") {
    const auto z = barrier_zh(2.0, 3, 3.0, 1.0);
    CHECK(z.tail_coeff == 1.0);  // C1 = (A/N)^{1/(p-1)} (p-1)/(N-p) r^{N/(p-1)}
    CHECK(z.C_match == Approx(1.5).epsilon(1e-14));
    CHECK(z.value(2.0) == Approx(0.5));
    CHECK(hopf_constant(2.0, 3, 3.0, 1.0) == 1.0);

    SECTION("homogeneity A -> c^{p-1} A scales C1 by c") {
        for (double p : {2.0, 2.5, 3.0}) {
            const double base = hopf_constant(p, 4, 1.3, 0.9);
            for (double c : {0.5, 2.0, 10.0}) {
                const double scaled = hopf_constant(p, 4, std::pow(c, p - 1.0) * 1.3, 0.9);
                CHECK(scaled == Approx(c * base).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("shift_to_zero_at") {
    const auto z = barrier_z(2.0, 3, 4.0, 3.0, 1.0);
    SECTION("reference value at R=2") {
        const auto zR = shift_to_zero_at(z, 2.0);
        CHECK(zR.shift == Approx(-0.125).epsilon(1e-14));
        CHECK(zR.value(2.0) == 0.0);
        CHECK(zR.value(0.0) > 0.0);
        CHECK(zR.value(1.5) > 0.0);
        // derivative data preserved
        CHECK(zR.derivative(0.5) == z.derivative(0.5));
        CHECK(zR.derivative(3.0) == z.derivative(3.0));
    }
    SECTION("large R recovers z") {
        const auto zR = shift_to_zero_at(z, 1e8);
        CHECK(std::abs(zR.shift) < 1e-10);
    }
    SECTION("R <= r rejected") {
        CHECK_THROWS_AS(shift_to_zero_at(z, 0.5), std::invalid_argument);
    }
}

TEST_CASE("compare: the positivity certificate") {
    auto mesh = build_mesh(200, 30.0, 5.0, 1.03, 3);
    const auto z = barrier_z(2.0, 3, 4.0, 3.0, 1.0);
    const double R = 20.0;

    SECTION("self comparison has zero margin") {
        const auto zR = shift_to_zero_at(z, R);
        const auto u = zR.sample(mesh);
        const auto res = compare(u, z, R);
        CHECK(res.ok);
        CHECK(res.margin == Approx(0.0).margin(1e-12));
    }
    SECTION("zero function fails") {
        const auto res = compare(RadialFunction(mesh), z, R);
        CHECK_FALSE(res.ok);
        CHECK(res.margin < -0.1);
    }
    SECTION("monotone in the compared function") {
        auto u = shift_to_zero_at(z, R).sample(mesh);
        auto v = u;
        for (double& x : v.mutable_values()) x += 0.05;
        v.pin_boundary();
        const auto mu = compare(u, z, R);
        const auto mv = compare(v, z, R);
        CHECK(mv.margin >= mu.margin);
    }
    SECTION("R beyond the mesh is rejected") {
        CHECK_THROWS_AS(compare(RadialFunction(mesh), z, 100.0), std::invalid_argument);
    }
}

TEST_CASE("hopf_bound_check") {
    auto mesh = build_mesh(300, 40.0, 5.0, 1.025, 3);
    const auto z = barrier_zh(2.0, 3, 3.0, 1.0);
    auto u = z.sample(mesh);

    SECTION("the barrier itself sits exactly at ratio 1") {
        const auto res = hopf_bound_check(u, 2.0, 3.0, 1.0);
        CHECK(res.C1 == 1.0);
        CHECK(res.worst_ratio == Approx(1.0).epsilon(1e-12));
        CHECK(res.ok);
    }
    SECTION("doubling the profile doubles the worst ratio") {
        auto u2 = u;
        for (double& x : u2.mutable_values()) x *= 2.0;
        u2.pin_boundary();
        const auto res = hopf_bound_check(u2, 2.0, 3.0, 1.0);
        CHECK(res.worst_ratio == Approx(2.0).epsilon(1e-12));
    }
    SECTION("zero profile fails") {
        const auto res = hopf_bound_check(RadialFunction(mesh), 2.0, 3.0, 1.0);
        CHECK_FALSE(res.ok);
        CHECK(res.worst_ratio == 0.0);
    }
}

TEST_CASE("liouville indicator") {
    auto mesh = build_mesh(300, 40.0, 5.0, 1.025, 3);
    const Window tail{5.0, 20.0};
    SECTION("zero function") {
        CHECK(liouville_indicator(RadialFunction(mesh), 2.0, tail) == 0.0);
    }
    SECTION("the harmonic barrier sits at C1") {
        const auto z = barrier_zh(2.0, 3, 3.0, 1.0);
        const auto u = z.sample(mesh);
        CHECK(liouville_indicator(u, 2.0, tail) == Approx(z.tail_coeff).epsilon(1e-12));
    }
    SECTION("window validation") {
        CHECK_THROWS_AS(liouville_indicator(RadialFunction(mesh), 2.0, Window{0.0, 10.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(liouville_indicator(RadialFunction(mesh), 2.0, Window{5.0, 100.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("barrier constructor preconditions") {
    CHECK_THROWS_AS(barrier_z(2.0, 3, 3.0, 1.0, 1.0), std::invalid_argument);   // vt = N
    CHECK_THROWS_AS(barrier_z(3.0, 3, 4.0, 1.0, 1.0), std::invalid_argument);   // p = N
    CHECK_THROWS_AS(barrier_z(2.0, 3, 4.0, -1.0, 1.0), std::invalid_argument);  // A < 0
    CHECK_THROWS_AS(barrier_zh(2.0, 3, 1.0, 0.0), std::invalid_argument);       // r = 0
}
