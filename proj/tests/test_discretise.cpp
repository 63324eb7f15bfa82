#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mot/discretise.hpp"
#include "test_support.hpp"

using namespace mot;
using mot::testsupport::random_grid_path;

namespace {
GridPath ramp(double from, double to, double T = 1.0) {
    return GridPath({0.0, T}, {{from}, {to}});
}
const InfoSpace kInfo1(1, {1.0});
}  // namespace

TEST_CASE("partition of a constant path") {
    auto part = lebesgue_partition(constant_path(1.0, 2), 4);
    CHECK(part.step_count() == 1);
    REQUIRE(part.taus.size() == 2);
    CHECK(part.taus[0] == 0.0);
    CHECK(part.taus[1] == 1.0);
}

TEST_CASE("partition of linear ramps") {
    auto part = lebesgue_partition(ramp(1.0, 1.25), 3);
    REQUIRE(part.taus.size() == 3);
    CHECK(part.taus[1] == Catch::Approx(0.5));
    CHECK(part.taus[2] == 1.0);
    CHECK(part.step_count() == 2);
    CHECK(part.values_at_taus[1][0] == Catch::Approx(1.125));

    auto part2 = lebesgue_partition(ramp(1.0, 1.375), 3);
    REQUIRE(part2.taus.size() == 4);
    CHECK(part2.taus[1] == Catch::Approx(1.0 / 3.0));
    CHECK(part2.taus[2] == Catch::Approx(2.0 / 3.0));
    CHECK(part2.taus[3] == 1.0);
    CHECK(part2.step_count() == 3);
}

TEST_CASE("partition moves are exactly one mesh step") {
    std::mt19937 rng(321);
    for (int k = 0; k < 50; ++k) {
        auto p = random_grid_path(rng);
        for (int N : {3, 5, 7}) {
            auto part = lebesgue_partition(p, N);
            double h = std::ldexp(1.0, -N);
            for (std::size_t j = 1; j < part.taus.size(); ++j) {
                double dev = 0.0;
                for (std::size_t i = 0; i < p.dim(); ++i)
                    dev = std::max(dev, std::abs(part.values_at_taus[j][i] -
                                                 part.values_at_taus[j - 1][i]));
                if (j + 1 < part.taus.size()) {
                    CHECK(dev == Catch::Approx(h).margin(1e-10));
                } else {
                    CHECK(dev <= h + 1e-10);
                }
            }
        }
    }
}

TEST_CASE("naive discretisation") {
    auto f = naive_discretise(constant_path(1.0, 1), 4);
    CHECK(f.segments() == 1);
    CHECK(f.values[0][0] == 1.0);
    CHECK(f.terminal[0] == 1.0);

    auto g = naive_discretise(ramp(1.0, 1.25), 3);
    REQUIRE(g.segments() == 2);
    CHECK(g.times[1] == Catch::Approx(0.5));
    CHECK(g.values[0][0] == 1.0);
    CHECK(g.values[1][0] == Catch::Approx(1.125));
    CHECK(g.terminal[0] == Catch::Approx(1.25));
}

TEST_CASE("naive discretisation error is at most one mesh step") {
    std::mt19937 rng(99);
    for (int k = 0; k < 60; ++k) {
        auto p = random_grid_path(rng);
        for (int N : {3, 4, 6}) {
            auto f = naive_discretise(p, N);
            CHECK(step_sup_distance(f, p) <= std::ldexp(1.0, -N) + 1e-10);
        }
    }
}

TEST_CASE("grid projection") {
    CHECK(grid_project(0.30, 2) == 0.5);
    CHECK(grid_project(1.0, 2) == 1.0);
    CHECK(grid_project(0.0, 3) == 0.0);
}

TEST_CASE("full discretisation of a constant path") {
    auto hat = dyadic_discretise(constant_path(1.0, 2), InfoSpace(2, {1.0}), 5);
    CHECK(hat.segments() == 1);
    CHECK(hat.jump_times.empty());
    CHECK(hat.values[0][0] == Dyadic(BigInt(1), 0));
    CHECK(hat.values[0][1] == Dyadic(BigInt(1), 0));
    CHECK(step_sup_distance(hat.to_step_fn(), constant_path(1.0, 2)) == 0.0);
}

TEST_CASE("full discretisation of a ramp") {
    const int N = 5;
    auto p = ramp(1.0, 1.375);
    auto stages = staged_dyadic_discretise(p, kInfo1, N);
    const auto& hat = stages.result;

    // one jump per partition step
    CHECK(hat.segments() == stages.partition.step_count());

    // shifted jump times are rationals in (tau_{k-1}, tau_k]
    for (std::size_t k = 0; k < hat.jump_times.size(); ++k) {
        double t = to_double(hat.jump_times[k]);
        CHECK(t > stages.partition.taus[k]);
        CHECK(t <= stages.partition.taus[k + 1] + 1e-15);
    }

    // class membership and the headline error bound
    CHECK(check_class_membership(hat, kInfo1, N).ok);
    CHECK(step_sup_distance(hat.to_step_fn(), p) < std::ldexp(1.0, -N + 3));
    CHECK(step_sup_distance(hat.to_step_fn(), p) < 0.25);  // 2^-2 for N=5
}

TEST_CASE("error chain holds term by term") {
    std::mt19937 rng(2718);
    for (int k = 0; k < 40; ++k) {
        auto p = random_grid_path(rng);
        for (int N : {4, 5, 6}) {
            auto st = staged_dyadic_discretise(p, kInfo1, N);
            double h = std::ldexp(1.0, -N);
            CHECK(step_sup_distance(st.naive, p) <= h + 1e-10);
            CHECK(step_sup_distance(st.staged, st.naive) <= 2.0 * h + 1e-10);
            CHECK(step_sup_distance(st.result.to_step_fn(), st.staged) <= 4.0 * h + 1e-10);
            CHECK(step_sup_distance(st.result.to_step_fn(), p) < 8.0 * h);
        }
    }
}

TEST_CASE("membership diagnostics") {
    const int N = 5;

    // increment 3/2^(N+1) at the first jump is twice the stage-1 grid and too large
    PiecewiseConstantPath f;
    f.N = N;
    f.horizon = 1.0;
    f.jump_times = {BigRational(1, 2)};
    f.values = {{Dyadic(BigInt(1), 0)}, {Dyadic(BigInt(1), 0) + Dyadic(BigInt(3), N + 1)}};
    f.terminal = f.values.back();
    auto chk = check_class_membership(f, kInfo1, N);
    CHECK_FALSE(chk.ok);
    CHECK(chk.violated_condition == 3);

    // one oversized jump straight to the floor trips the size condition first
    PiecewiseConstantPath g;
    g.N = N;
    g.horizon = 1.0;
    g.jump_times = {BigRational(1, 4), BigRational(1, 2)};
    Dyadic one(BigInt(1), 0);
    Dyadic floorv(BigInt(-1), N - 3);
    g.values = {{one}, {floorv}, {one}};
    g.terminal = g.values.back();
    auto chk2 = check_class_membership(g, kInfo1, N);
    CHECK_FALSE(chk2.ok);
    CHECK(chk2.violated_condition == 3);

    // descend to the floor with legal jumps (drop 2^-N per jump), then move:
    // a pure condition-6 witness
    const int n_drops = (1 << N) + (1 << 3);  // 1 + 2^(-N+3) in units of 2^-N
    PiecewiseConstantPath h;
    h.N = N;
    h.horizon = 1.0;
    h.values = {{one}};
    for (int k = 1; k <= n_drops; ++k) {
        h.jump_times.emplace_back(k, 2 * n_drops);
        // drop of exactly 2^-N: j = -2^(k+1) on the stage-k grid
        h.values.push_back({h.values.back()[0] - Dyadic(BigInt(1), N)});
    }
    REQUIRE(h.values.back()[0] == floorv);
    h.jump_times.emplace_back(3, 4);
    h.values.push_back({floorv + Dyadic(BigInt(1), N + n_drops + 2)});
    h.terminal = h.values.back();
    auto chk3 = check_class_membership(h, kInfo1, N);
    CHECK_FALSE(chk3.ok);
    CHECK(chk3.violated_condition == 6);
    // the absorbed variant is a member
    PiecewiseConstantPath habs = h;
    habs.jump_times.pop_back();
    habs.values.pop_back();
    habs.terminal = habs.values.back();
    CHECK(check_class_membership(habs, kInfo1, N).ok);
}

TEST_CASE("pipeline outputs are members") {
    std::mt19937 rng(11);
    for (int k = 0; k < 30; ++k) {
        auto p = random_grid_path(rng);
        auto hat = dyadic_discretise(p, kInfo1, 5);
        CHECK(check_class_membership(hat, kInfo1, 5).ok);
    }
}

TEST_CASE("continuous lift") {
    const int N = 5;
    auto cpath = dyadic_discretise(constant_path(1.0, 1), kInfo1, N);
    auto lifted = lift_continuous(cpath, kInfo1);
    CHECK(sup_norm_distance(lifted, constant_path(1.0, 1)) == 0.0);

    std::mt19937 rng(5150);
    for (int k = 0; k < 30; ++k) {
        auto p = random_grid_path(rng);
        auto hat = dyadic_discretise(p, kInfo1, N);
        auto lift = lift_continuous(hat, kInfo1);
        CHECK(step_sup_distance(hat.to_step_fn(), lift) <= std::ldexp(1.0, -N + 1) + 1e-10);
        // round trip: clamped lift of the discretisation stays near the path
        auto clamped = clamp_nonnegative(lift);
        CHECK(sup_norm_distance(clamped, p) <=
              std::ldexp(1.0, -N + 1) + std::ldexp(1.0, -N + 3) + 1e-10);
    }

    PiecewiseConstantPath bad;
    bad.N = N;
    bad.horizon = 1.0;
    bad.values = {{Dyadic(BigInt(3), 1)}};
    bad.terminal = bad.values.back();
    CHECK_THROWS_AS(lift_continuous(bad, kInfo1), std::domain_error);
}

TEST_CASE("payoff extension on members") {
    const int N = 5;
    auto hat = dyadic_discretise(ramp(1.0, 1.25), kInfo1, N);
    InfoSpace info = kInfo1;
    double terminal = extend_payoff(Payoff::terminal_value(0, info), hat, info);
    CHECK(terminal == Catch::Approx(1.25).margin(std::ldexp(1.0, -N + 1) + 1e-12));

    auto c = dyadic_discretise(constant_path(1.0, 1), kInfo1, N);
    CHECK(extend_payoff(Payoff::lookback_max(0), c, info) == 1.0);

    // uniformly continuous payoffs inherit the round-trip bound via modulus
    std::mt19937 rng(31);
    for (int k = 0; k < 20; ++k) {
        auto p = random_grid_path(rng);
        auto f = dyadic_discretise(p, kInfo1, N);
        auto g = Payoff::lookback_max(0);
        double err = std::abs(extend_payoff(g, f, info) - g(p));
        CHECK(err <= std::ldexp(1.0, -N + 1) + std::ldexp(1.0, -N + 3) + 1e-10);
    }
}

TEST_CASE("step counts on lifts") {
    const int N = 6;
    auto c = dyadic_discretise(constant_path(1.0, 1), kInfo1, N);
    CHECK(count_steps_on_lift(c, 3, kInfo1) == 1);

    auto r = dyadic_discretise(ramp(1.0, 1.375), kInfo1, 8);
    CHECK(count_steps_on_lift(r, 3, kInfo1) == 3);
}

TEST_CASE("step counts refine monotonically in the mesh") {
    std::mt19937 rng(4242);
    for (int k = 0; k < 40; ++k) {
        auto p = random_grid_path(rng);
        for (int N : {3, 4, 5, 6, 7}) {
            CHECK(lebesgue_partition(p, N - 2).step_count() <=
                  lebesgue_partition(p, N).step_count());
        }
    }
}

TEST_CASE("step-count stability under perturbation") {
    std::mt19937 rng(8675309);
    for (int k = 0; k < 40; ++k) {
        auto p = random_grid_path(rng);
        for (int N : {5, 6, 7}) {
            // perturb within 2^-N
            double h = std::ldexp(1.0, -N);
            GridPath q = p;
            std::uniform_real_distribution<double> u(-0.49 * h, 0.49 * h);
            for (std::size_t j = 1; j < q.values.size(); ++j)
                for (double& x : q.values[j]) x = std::max(0.0, x + u(rng));
            REQUIRE(sup_norm_distance(p, q) < h);
            CHECK(lebesgue_partition(p, N - 2).step_count() <=
                  lebesgue_partition(q, N).step_count());
        }
    }
}

TEST_CASE("lift step counts are dominated for deep meshes") {
    std::mt19937 rng(1234);
    for (int k = 0; k < 20; ++k) {
        auto p = random_grid_path(rng);
        int D = 5;
        int N = D + 4;
        auto hat = dyadic_discretise(p, kInfo1, N);
        CHECK(count_steps_on_lift(hat, D - 2, kInfo1) <= lebesgue_partition(p, D).step_count());
    }
}

TEST_CASE("time continuity check") {
    InfoSpace info(1, {1.0});
    auto g = Payoff::asian_continuous(0, 1.0);

    PiecewiseConstantPath base;
    base.N = 5;
    base.horizon = 1.0;
    base.jump_times = {BigRational(1, 4), BigRational(1, 2)};
    Dyadic one(BigInt(1), 0);
    base.values = {{one}, {one + Dyadic(BigInt(1), 6)}, {one + Dyadic(BigInt(1), 5)}};
    base.terminal = base.values.back();

    PiecewiseConstantPath shifted = base;
    shifted.jump_times = {BigRational(1, 4), BigRational(3, 5)};  // interior shift only

    CHECK(check_time_continuity(g, base, base, info));
    CHECK(check_time_continuity(g, base, shifted, info));

    // payoffs of terminal type see no difference at all
    auto eu = Payoff::terminal_value(0, info).with_time_continuity(1.0, 1.0);
    CHECK(check_time_continuity(eu, base, shifted, info));

    // structural mismatch is rejected
    PiecewiseConstantPath other = base;
    other.values.back() = {one};
    other.terminal = other.values.back();
    CHECK_THROWS_AS(check_time_continuity(g, base, other, info), std::domain_error);
}
