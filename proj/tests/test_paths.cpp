#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mot/paths.hpp"

using namespace mot;

namespace {
GridPath ramp(double from, double to, double T = 1.0) {
    return GridPath({0.0, T}, {{from}, {to}});
}
}  // namespace

TEST_CASE("grid path validation") {
    CHECK_THROWS(GridPath({0.0, 1.0}, {{0.5}, {1.0}}));        // must start at 1
    CHECK_THROWS(GridPath({0.1, 1.0}, {{1.0}, {1.0}}));        // first time 0
    CHECK_THROWS(GridPath({0.0, 0.0}, {{1.0}, {1.0}}));        // increasing times
    CHECK_THROWS(GridPath({0.0, 1.0}, {{1.0}, {-0.1}}));       // nonnegative
    CHECK_NOTHROW(GridPath({0.0, 1.0}, {{1.0, 1.0}, {0.0, 2.0}}));
}

TEST_CASE("interpolation and sup norm") {
    GridPath p({0.0, 0.5, 1.0}, {{1.0}, {1.4}, {0.8}});
    CHECK(p.at(0.25)[0] == Catch::Approx(1.2));
    CHECK(p.at(0.75)[0] == Catch::Approx(1.1));
    CHECK(p.sup_norm() == Catch::Approx(1.4));
}

TEST_CASE("sup norm distance") {
    GridPath a = constant_path(1.0, 1);
    CHECK(sup_norm_distance(a, a) == 0.0);
    CHECK(sup_norm_distance(a, ramp(1.0, 1.5)) == Catch::Approx(0.5));
    CHECK(sup_norm_distance(ramp(1.0, 2.0), ramp(1.0, 0.0)) == Catch::Approx(2.0));
    // attained at an interior merged grid point
    GridPath b({0.0, 0.5, 1.0}, {{1.0}, {2.0}, {1.0}});
    CHECK(sup_norm_distance(a, b) == Catch::Approx(1.0));
    GridPath c({0.0, 2.0}, {{1.0}, {1.0}});
    CHECK_THROWS_AS(sup_norm_distance(a, c), std::domain_error);
}

TEST_CASE("information space membership") {
    InfoSpace plain(1, {1.0});
    CHECK(in_info_space(ramp(1.0, 1.7), plain));  // K = 0: vacuous

    InfoSpace info(1, {1.0});
    info.add_option({[](const std::vector<double>& s) { return std::min(s[0], 2.0); }, 1.0, 2.0});
    GridPath ok({0.0, 1.0}, {{1.0, 1.0}, {1.5, 1.5}});
    CHECK(in_info_space(ok, info, 1e-9));
    GridPath bad({0.0, 1.0}, {{1.0, 1.0}, {1.5, 1.2}});
    CHECK_FALSE(in_info_space(bad, info, 1e-9));
    CHECK(info.kappa() == Catch::Approx(2.0));
}

TEST_CASE("distance to sup-norm ball via clamping") {
    InfoSpace info(1, {1.0});
    auto ball = PredictionSet::sup_norm_ball(1.5);
    GridPath peak({0.0, 0.5, 1.0}, {{1.0}, {1.8}, {1.0}});
    auto d = set_distance(ball, info, peak);
    CHECK(d.lower == Catch::Approx(0.3));
    CHECK(d.upper == Catch::Approx(0.3));
    auto capped = capped_set_distance(ball, info, peak);
    CHECK(capped.upper == Catch::Approx(0.3));

    auto inside = capped_set_distance(ball, info, constant_path(1.0, 1));
    CHECK(inside.upper == 0.0);

    auto far = capped_set_distance(PredictionSet::sup_norm_ball(1.0), info,
                                   GridPath({0.0, 1.0}, {{1.0}, {2.7}}));
    CHECK(far.lower == 1.0);  // capped
}

TEST_CASE("fattened-set membership") {
    InfoSpace info(1, {1.0});
    auto ball = PredictionSet::sup_norm_ball(1.5);
    GridPath peak({0.0, 0.5, 1.0}, {{1.0}, {1.8}, {1.0}});
    CHECK(in_fattened_set(ball, info, peak, 0.3));
    CHECK_FALSE(in_fattened_set(ball, info, peak, 0.29));
    CHECK(in_fattened_set(ball, info, constant_path(1.0, 1), 0.0));

    // fattening is monotone in eps
    for (double e1 : {0.0, 0.1, 0.31}) {
        for (double e2 : {0.0, 0.1, 0.31}) {
            if (e1 <= e2 && in_fattened_set(ball, info, peak, e1))
                CHECK(in_fattened_set(ball, info, peak, e2));
        }
    }

    // membership in the admissible space is required
    InfoSpace withopt(1, {1.0});
    withopt.add_option({[](const std::vector<double>& s) { return s[0]; }, 1.0, 5.0});
    GridPath off({0.0, 1.0}, {{1.0, 1.0}, {1.2, 0.7}});
    CHECK_FALSE(in_fattened_set(PredictionSet::all(), withopt, off, 100.0));
}

TEST_CASE("member iff distance zero") {
    InfoSpace info(1, {1.0});
    auto ball = PredictionSet::sup_norm_ball(1.5);
    GridPath inside({0.0, 0.4, 1.0}, {{1.0}, {1.5}, {0.9}});
    CHECK(set_distance(ball, info, inside).upper == 0.0);
    GridPath outside({0.0, 0.4, 1.0}, {{1.0}, {1.5001}, {0.9}});
    CHECK(set_distance(ball, info, outside).lower > 0.0);
}

TEST_CASE("custom set oracle contract") {
    InfoSpace info(1, {1.0});
    auto bad = PredictionSet::custom([](const GridPath&) { return false; },
                                     [](const GridPath&) { return DistanceBounds{0.5, 0.1}; });
    CHECK_THROWS_AS(set_distance(bad, info, constant_path(1.0, 1)), std::runtime_error);
}

TEST_CASE("time change") {
    InfoSpace info(1, {1.0});
    GridPath p({0.0, 0.5, 1.0}, {{1.0}, {1.4}, {0.8}});

    GridPath same = time_change(p, TimeChange::identity(1.0), info);
    CHECK(sup_norm_distance(p, same) == Catch::Approx(0.0));

    // compress all movement into [0, 1/2], then hold; range and terminal kept
    TimeChange squeeze({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0});
    GridPath q = time_change(p, squeeze, info);
    CHECK(q.at(1.0)[0] == Catch::Approx(p.at(1.0)[0]));
    CHECK(q.sup_norm() == Catch::Approx(p.sup_norm()));
    CHECK(q.at(0.25)[0] == Catch::Approx(p.at(0.5)[0]));

    // maturities must be fixed
    TimeChange off({0.0, 1.0}, {0.0, 0.9});
    CHECK_THROWS_AS(time_change(p, off, info), std::domain_error);
}

TEST_CASE("ball membership survives valid time changes") {
    InfoSpace info(1, {1.0});
    auto ball = PredictionSet::sup_norm_ball(1.45);
    GridPath p({0.0, 0.25, 1.0}, {{1.0}, {1.4}, {1.1}});
    std::mt19937 rng(99);
    for (int k = 0; k < 50; ++k) {
        // random monotone map fixing 0 and 1
        double mid_t = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
        double mid_s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        TimeChange f({0.0, mid_t, 1.0}, {0.0, mid_s, 1.0});
        GridPath q = time_change(p, f, info);
        double eps = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
        if (in_fattened_set(ball, info, p, eps)) CHECK(in_fattened_set(ball, info, q, eps));
    }
}

TEST_CASE("step function basics") {
    StepFn f;
    f.horizon = 1.0;
    f.times = {0.0, 0.5};
    f.values = {{1.0}, {1.125}};
    f.terminal = {1.25};
    CHECK(f.at(0.0)[0] == 1.0);
    CHECK(f.at(0.49)[0] == 1.0);
    CHECK(f.at(0.5)[0] == 1.125);
    CHECK(f.at(1.0)[0] == 1.25);

    GridPath r({0.0, 1.0}, {{1.0}, {1.25}});
    // |f - r| is largest just before the jump: |1 - 1.125| vs |1.125 - 1.25|
    CHECK(step_sup_distance(f, r) == Catch::Approx(0.125));
}
