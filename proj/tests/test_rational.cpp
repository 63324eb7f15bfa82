#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mot/rational.hpp"

using namespace mot;

namespace {

// Independent oracle: ascending enumeration over p+q, smallest p first.
BigRational min_sum_oracle(const BigRational& a, const BigRational& b) {
    for (long s = 2; s < 100000; ++s) {
        for (long p = 1; p < s; ++p) {
            BigRational r(p, s - p);
            if (r > a && r <= b) return r;
        }
    }
    throw std::runtime_error("oracle exhausted");
}

}  // namespace

TEST_CASE("double to rational round trip is exact") {
    for (double x : {0.0, 1.0, 0.1, -2.75, 1.0 / 3.0, 1e-9, 123456.789}) {
        CHECK(to_double(rational_from_double(x)) == x);
    }
}

TEST_CASE("rational string round trip") {
    BigRational r(7, 12);
    CHECK(to_string(r) == "7/12");
    CHECK(rational_from_string("7/12") == r);
    CHECK(rational_from_string("3") == BigRational(3));
}

TEST_CASE("dyadic arithmetic") {
    Dyadic a(BigInt(3), 2);   // 0.75
    Dyadic b(BigInt(1), 1);   // 0.5
    CHECK((a + b).to_double() == 1.25);
    CHECK((a - b).to_double() == 0.25);
    CHECK(a > b);
    Dyadic c = a - a;
    c.normalize();
    CHECK(c.num == 0);
}

TEST_CASE("dyadic ceiling projection") {
    CHECK(dyadic_ceil(0.30, 2).to_double() == 0.5);   // ceil(1.2)/4
    CHECK(dyadic_ceil(1.0, 2).to_double() == 1.0);    // grid point fixed
    CHECK(dyadic_ceil(0.0, 3).to_double() == 0.0);
    // stays within one grid step above
    for (double x : {0.123, 0.9999, 1.7321}) {
        for (int N : {1, 3, 8, 20}) {
            double px = dyadic_ceil(x, N).to_double();
            CHECK(px >= x);
            CHECK(px - x < std::ldexp(1.0, -N) + 1e-15);
        }
    }
}

TEST_CASE("minimal-sum rational: pinned examples") {
    CHECK(min_sum_rational_in(0.0, 0.5) == BigRational(1, 2));
    CHECK(min_sum_rational_in(0.3, 1.2) == BigRational(1, 1));
    CHECK(min_sum_rational_in(0.7, 0.9) == BigRational(3, 4));
}

TEST_CASE("minimal-sum rational equals enumeration oracle") {
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int k = 0; k < 300; ++k) {
        double a = u(rng);
        double w = std::uniform_real_distribution<double>(1e-4, 1.0)(rng);
        BigRational ra = rational_from_double(a), rb = rational_from_double(a + w);
        CHECK(min_sum_rational_in(ra, rb) == min_sum_oracle(ra, rb));
    }
}

TEST_CASE("minimal-sum rational rejects bad intervals") {
    CHECK_THROWS_AS(min_sum_rational_in(0.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(min_sum_rational_in(0.6, 0.5), std::domain_error);
    CHECK_THROWS_AS(min_sum_rational_in(BigRational(-2), BigRational(-1)), std::domain_error);
}

TEST_CASE("minimal-sum rational lands in the interval") {
    std::mt19937 rng(7);
    for (int k = 0; k < 200; ++k) {
        double a = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        double w = std::uniform_real_distribution<double>(1e-7, 2.0)(rng);
        BigRational r = min_sum_rational_in(a, a + w);
        CHECK(r > rational_from_double(a));
        CHECK(r <= rational_from_double(a + w));
    }
}
