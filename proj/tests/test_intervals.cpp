#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ikrige/interval.hpp"

using namespace ikrige;
using Catch::Approx;

TEST_CASE("interval construction and center/radius views") {
    const Interval a(0.0, 2.0);
    CHECK(a.center() == 1.0);
    CHECK(a.radius() == 1.0);

    const Interval b(7.0, 7.0);
    CHECK(b.center() == 7.0);
    CHECK(b.radius() == 0.0);
    CHECK(b.degenerate());

    const Interval c = Interval::from_center_radius(4.0, 1.0);
    CHECK(c.lower() == 3.0);
    CHECK(c.upper() == 5.0);

    CHECK_THROWS_AS(Interval(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval(0.0, std::numeric_limits<double>::infinity()), std::invalid_argument);
    CHECK_THROWS_AS(Interval(std::nan(""), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval::from_center_radius(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("interval round trip is stable") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_real_distribution<double> w(0.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double lo = u(rng);
        const Interval v(lo, lo + w(rng));
        const Interval round = Interval::from_center_radius(v.center(), v.radius());
        CHECK(round.lower() == Approx(v.lower()).margin(1e-12));
        CHECK(round.upper() == Approx(v.upper()).margin(1e-12));
    }
}

TEST_CASE("kernel_to_a") {
    SECTION("half identity kernel gives the identity weighting") {
        const AMatrix a = kernel_to_a(Kernel2::diagonal(0.5, 0.5));
        CHECK(a.a11() == Approx(1.0));
        CHECK(a.a22() == Approx(1.0));
        CHECK(a.a12() == Approx(0.0));
    }
    SECTION("diagonal a with off-diagonal b") {
        const AMatrix a = kernel_to_a(Kernel2(0.7, 0.7, 0.2, 0.2));
        CHECK(a.a11() == Approx(2 * 0.7 - 2 * 0.2));
        CHECK(a.a22() == Approx(2 * 0.7 + 2 * 0.2));
        CHECK(a.a12() == Approx(0.0));
    }
    SECTION("unequal diagonal") {
        const AMatrix a = kernel_to_a(Kernel2::diagonal(1.0, 0.5));
        CHECK(a.a11() == Approx(1.5));
        CHECK(a.a22() == Approx(1.5));
        CHECK(a.a12() == Approx(0.5));
    }
    SECTION("invalid kernels are rejected") {
        CHECK_THROWS_AS(Kernel2(1.0, 1.0, 0.5, -0.5), std::invalid_argument);   // asymmetric
        CHECK_THROWS_AS(Kernel2(1.0, 0.1, 0.9, 0.9), std::invalid_argument);    // indefinite
        CHECK_THROWS_AS(AMatrix(1.0, 1.0, 1.5), std::invalid_argument);
    }
    SECTION("PSD kernels map to PSD weightings") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 500; ++i) {
            // B^T B is PSD by construction.
            const double b11 = u(rng), b12 = u(rng), b21 = u(rng), b22 = u(rng);
            const double kpp = b11 * b11 + b21 * b21;
            const double kmm = b12 * b12 + b22 * b22;
            const double kpm = b11 * b12 + b21 * b22;
            const AMatrix a = kernel_to_a(Kernel2(kpp, kmm, kpm, kpm));
            CHECK(a.a11() >= -1e-12);
            CHECK(a.a22() >= -1e-12);
            CHECK(a.a11() * a.a22() - a.a12() * a.a12() >= -1e-10);
        }
    }
}

TEST_CASE("rho2_sq examples and forms") {
    const Interval x(0.0, 2.0);
    CHECK(rho2_sq(x, x) == 0.0);
    CHECK(rho2_sq(x, Interval(1.0, 3.0)) == Approx(1.0));
    CHECK(rho2_sq(x, Interval(1.0, 1.0)) == Approx(1.0));

    // Lower/upper and center/radius forms agree.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_real_distribution<double> w(0.0, 5.0);
    for (int i = 0; i < 2000; ++i) {
        const double alo = u(rng);
        const double blo = u(rng);
        const Interval a(alo, alo + w(rng));
        const Interval b(blo, blo + w(rng));
        const double dc = a.center() - b.center();
        const double dr = a.radius() - b.radius();
        CHECK(rho2_sq(a, b) == Approx(dc * dc + dr * dr).margin(1e-12));
    }
}

TEST_CASE("rho_k_sq") {
    const Interval x(0.0, 2.0);
    CHECK(rho_k_sq(x, Interval(1.0, 3.0), AMatrix::identity()) == Approx(1.0));
    CHECK(rho_k_sq(x, Interval(1.0, 1.0), AMatrix(1.0, 1.0, 0.5)) == Approx(1.0));
    CHECK(rho_k_sq(x, x, AMatrix(2.0, 3.0, 1.0)) == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_real_distribution<double> w(0.0, 5.0);
    const AMatrix a(2.0, 1.0, 0.9);
    for (int i = 0; i < 2000; ++i) {
        const double alo = u(rng);
        const double blo = u(rng);
        const Interval p(alo, alo + w(rng));
        const Interval q(blo, blo + w(rng));
        const double pq = rho_k_sq(p, q, a);
        CHECK(pq >= 0.0);                            // PSD weighting
        CHECK(pq == Approx(rho_k_sq(q, p, a)));      // symmetry
    }
}

TEST_CASE("weighted_combine") {
    const Interval s1(3.0, 5.0);
    const double one = 1.0;
    CHECK(weighted_combine(std::span(&one, 1), std::span(&s1, 1)) == s1);

    const std::vector<Interval> samples = {Interval(0.0, 2.0), Interval(2.0, 4.0)};
    const std::vector<double> w_half = {0.5, 0.5};
    const Interval mid = weighted_combine(w_half, samples);
    CHECK(mid.lower() == Approx(1.0));
    CHECK(mid.upper() == Approx(3.0));

    const std::vector<double> w_signed = {-0.5, 1.5};
    const Interval ext = weighted_combine(w_signed, samples);
    CHECK(ext.center() == Approx(4.0));
    CHECK(ext.radius() == Approx(2.0));
    CHECK(ext.lower() == Approx(2.0));
    CHECK(ext.upper() == Approx(6.0));

    const std::vector<double> bad = {1.0};
    CHECK_THROWS_AS(weighted_combine(bad, samples), std::invalid_argument);
    CHECK_THROWS_AS(weighted_combine(std::span<const double>{}, std::span<const Interval>{}),
                    std::invalid_argument);

    // Radius stays nonnegative under arbitrary signed weights.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> wts(4);
        for (auto& v : wts) v = u(rng);
        std::vector<Interval> ivs;
        for (int j = 0; j < 4; ++j) {
            const double lo = u(rng);
            ivs.emplace_back(lo, lo + std::abs(u(rng)));
        }
        CHECK(weighted_combine(wts, ivs).radius() >= 0.0);
    }
}

TEST_CASE("half identity kernel collapses the kernel metric to rho2") {
    const AMatrix a = kernel_to_a(Kernel2::diagonal(0.5, 0.5));
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_real_distribution<double> w(0.0, 5.0);
    for (int i = 0; i < 2000; ++i) {
        const double alo = u(rng);
        const double blo = u(rng);
        const Interval p(alo, alo + w(rng));
        const Interval q(blo, blo + w(rng));
        CHECK(std::abs(rho_k_sq(p, q, a) - rho2_sq(p, q)) <= 1e-12);
    }
}
