#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "ikrige/variogram.hpp"

using namespace ikrige;
using Catch::Approx;

namespace {

IntervalSample at(double x, double y, double center, double radius) {
    return {{x, y, 0.0}, Interval::from_center_radius(center, radius)};
}

}  // namespace

TEST_CASE("empirical variogram hand cases") {
    SECTION("two samples, one bin") {
        const std::vector<IntervalSample> s = {at(0, 0, 0, 1), at(1, 0, 2, 1)};
        const std::vector<double> edges = {0.0, 2.0};
        const auto emp = empirical_variograms(s, edges);
        REQUIRE(emp.size() == 1);
        CHECK(emp.pair_counts[0] == 1);
        CHECK(emp.gamma_c[0] == Approx(2.0));  // (1/2)(2)^2
        CHECK(emp.gamma_r[0] == Approx(0.0));
        CHECK(emp.gamma_cr[0] == Approx(0.0));
        CHECK(emp.bin_centers[0] == Approx(1.0));
    }
    SECTION("identical values give zero gammas") {
        const std::vector<IntervalSample> s = {at(0, 0, 3, 1), at(1, 0, 3, 1), at(0, 1, 3, 1)};
        const auto emp = empirical_variograms(s, std::vector<double>{0.0, 2.0});
        CHECK(emp.gamma_c[0] == 0.0);
        CHECK(emp.gamma_r[0] == 0.0);
        CHECK(emp.gamma_cr[0] == 0.0);
    }
    SECTION("three collinear equidistant samples, unit lag bin") {
        const std::vector<IntervalSample> s = {at(0, 0, 0, 0), at(1, 0, 1, 0), at(2, 0, 2, 0)};
        const std::vector<double> edges = {0.5, 1.5};
        const auto emp = empirical_variograms(s, edges);
        CHECK(emp.pair_counts[0] == 2);
        CHECK(emp.gamma_c[0] == Approx(0.5));  // (1/(2*2)) (1 + 1)
    }
    SECTION("empty bins are reported, not dropped") {
        const std::vector<IntervalSample> s = {at(0, 0, 0, 0), at(1, 0, 1, 0)};
        const std::vector<double> edges = {0.0, 0.5, 1.5};
        const auto emp = empirical_variograms(s, edges);
        CHECK(emp.pair_counts[0] == 0);
        CHECK(std::isnan(emp.gamma_c[0]));
        CHECK(emp.bin_centers[0] == Approx(0.25));
        CHECK(emp.pair_counts[1] == 1);
    }
    SECTION("input validation") {
        const std::vector<IntervalSample> one = {at(0, 0, 0, 0)};
        CHECK_THROWS_AS(empirical_variograms(one, std::vector<double>{0.0, 1.0}),
                        std::invalid_argument);
        const std::vector<IntervalSample> two = {at(0, 0, 0, 0), at(1, 0, 1, 0)};
        CHECK_THROWS_AS(empirical_variograms(two, std::vector<double>{1.0, 0.5}),
                        std::invalid_argument);
    }
}

TEST_CASE("empirical variogram is permutation invariant") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<IntervalSample> s;
    for (int i = 0; i < 40; ++i) s.push_back(at(u(rng), u(rng), u(rng), 0.3 * u(rng)));
    const auto edges = make_bin_edges(8.0, 6);
    const auto a = empirical_variograms(s, edges);
    std::shuffle(s.begin(), s.end(), rng);
    const auto b = empirical_variograms(s, edges);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.pair_counts[k] == b.pair_counts[k]);
        if (a.pair_counts[k] == 0) continue;
        CHECK(a.gamma_c[k] == Approx(b.gamma_c[k]).epsilon(1e-12));
        CHECK(a.gamma_r[k] == Approx(b.gamma_r[k]).epsilon(1e-12));
        CHECK(a.gamma_cr[k] == Approx(b.gamma_cr[k]).margin(1e-12));
    }
}

TEST_CASE("cross variogram is linear in an affine radius relation") {
    // radius = 2 * center + 1 everywhere; increments satisfy dR = 2 dC, so
    // gamma_cr = 2 gamma_c and gamma_r = 4 gamma_c.
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<IntervalSample> s;
    for (int i = 0; i < 30; ++i) {
        const double c = u(rng);
        s.push_back(at(u(rng), u(rng), c, 2.0 * c + 1.0));
    }
    const auto emp = empirical_variograms(s, make_bin_edges(8.0, 5));
    for (std::size_t k = 0; k < emp.size(); ++k) {
        if (emp.pair_counts[k] == 0) continue;
        CHECK(emp.gamma_cr[k] == Approx(2.0 * emp.gamma_c[k]).epsilon(1e-10));
        CHECK(emp.gamma_r[k] == Approx(4.0 * emp.gamma_c[k]).epsilon(1e-10));
    }
}

TEST_CASE("model evaluation") {
    const VariogramModel center{VariogramFamily::spherical, 0.08, 0.2, 194.0};
    CHECK(eval_model(center, 0.0) == 0.0);
    CHECK(eval_model(center, 194.0) == Approx(0.28));
    CHECK(eval_model(center, 500.0) == Approx(0.28));
    CHECK(eval_model(center, 97.0) == Approx(0.2175));
    CHECK_THROWS_AS(eval_model(center, -1.0), std::invalid_argument);

    const VariogramModel expo{VariogramFamily::exponential, 0.1, 1.0, 5.0};
    CHECK(eval_model(expo, 0.0) == 0.0);
    CHECK(eval_model(expo, 5.0) == Approx(0.1 + 1.0 - std::exp(-1.0)));

    const VariogramModel nug{VariogramFamily::nugget_only, 0.3, 0.0, 1.0};
    CHECK(eval_model(nug, 0.0) == 0.0);
    CHECK(eval_model(nug, 0.001) == Approx(0.3));

    SECTION("monotone in lag") {
        for (const auto& m : {center, expo}) {
            double prev = 0.0;
            for (int i = 1; i <= 300; ++i) {
                const double g = eval_model(m, i * 2.0);
                CHECK(g >= prev - 1e-15);
                prev = g;
            }
        }
    }
}

TEST_CASE("covariance recovery") {
    const VariogramModel center{VariogramFamily::spherical, 0.08, 0.2, 194.0};
    CHECK(cov_from_variogram(center, 0.0) == Approx(0.28));
    CHECK(cov_from_variogram(center, 300.0) == Approx(0.0).margin(1e-15));
    CHECK(cov_from_variogram(center, 97.0) == Approx(0.0625));
    for (double h : {0.5, 3.0, 50.0, 100.0, 200.0, 400.0})
        CHECK(cov_from_variogram(center, h) + eval_model(center, h) == Approx(center.sill()).margin(1e-12));
}

TEST_CASE("wls fit recovers noise-free models") {
    const auto synth = [](const VariogramModel& truth, int nlags, double max_lag) {
        EmpiricalVariogram emp;
        for (int k = 1; k <= nlags; ++k) {
            const double h = max_lag * k / nlags;
            emp.bin_centers.push_back(h);
            emp.gamma_c.push_back(eval_model(truth, h));
            emp.gamma_r.push_back(eval_model(truth, h));
            emp.gamma_cr.push_back(0.0);
            emp.pair_counts.push_back(50);
        }
        return emp;
    };

    SECTION("spherical") {
        const VariogramModel truth{VariogramFamily::spherical, 0.08, 0.2, 194.0};
        const auto emp = synth(truth, 15, 300.0);
        const VariogramModel init{VariogramFamily::spherical, 0.02, 0.4, 120.0};
        const auto fit = fit_wls(emp, Channel::C, VariogramFamily::spherical, init);
        CHECK(fit.model.nugget == Approx(truth.nugget).epsilon(0.01));
        CHECK(fit.model.partial_sill == Approx(truth.partial_sill).epsilon(0.01));
        CHECK(fit.model.range == Approx(truth.range).epsilon(0.01));
        CHECK(fit.converged);
    }
    SECTION("exponential") {
        const VariogramModel truth{VariogramFamily::exponential, 0.0, 1.0, 5.0};
        const auto emp = synth(truth, 20, 25.0);
        const VariogramModel init{VariogramFamily::exponential, 0.1, 0.5, 2.0};
        const auto fit = fit_wls(emp, Channel::C, VariogramFamily::exponential, init);
        CHECK(fit.model.nugget == Approx(truth.nugget).margin(0.005));
        CHECK(fit.model.partial_sill == Approx(truth.partial_sill).epsilon(0.01));
        CHECK(fit.model.range == Approx(truth.range).epsilon(0.01));
    }
    SECTION("constant empirical variogram, nugget-only family") {
        EmpiricalVariogram emp;
        for (int k = 1; k <= 5; ++k) {
            emp.bin_centers.push_back(k);
            emp.gamma_c.push_back(0.42);
            emp.gamma_r.push_back(0.42);
            emp.gamma_cr.push_back(0.0);
            emp.pair_counts.push_back(10);
        }
        const VariogramModel init{VariogramFamily::nugget_only, 0.1, 0.0, 1.0};
        const auto fit = fit_wls(emp, Channel::C, VariogramFamily::nugget_only, init);
        CHECK(fit.model.nugget == Approx(0.42).epsilon(1e-6));
        CHECK(fit.model.partial_sill == 0.0);
    }
    SECTION("too few bins") {
        EmpiricalVariogram emp;
        emp.bin_centers = {1.0, 2.0};
        emp.gamma_c = {0.1, 0.2};
        emp.gamma_r = emp.gamma_c;
        emp.gamma_cr = {0.0, 0.0};
        emp.pair_counts = {5, 5};
        CHECK_THROWS_AS(fit_wls(emp, Channel::C, VariogramFamily::spherical, VariogramModel{}),
                        std::invalid_argument);
    }
}

TEST_CASE("model descriptor round trip") {
    const VariogramModel m{VariogramFamily::spherical, 0.08, 0.2, 194.0};
    const auto parsed = parse_model(describe_model(m));
    CHECK(parsed.family == m.family);
    CHECK(parsed.nugget == Approx(m.nugget));
    CHECK(parsed.partial_sill == Approx(m.partial_sill));
    CHECK(parsed.range == Approx(m.range));
    CHECK_THROWS_AS(parse_model("spherical 0.1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model("frobnicate 0 1 2"), std::invalid_argument);
}
