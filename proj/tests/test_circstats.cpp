#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "circspline/circstats.hpp"
#include "oracle.hpp"

using namespace circspline;
using Catch::Approx;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("circular samples wrap angles into one period") {
    CircularSample s(std::vector<double>{-kPi / 2.0, 5.0 * kPi, 0.0});
    REQUIRE(s.angles()[0] == Approx(1.5 * kPi));
    REQUIRE(s.angles()[1] == Approx(kPi));
    REQUIRE(s.angles()[2] == 0.0);

    CircularSample deg = CircularSample::from_degrees({360.0, 90.0});
    REQUIRE(deg.angles()[0] == Approx(0.0).margin(1e-15));
    REQUIRE(deg.angles()[1] == Approx(kPi / 2.0));

    REQUIRE_THROWS_AS(CircularSample(std::vector<double>{}), input_error);
    REQUIRE_THROWS_AS(CircularSample(std::vector<double>{std::nan("")}), input_error);
}

TEST_CASE("two points a quarter turn apart average to the bisector") {
    CircularSample s(std::vector<double>{0.0, kPi / 2.0});
    TrigMoment m = trig_moment(s, 1);
    REQUIRE(m.direction.has_value());
    REQUIRE(*m.direction == Approx(kPi / 4.0).margin(1e-14));
    REQUIRE(m.resultant_length == Approx(std::sqrt(2.0) / 2.0).margin(1e-14));
    REQUIRE(m.cos_part == Approx(0.5));
    REQUIRE(m.sin_part == Approx(0.5));
}

TEST_CASE("moment components satisfy the polar identities") {
    Rng rng(321);
    std::vector<double> angles(50);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
    CircularSample s(angles);
    for (int p = 1; p <= 3; ++p) {
        TrigMoment m = trig_moment(s, p);
        REQUIRE(m.cos_part == Approx(m.resultant_length * std::cos(*m.direction)).margin(1e-12));
        REQUIRE(m.sin_part == Approx(m.resultant_length * std::sin(*m.direction)).margin(1e-12));
        REQUIRE(m.resultant_length >= 0.0);
        REQUIRE(m.resultant_length <= 1.0);
    }
}

TEST_CASE("mean direction is rotation equivariant") {
    Rng rng(654);
    std::vector<double> angles(40);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
    CircularSample base(angles);
    const double theta0 = *mean_direction(base);
    const double r0 = mean_resultant_length(base);
    for (double delta : {0.3, 1.7, 4.4}) {
        std::vector<double> shifted = angles;
        for (double& a : shifted) a += delta;
        CircularSample s(shifted);
        const double expect = detail::wrap_angle(theta0 + delta);
        REQUIRE(*mean_direction(s) == Approx(expect).margin(1e-12));
        REQUIRE(mean_resultant_length(s) == Approx(r0).margin(1e-12));
    }
}

TEST_CASE("antipodal pair has no direction and infinite spread") {
    CircularSample s(std::vector<double>{0.0, kPi});
    TrigMoment m = trig_moment(s, 1);
    REQUIRE(m.resultant_length == 0.0);
    REQUIRE_FALSE(m.direction.has_value());
    REQUIRE(circular_variance(s) == 1.0);
    REQUIRE(std::isinf(circular_sd(s)));
    REQUIRE(mean_angular_deviation(s) == Approx(std::sqrt(2.0)));
}

TEST_CASE("degenerate single-point sample is maximally concentrated") {
    CircularSample s(std::vector<double>{1.234});
    REQUIRE(mean_resultant_length(s) == Approx(1.0).margin(1e-15));
    REQUIRE(*mean_direction(s) == Approx(1.234));
    REQUIRE(circular_variance(s) == Approx(0.0).margin(1e-15));
    REQUIRE(circular_sd(s) == Approx(0.0).margin(1e-7));
}

TEST_CASE("p-th moment equals first moment of scaled angles") {
    Rng rng(987);
    std::vector<double> angles(30);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
    CircularSample s(angles);
    for (int p = 2; p <= 4; ++p) {
        std::vector<double> scaled = angles;
        for (double& a : scaled) a *= p;
        TrigMoment direct = trig_moment(s, p);
        TrigMoment via_scale = trig_moment(CircularSample(scaled), 1);
        REQUIRE(direct.cos_part == Approx(via_scale.cos_part).margin(1e-12));
        REQUIRE(direct.sin_part == Approx(via_scale.sin_part).margin(1e-12));
    }
}

TEST_CASE("bessel I0 and I1 match the standard library implementation") {
    for (double x : {0.0, 0.1, 0.9, 2.5, 7.0, 14.9, 15.0, 15.1, 40.0, 120.0, 500.0}) {
        const double ref0 = std::cyl_bessel_i(0.0, x);
        const double ref1 = std::cyl_bessel_i(1.0, x);
        if (std::isfinite(ref0))
            REQUIRE(bessel_i0(x) == Approx(ref0).epsilon(1e-11));
        if (std::isfinite(ref1))
            REQUIRE(bessel_i1(x) == Approx(ref1).epsilon(1e-11));
        // Scaled forms stay finite far beyond the overflow point of exp.
        REQUIRE(std::isfinite(detail::bessel_i0_scaled(x)));
    }
    REQUIRE(bessel_i0(0.0) == 1.0);
    REQUIRE(bessel_i1(0.0) == 0.0);
    REQUIRE(std::isfinite(detail::bessel_i0_scaled(5000.0)));
}

TEST_CASE("von Mises density integrates to one and peaks at the centre") {
    const double mu = 2.1;
    for (double kappa : {0.5, 2.0, 8.0}) {
        auto f = [&](double x) { return von_mises_pdf(x, mu, kappa); };
        REQUIRE(oracle::simpson(f, 0.0, 2.0 * kPi, 8001) == Approx(1.0).margin(1e-10));
        REQUIRE(f(mu) >= f(mu + 0.3));
        REQUIRE(f(mu - 0.4) == Approx(f(mu + 0.4)).margin(1e-14));
    }
    // kappa = 0 is the uniform density.
    REQUIRE(von_mises_pdf(1.0, 0.0, 0.0) == Approx(1.0 / (2.0 * kPi)));
    // Large concentration must not overflow.
    REQUIRE(std::isfinite(von_mises_pdf(0.0, 0.0, 1000.0)));
    REQUIRE(von_mises_pdf(0.0, 0.0, 1000.0) > 1.0);
    REQUIRE_THROWS_AS(von_mises_pdf(0.0, 0.0, -1.0), input_error);
}

TEST_CASE("kernel density estimate is a proper mixture") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 720);
    CircularSample one(std::vector<double>{1.0});
    DensityCurve kde1 = von_mises_kde(one, 5.0, grid);
    for (int i = 0; i < grid.size(); i += 37)
        REQUIRE(kde1.values()(i) ==
                Approx(von_mises_pdf(grid.points()[static_cast<std::size_t>(i)], 1.0, 5.0)));

    CircularSample s = von_mises_sample(42, 4.0, 6.0, 200);
    DensityCurve kde = von_mises_kde(s, 25.0, grid);
    REQUIRE(kde.integral() == Approx(1.0).margin(1e-6));
    // The mode lands within one grid cell of the generating centre.
    int argmax = 0;
    kde.values().maxCoeff(&argmax);
    const double mode = grid.points()[static_cast<std::size_t>(argmax)];
    REQUIRE(std::abs(mode - 4.0) < 0.15);
    REQUIRE_THROWS_AS(von_mises_kde(s, 0.0, grid), input_error);
}

TEST_CASE("von Mises sampler is deterministic and concentrates correctly") {
    CircularSample a = von_mises_sample(777, kPi, 4.0, 64);
    CircularSample b = von_mises_sample(777, kPi, 4.0, 64);
    REQUIRE(a.angles() == b.angles());
    CircularSample c = von_mises_sample(778, kPi, 4.0, 64);
    REQUIRE(a.angles() != c.angles());

    CircularSample big = von_mises_sample(2024, kPi, 4.0, 10000);
    REQUIRE(std::abs(*mean_direction(big) - kPi) < 0.05);
    // Empirical resultant length approaches I1(kappa)/I0(kappa).
    const double target = bessel_i1(4.0) / bessel_i0(4.0);
    REQUIRE(mean_resultant_length(big) == Approx(target).margin(0.02));

    CircularSample flat = von_mises_sample(11, 0.0, 0.0, 10000);
    REQUIRE(mean_resultant_length(flat) < 0.03);
}

TEST_CASE("density validity report checks support, period and mass") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 360);
    Eigen::VectorXd v(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        v(i) = von_mises_pdf(grid.points()[static_cast<std::size_t>(i)], 1.0, 2.0);
    DensityValidityReport good = validate_circular_density(DensityCurve(grid, v));
    REQUIRE(good.ok());
    REQUIRE(std::abs(good.integral_residual) < 1e-8);

    DensityValidityReport doubled = validate_circular_density(DensityCurve(grid, 2.0 * v));
    REQUIRE_FALSE(doubled.unit_integral);
    REQUIRE_FALSE(doubled.ok());

    Grid half = Grid::uniform(0.0, kPi, 180);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(180, 1.0 / kPi);
    DensityValidityReport wrong_period = validate_circular_density(DensityCurve(half, u));
    REQUIRE_FALSE(wrong_period.periodic);
}
