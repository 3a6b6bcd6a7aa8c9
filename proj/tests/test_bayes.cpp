#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "circspline/bayes.hpp"
#include "circspline/random.hpp"
#include "circspline/splinecore.hpp"

using namespace circspline;
using Catch::Approx;

namespace {

const double kPi = 3.14159265358979323846;

/// Inner product straight from the double-integral definition
/// (1/(2(b-a))) integral integral ln(f(x)/f(y)) ln(g(x)/g(y)) dx dy,
/// discretized with the grid's own cell weights. Independent of the clr path.
double double_sum_inner(const DensityCurve& f, const DensityCurve& g) {
    const Grid& grid = f.grid();
    const auto& w = grid.cell_widths();
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        for (int j = 0; j < grid.size(); ++j) {
            const double lf = std::log(f.values()(i) / f.values()(j));
            const double lg = std::log(g.values()(i) / g.values()(j));
            acc += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * lf * lg;
        }
    }
    return acc / (2.0 * grid.span());
}

DensityCurve random_density(Rng& rng, const Grid& grid) {
    Eigen::VectorXd v(grid.size());
    for (int i = 0; i < grid.size(); ++i) v(i) = std::exp(rng.uniform(-1.5, 1.5));
    return DensityCurve(grid, v);
}

} // namespace

TEST_CASE("uniform grid midpoints carry equal circular weights") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 36);
    REQUIRE(grid.size() == 36);
    const double h = 2.0 * kPi / 36.0;
    REQUIRE(grid.points().front() == Approx(0.5 * h));
    for (double w : grid.cell_widths()) REQUIRE(w == Approx(h).epsilon(1e-12));
    REQUIRE(grid.integrate(Eigen::VectorXd::Constant(36, 3.0)) == Approx(6.0 * kPi));
}

TEST_CASE("non-uniform grid weights wrap circularly and sum to the span") {
    Grid grid(0.0, 1.0, std::vector<double>{0.05, 0.2, 0.3, 0.7, 0.9});
    double total = 0.0;
    for (double w : grid.cell_widths()) {
        REQUIRE(w > 0.0);
        total += w;
    }
    REQUIRE(total == Approx(1.0).epsilon(1e-14));
    // First weight sees the last point across the wrap: (0.2 - (0.9 - 1))/2.
    REQUIRE(grid.cell_widths().front() == Approx(0.15));
}

TEST_CASE("grid rejects malformed points") {
    REQUIRE_THROWS_AS(Grid(0.0, 1.0, std::vector<double>{0.5}), input_error);
    REQUIRE_THROWS_AS(Grid(0.0, 1.0, std::vector<double>{0.2, 0.2, 0.4}), input_error);
    REQUIRE_THROWS_AS(Grid(0.0, 1.0, std::vector<double>{0.2, 1.0}), input_error);
    REQUIRE_THROWS_AS(Grid(0.0, 1.0, std::vector<double>{-0.1, 0.5}), input_error);
}

TEST_CASE("density curves validate positivity and normalize explicitly") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 16);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(16, 2.0);
    DensityCurve f(grid, v);
    REQUIRE(f.integral() == Approx(4.0 * kPi));
    REQUIRE(f.normalize().integral() == Approx(1.0).epsilon(1e-14));

    v(7) = 0.0;
    try {
        DensityCurve bad(grid, v);
        FAIL("expected input_error");
    } catch (const input_error& e) {
        REQUIRE(std::string(e.what()).find("index 7") != std::string::npos);
    }
}

TEST_CASE("clr curves enforce the zero-integral closure") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 360);
    Eigen::VectorXd cosx(grid.size());
    for (int i = 0; i < grid.size(); ++i) cosx(i) = std::cos(grid.points()[static_cast<std::size_t>(i)]);
    REQUIRE_NOTHROW(ClrCurve(grid, cosx));
    REQUIRE_THROWS_AS(ClrCurve(grid, Eigen::VectorXd::Constant(360, 0.3)), input_error);
}

TEST_CASE("clr transform is scale invariant and inverts to the normalized density") {
    Rng rng(111);
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 360);
    for (int trial = 0; trial < 5; ++trial) {
        DensityCurve f = random_density(rng, grid);
        ClrCurve z = clr_transform(f);
        REQUIRE(std::abs(grid.integrate(z.values())) < 1e-10 * (1.0 + z.values().cwiseAbs().maxCoeff()));

        DensityCurve scaled(grid, f.values() * 37.5);
        REQUIRE((clr_transform(scaled).values() - z.values()).cwiseAbs().maxCoeff() < 1e-12);

        DensityCurve back = clr_inverse(z);
        REQUIRE(back.integral() == Approx(1.0).epsilon(1e-12));
        REQUIRE((back.values() - f.normalize().values()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("clr maps perturbation and powering to linear operations") {
    Rng rng(222);
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 180);
    DensityCurve f = random_density(rng, grid);
    DensityCurve g = random_density(rng, grid);

    const Eigen::VectorXd sum = clr_transform(f).values() + clr_transform(g).values();
    REQUIRE((clr_transform(perturb(f, g)).values() - sum).cwiseAbs().maxCoeff() < 1e-10);

    const double alpha = 0.73;
    const Eigen::VectorXd scaled = alpha * clr_transform(f).values();
    REQUIRE((clr_transform(power(alpha, f)).values() - scaled).cwiseAbs().maxCoeff() < 1e-10);

    // Uniform density is the neutral element.
    DensityCurve e(grid, Eigen::VectorXd::Constant(grid.size(), 1.0 / grid.span()));
    REQUIRE((perturb(f, e).values() - f.normalize().values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bayes inner product matches the double-sum definition") {
    Rng rng(333);
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 90);
    for (int trial = 0; trial < 3; ++trial) {
        DensityCurve f = random_density(rng, grid);
        DensityCurve g = random_density(rng, grid);
        const double via_clr = bayes_inner(f, g);
        const double via_sum = double_sum_inner(f, g);
        REQUIRE(via_clr == Approx(via_sum).margin(1e-10 * (1.0 + std::abs(via_sum))));
    }
    DensityCurve f = random_density(rng, grid);
    REQUIRE(bayes_norm(f) == Approx(std::sqrt(bayes_inner(f, f))));
    REQUIRE(bayes_dist(f, f) == Approx(0.0).margin(1e-12));
}

TEST_CASE("distance is the norm of the clr difference") {
    Rng rng(444);
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 90);
    DensityCurve f = random_density(rng, grid);
    DensityCurve g = random_density(rng, grid);
    const Eigen::VectorXd d = clr_transform(f).values() - clr_transform(g).values();
    REQUIRE(bayes_dist(f, g) == Approx(std::sqrt(grid.integrate(d.cwiseProduct(d)))).epsilon(1e-12));
}

TEST_CASE("grid mismatch is an error for binary operations") {
    Rng rng(555);
    Grid g1 = Grid::uniform(0.0, 2.0 * kPi, 32);
    Grid g2 = Grid::uniform(0.0, 2.0 * kPi, 64);
    DensityCurve f1 = random_density(rng, g1);
    DensityCurve f2 = random_density(rng, g2);
    REQUIRE_THROWS_AS(perturb(f1, f2), input_error);
    REQUIRE_THROWS_AS(bayes_inner(f1, f2), input_error);
    REQUIRE_THROWS_AS(bayes_dist(f1, f2), input_error);
}

TEST_CASE("mean density agrees with the perturbation path") {
    Rng rng(666);
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 120);
    std::vector<DensityCurve> fs;
    for (int i = 0; i < 5; ++i) fs.push_back(random_density(rng, grid));

    DensityCurve via_clr = mean_density(fs);

    DensityCurve acc = fs[0];
    for (std::size_t i = 1; i < fs.size(); ++i) acc = perturb(acc, fs[i]);
    DensityCurve via_perturb = power(1.0 / static_cast<double>(fs.size()), acc);

    REQUIRE((via_clr.values() - via_perturb.values()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(via_clr.integral() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("functional variance uses the 1/n convention") {
    Grid grid = Grid::uniform(0.0, 2.0 * kPi, 60);
    Eigen::VectorXd z(grid.size());
    for (int i = 0; i < grid.size(); ++i) z(i) = std::sin(grid.points()[static_cast<std::size_t>(i)]);
    std::vector<ClrCurve> zs{ClrCurve(grid, z), ClrCurve(grid, -z)};

    REQUIRE(sample_mean_clr(zs).values().cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::VectorXd var = functional_variance(zs);
    const Eigen::VectorXd sd = functional_sd(zs);
    for (int i = 0; i < grid.size(); ++i) {
        REQUIRE(var(i) == Approx(z(i) * z(i)).margin(1e-14));
        REQUIRE(sd(i) == Approx(std::abs(z(i))).margin(1e-12));
    }
    REQUIRE_THROWS_AS(sample_mean_clr(std::span<const ClrCurve>{}), input_error);
}

TEST_CASE("sampled zero-integral splines project cleanly onto grids") {
    Rng rng(777);
    KnotConfig cfg = KnotConfig::uniform(0.0, 2.0 * kPi, 3, 9);
    Eigen::VectorXd reduced(9);
    for (int i = 0; i < 9; ++i) reduced(i) = rng.uniform(-1.0, 1.0);
    PeriodicSplineZ s(cfg, reduced);

    // The recentring offset is the midpoint-rule aliasing error, which decays
    // like m^-4 for cubic splines: visible on a coarse grid, negligible at
    // the default resolution.
    for (auto [m, bound] : std::vector<std::pair<int, double>>{{36, 1e-4}, {360, 1e-8}}) {
        Grid grid = Grid::uniform(0.0, 2.0 * kPi, m);
        Eigen::VectorXd raw = s.evaluate(grid.points());
        ClrCurve z = clr_from_samples(grid, raw);
        REQUIRE(std::abs(grid.integrate(z.values())) < 1e-10);
        REQUIRE((z.values() - raw).cwiseAbs().maxCoeff() < bound);
    }
}
