#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "circspline/random.hpp"
#include "circspline/splinecore.hpp"
#include "oracle.hpp"

using namespace circspline;
using Catch::Approx;

namespace {

const double kPi = 3.14159265358979323846;

KnotConfig random_config(Rng& rng, int k, int g, double a = 0.0, double b = 2.0 * kPi) {
    // Strictly increasing inner knots with a guaranteed minimum gap.
    std::vector<double> raw(g);
    double total = 0.4;
    for (int i = 0; i < g; ++i) {
        raw[i] = rng.uniform(0.2, 1.0);
        total += raw[i];
    }
    std::vector<double> inner(g);
    double run = 0.2;
    for (int i = 0; i < g; ++i) {
        run += raw[i];
        inner[i] = a + (b - a) * run / total;
    }
    return KnotConfig(a, b, k, inner);
}

} // namespace

TEST_CASE("KnotConfig builds the periodic extension") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 2.0 * kPi, 3, 9);
    REQUIRE(cfg.num_inner() == 9);
    REQUIRE(cfg.dim_full() == 13);
    REQUIRE(cfg.dim_periodic() == 10);
    REQUIRE(cfg.dim_zero() == 9);
    REQUIRE(cfg.extended_knots().size() == 9 + 2 * 3 + 2);
    REQUIRE(cfg.knot(0) == Approx(0.0));
    REQUIRE(cfg.knot(10) == Approx(2.0 * kPi));
    for (int i = 1; i <= 9; ++i)
        REQUIRE(cfg.knot(i) == Approx(kPi * i / 5.0).epsilon(1e-14));

    const double period = cfg.b() - cfg.a();
    for (int i = 1; i <= cfg.degree(); ++i) {
        REQUIRE(cfg.knot(-i) == Approx(cfg.knot(9 + 1 - i) - period).margin(1e-12));
        REQUIRE(cfg.knot(9 + 1 + i) == Approx(cfg.knot(i) + period).margin(1e-12));
    }
}

TEST_CASE("KnotConfig rejects invalid layouts") {
    REQUIRE_THROWS_AS(KnotConfig(1.0, 1.0, 3, {0.2, 0.4, 0.6, 0.8}), input_error);
    REQUIRE_THROWS_AS(KnotConfig(0.0, 1.0, 0, {0.2, 0.4, 0.6, 0.8}), input_error);
    REQUIRE_THROWS_AS(KnotConfig(0.0, 1.0, 3, {0.2, 0.4, 0.6}), input_error);
    REQUIRE_THROWS_AS(KnotConfig(0.0, 1.0, 3, {0.2, 0.2, 0.4, 0.6}), input_error);
    REQUIRE_THROWS_AS(KnotConfig(0.0, 1.0, 3, {0.2, 0.4, 0.6, 1.0}), input_error);
    REQUIRE_THROWS_AS(KnotConfig(0.0, 1.0, 3, {0.0, 0.2, 0.4, 0.6}), input_error);
    // Minimal legal layout g = k + 1.
    REQUIRE_NOTHROW(KnotConfig::uniform(0.0, 1.0, 3, 4));
}

TEST_CASE("find_interval honours half-open intervals with a closed end") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 2, 4);
    REQUIRE(cfg.find_interval(0.0) == 0);
    REQUIRE(cfg.find_interval(0.2) == 1);
    REQUIRE(cfg.find_interval(0.2 - 1e-12) == 0);
    REQUIRE(cfg.find_interval(1.0) == 4);
    REQUIRE_THROWS_AS(cfg.find_interval(-1e-9), input_error);
    REQUIRE_THROWS_AS(cfg.find_interval(1.0 + 1e-9), input_error);
}

TEST_CASE("basis_row matches the naive Cox-de Boor recursion") {
    Rng rng(101);
    for (int trial = 0; trial < 12; ++trial) {
        const int k = 1 + static_cast<int>(rng.integer(4));
        const int g = k + 1 + static_cast<int>(rng.integer(6));
        KnotConfig cfg = random_config(rng, k, g);
        for (int p = 0; p <= k; ++p) {
            for (int s = 0; s < 20; ++s) {
                double x = rng.uniform(cfg.a(), cfg.b());
                if (s == 0) x = cfg.a();
                if (s == 1) x = cfg.b();
                if (s == 2) x = cfg.knot(1 + static_cast<int>(rng.integer(g)));
                const Eigen::RowVectorXd fast = basis_row(cfg, x, p);
                const Eigen::RowVectorXd slow = oracle::naive_basis_row(cfg, x, p);
                REQUIRE(fast.size() == slow.size());
                REQUIRE((fast - slow).cwiseAbs().maxCoeff() < 1e-13);
            }
        }
    }
}

TEST_CASE("degree-k basis row forms a partition of unity") {
    Rng rng(202);
    for (int trial = 0; trial < 6; ++trial) {
        const int k = 1 + static_cast<int>(rng.integer(4));
        const int g = k + 1 + static_cast<int>(rng.integer(8));
        KnotConfig cfg = random_config(rng, k, g);
        for (int s = 0; s < 200; ++s) {
            const double x = rng.uniform(cfg.a(), cfg.b());
            REQUIRE(bspline_basis(cfg, x).sum() == Approx(1.0).margin(1e-12));
        }
        REQUIRE(bspline_basis(cfg, cfg.a()).sum() == Approx(1.0).margin(1e-12));
        REQUIRE(bspline_basis(cfg, cfg.b()).sum() == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("basis values are continuous across knots") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 2.0 * kPi, 3, 9);
    for (int i = 1; i <= 9; ++i) {
        const double t = cfg.knot(i);
        const Eigen::RowVectorXd at = bspline_basis(cfg, t);
        const Eigen::RowVectorXd below = bspline_basis(cfg, t - 1e-10);
        REQUIRE((at - below).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("collocation matrix stacks basis rows") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 3, 5);
    std::vector<double> xs{0.0, 0.31, 0.5, 0.77, 1.0};
    Eigen::MatrixXd c = collocation_matrix(cfg, xs);
    REQUIRE(c.rows() == 5);
    REQUIRE(c.cols() == cfg.dim_full());
    for (int i = 0; i < 5; ++i)
        REQUIRE((c.row(i) - bspline_basis(cfg, xs[i])).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix_K duplicates head coefficients at the tail") {
    const int g = 7, k = 3;
    Eigen::MatrixXd K = matrix_K(g, k);
    REQUIRE(K.rows() == g + k + 1);
    REQUIRE(K.cols() == g + 1);
    Rng rng(303);
    Eigen::VectorXd tilde(g + 1);
    for (int i = 0; i <= g; ++i) tilde(i) = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd full = K * tilde;
    for (int i = 0; i <= g; ++i) REQUIRE(full(i) == tilde(i));
    for (int i = 1; i <= k; ++i) REQUIRE(full(g + i) == tilde(i - 1));
}

TEST_CASE("matrix_P last row for uniform knots with g=4, k=3 is all minus one") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 3, 4);
    Eigen::MatrixXd P = matrix_P(cfg);
    REQUIRE(P.rows() == 5);
    REQUIRE(P.cols() == 4);
    REQUIRE(P.topLeftCorner(4, 4).isIdentity(0.0));
    for (int j = 0; j < 4; ++j) REQUIRE(P(4, j) == Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("U maps onto splines with zero integral and periodic derivatives") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 1 + static_cast<int>(rng.integer(4));
        const int g = k + 1 + static_cast<int>(rng.integer(7));
        KnotConfig cfg = (trial % 2 == 0) ? KnotConfig::uniform(0.0, 2.0 * kPi, k, g)
                                          : random_config(rng, k, g);
        Eigen::MatrixXd U = matrix_U(cfg);
        REQUIRE(U.rows() == cfg.dim_full());
        REQUIRE(U.cols() == cfg.dim_zero());

        Eigen::VectorXd reduced(g);
        for (int i = 0; i < g; ++i) reduced(i) = rng.uniform(-3.0, 3.0);
        Eigen::VectorXd full = U * reduced;

        REQUIRE(std::abs(spline_integral(cfg, full)) < 1e-12);

        auto eval_deriv = [&](double x, int l) {
            if (l == 0) return bspline_basis(cfg, x).dot(full);
            Eigen::VectorXd d = derivative_operator(cfg, l) * full;
            return basis_row(cfg, x, k - l).dot(d);
        };
        for (int l = 0; l <= k - 1; ++l)
            REQUIRE(eval_deriv(cfg.a(), l) == Approx(eval_deriv(cfg.b(), l)).margin(1e-9));
    }
}

TEST_CASE("matrix_U has full column rank") {
    for (int k = 1; k <= 4; ++k) {
        for (int g = k + 1; g <= k + 6; ++g) {
            KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, k, g);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix_U(cfg));
            REQUIRE(qr.rank() == g);
        }
    }
}

TEST_CASE("derivative_operator matches finite differences") {
    Rng rng(505);
    KnotConfig cfg = KnotConfig::uniform(0.0, 2.0 * kPi, 3, 9);
    Eigen::VectorXd reduced(9);
    for (int i = 0; i < 9; ++i) reduced(i) = rng.uniform(-1.0, 1.0);
    PeriodicSplineZ s(cfg, reduced);
    auto f = [&](double x) { return s(x); };
    for (int l = 1; l <= 2; ++l) {
        for (int t = 0; t < 25; ++t) {
            // Stay away from knots; the FD stencil must not straddle a kink.
            const int cell = static_cast<int>(rng.integer(10));
            const double x = cfg.knot(cell) + (cfg.knot(cell + 1) - cfg.knot(cell)) * rng.uniform(0.3, 0.7);
            const double h = l == 1 ? 1e-6 : 1e-4;
            const double fd = oracle::fd_derivative(f, x, l, h);
            REQUIRE(s.derivative(x, l) == Approx(fd).margin(1e-4 * (1.0 + std::abs(fd))));
        }
    }
    REQUIRE_THROWS_AS(derivative_operator(cfg, 0), input_error);
    REQUIRE_THROWS_AS(derivative_operator(cfg, 3), input_error);
}

TEST_CASE("derivative of a constant spline is zero") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 3, 6);
    Eigen::VectorXd tilde = Eigen::VectorXd::Constant(cfg.dim_periodic(), 2.5);
    Eigen::VectorXd full = matrix_K(6, 3) * tilde;
    Eigen::VectorXd d1 = derivative_operator(cfg, 1) * full;
    REQUIRE(d1.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram_matrix agrees with brute-force quadrature and is SPD") {
    Rng rng(606);
    for (int trial = 0; trial < 4; ++trial) {
        const int k = 2 + static_cast<int>(rng.integer(3));
        const int g = k + 2 + static_cast<int>(rng.integer(4));
        KnotConfig cfg = (trial % 2 == 0) ? KnotConfig::uniform(0.0, 2.0 * kPi, k, g)
                                          : random_config(rng, k, g);
        const int l = static_cast<int>(rng.integer(k));
        const int p = k - l;
        Eigen::MatrixXd m = gram_matrix(cfg, l);
        REQUIRE(m.rows() == g + p + 1);
        REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-14);

        for (int i = -p; i <= g; i += std::max(1, g / 3)) {
            for (int j = i; j <= std::min(g, i + p); ++j) {
                auto f = [&](double x) {
                    return oracle::naive_bspline(cfg, i, p, x) * oracle::naive_bspline(cfg, j, p, x);
                };
                const double ref = oracle::simpson_by_interval(cfg, f);
                REQUIRE(m(i + p, j + p) == Approx(ref).margin(1e-9));
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        REQUIRE(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("gram_matrix at level k is diagonal with the interval lengths") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 3, 5);
    Eigen::MatrixXd m = gram_matrix(cfg, 3);
    REQUIRE(m.rows() == 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i == j)
                REQUIRE(m(i, j) == Approx(cfg.knot(i + 1) - cfg.knot(i)).epsilon(1e-12));
            else
                REQUIRE(m(i, j) == 0.0);
        }
    }
}

TEST_CASE("difference_matrix produces the expected stencils") {
    Eigen::MatrixXd d1 = difference_matrix(6, 1);
    REQUIRE(d1.rows() == 5);
    REQUIRE(d1.cols() == 6);
    REQUIRE(d1(0, 0) == -1.0);
    REQUIRE(d1(0, 1) == 1.0);
    REQUIRE(d1(0, 2) == 0.0);

    Eigen::MatrixXd d2 = difference_matrix(6, 2);
    REQUIRE(d2.rows() == 4);
    REQUIRE(d2(1, 1) == 1.0);
    REQUIRE(d2(1, 2) == -2.0);
    REQUIRE(d2(1, 3) == 1.0);

    Eigen::MatrixXd dc = difference_matrix(6, 2, true);
    REQUIRE(dc.rows() == 6);
    // Cyclic variant: the penalty is invariant under rotating the vector.
    Rng rng(707);
    Eigen::VectorXd v(6), w(6);
    for (int i = 0; i < 6; ++i) v(i) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 6; ++i) w(i) = v((i + 2) % 6);
    REQUIRE((dc * v).squaredNorm() == Approx((dc * w).squaredNorm()).epsilon(1e-12));

    REQUIRE_THROWS_AS(difference_matrix(6, 0), input_error);
    REQUIRE_THROWS_AS(difference_matrix(6, 6), input_error);
}

TEST_CASE("spline_integral closed form matches quadrature") {
    Rng rng(808);
    for (int trial = 0; trial < 8; ++trial) {
        const int k = 1 + static_cast<int>(rng.integer(4));
        const int g = k + 1 + static_cast<int>(rng.integer(6));
        KnotConfig cfg = (trial % 2 == 0) ? KnotConfig::uniform(0.0, 2.0 * kPi, k, g)
                                          : random_config(rng, k, g);

        // Constant spline: all periodic coefficients equal.
        const double c = rng.uniform(0.5, 2.0);
        Eigen::VectorXd full_const = matrix_K(g, k) * Eigen::VectorXd::Constant(g + 1, c);
        REQUIRE(spline_integral(cfg, full_const) == Approx(c * (cfg.b() - cfg.a())).epsilon(1e-12));

        // General periodic coefficients: closed form against Simpson.
        Eigen::VectorXd tilde(g + 1);
        for (int i = 0; i <= g; ++i) tilde(i) = rng.uniform(-2.0, 2.0);
        Eigen::VectorXd full = matrix_K(g, k) * tilde;
        auto f = [&](double x) { return bspline_basis(cfg, x).dot(full); };
        const double ref = oracle::simpson_by_interval(cfg, f);
        REQUIRE(spline_integral(cfg, full) == Approx(ref).margin(1e-9));
    }
    KnotConfig cfg = KnotConfig::uniform(0.0, 1.0, 3, 5);
    REQUIRE_THROWS_AS(spline_integral(cfg, Eigen::VectorXd::Zero(4)), input_error);
}

TEST_CASE("PeriodicSplineZ wraps the reduced parameterization") {
    KnotConfig cfg = KnotConfig::uniform(0.0, 2.0 * kPi, 3, 9);
    Rng rng(909);
    Eigen::VectorXd reduced(9);
    for (int i = 0; i < 9; ++i) reduced(i) = rng.uniform(-1.5, 1.5);
    PeriodicSplineZ s(cfg, reduced);

    REQUIRE(s.coeffs_full().size() == 13);
    REQUIRE((s.coeffs_full() - matrix_U(cfg) * reduced).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(std::abs(s.integral()) < 1e-12);
    REQUIRE(s(0.0) == Approx(s(2.0 * kPi)).margin(1e-12));

    std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    Eigen::VectorXd batch = s.evaluate(xs);
    for (int i = 0; i < 4; ++i) REQUIRE(batch(i) == s(xs[static_cast<std::size_t>(i)]));

    REQUIRE_THROWS_AS(PeriodicSplineZ(cfg, Eigen::VectorXd::Zero(8)), input_error);
    REQUIRE_THROWS_AS(s(7.0), input_error);
}
