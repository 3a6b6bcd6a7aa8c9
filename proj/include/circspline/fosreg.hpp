#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "circspline/bayes.hpp"
#include "circspline/errors.hpp"
#include "circspline/random.hpp"
#include "circspline/splinecore.hpp"

namespace circspline {

/// Rows of B are the reduced spline coefficients of one response curve each;
/// X is the design matrix with a leading intercept column of ones. Requires
/// more observations than parameters and a full-rank design.
struct RegressionDataset {
    Eigen::MatrixXd responses; // n x g
    Eigen::MatrixXd design;    // n x (p+1)
    KnotConfig knots;

    RegressionDataset(Eigen::MatrixXd responses_in, Eigen::MatrixXd design_in, KnotConfig knots_in)
        : responses(std::move(responses_in)), design(std::move(design_in)),
          knots(std::move(knots_in)) {
        if (responses.rows() != design.rows())
            throw input_error("RegressionDataset: responses and design disagree on n");
        if (responses.cols() != knots.dim_zero())
            throw input_error("RegressionDataset: response rows must hold g reduced coefficients");
        if (design.cols() < 1 || (design.col(0).array() != 1.0).any())
            throw input_error("RegressionDataset: design must carry a leading intercept column of ones");
        if (design.rows() <= design.cols())
            throw input_error("RegressionDataset: need more observations than parameters");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < design.cols())
            throw input_error("RegressionDataset: design matrix is rank deficient");
    }

    int n() const { return static_cast<int>(design.rows()); }
    int params() const { return static_cast<int>(design.cols()); }
};

/// Coefficient-wise least squares fit Beta = (X^T X)^-1 X^T B with residual
/// matrix E = B - X Beta. Each row of Beta is itself a reduced coefficient
/// vector, so every regression coefficient is a zero-integral periodic curve.
struct RegressionModel {
    Eigen::MatrixXd beta; // (p+1) x g
    Eigen::MatrixXd residuals; // n x g
    KnotConfig knots;

    PeriodicSplineZ coefficient_spline(int param) const {
        if (param < 0 || param >= beta.rows())
            throw input_error("coefficient_spline: parameter index out of range");
        return PeriodicSplineZ(knots, beta.row(param).transpose());
    }
};

inline RegressionModel fit_fos(const RegressionDataset& data) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design);
    Eigen::MatrixXd beta = qr.solve(data.responses);
    Eigen::MatrixXd residuals = data.responses - data.design * beta;
    return RegressionModel{std::move(beta), std::move(residuals), data.knots};
}

/// clr prediction at a covariate vector (without the intercept entry): the
/// spline with reduced coefficients x^T Beta, sampled on the grid and
/// projected onto its discrete zero-sum space.
inline ClrCurve predict_clr(const RegressionModel& model, const Eigen::VectorXd& covariates,
                            const Grid& grid) {
    if (covariates.size() + 1 != model.beta.rows())
        throw input_error("predict_clr: expected " + std::to_string(model.beta.rows() - 1) +
                          " covariate values, got " + std::to_string(covariates.size()));
    Eigen::VectorXd full_x(model.beta.rows());
    full_x(0) = 1.0;
    full_x.tail(covariates.size()) = covariates;
    const PeriodicSplineZ spline(model.knots, model.beta.transpose() * full_x);
    return clr_from_samples(grid, spline.evaluate(grid.points()));
}

/// Density prediction: clr inverse of the clr prediction, unit integral.
inline DensityCurve predict_density(const RegressionModel& model, const Eigen::VectorXd& covariates,
                                    const Grid& grid) {
    return clr_inverse(predict_clr(model, covariates, grid));
}

/// Pointwise central percentile bands for each regression coefficient curve,
/// from residual-resampling bootstrap replicates. Matrices are
/// (p+1) x grid-size; `point` holds the point-estimate curves. Replicates
/// whose refit produces non-finite coefficients are discarded and counted.
struct BootstrapBands {
    std::vector<double> grid;
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
    Eigen::MatrixXd point;
    int replicates = 0;
    int discarded = 0;
    std::uint64_t seed = 0;
    double level = 0.95;
};

namespace detail {

/// Type-7 (linear interpolation) quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

} // namespace detail

inline BootstrapBands bootstrap_bands(const RegressionModel& model, const RegressionDataset& data,
                                      int replicates, double level, std::uint64_t seed,
                                      const Grid& grid) {
    if (replicates < 2) throw input_error("bootstrap_bands: need at least two replicates");
    if (!(level > 0.0 && level < 1.0))
        throw input_error("bootstrap_bands: level must lie strictly inside (0, 1)");

    const int n = data.n();
    const int params = data.params();
    const int m = grid.size();

    // Basis evaluations mapping reduced coefficients to curve values.
    Eigen::MatrixXd phi(m, data.knots.dim_zero());
    {
        const Eigen::MatrixXd u = matrix_U(data.knots);
        phi = collocation_matrix(data.knots, grid.points()) * u;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design);
    const Eigen::MatrixXd fitted = data.design * model.beta;

    // Per-replicate seeds are drawn up front so replicate r is reproducible
    // regardless of how earlier replicates consumed randomness.
    Rng master(seed);
    std::vector<std::uint64_t> subseeds(static_cast<std::size_t>(replicates));
    for (auto& s : subseeds) s = master.raw();

    std::vector<Eigen::MatrixXd> curves; // kept replicates, each (p+1) x m
    curves.reserve(static_cast<std::size_t>(replicates));
    int discarded = 0;
    for (int r = 0; r < replicates; ++r) {
        Rng rng(subseeds[static_cast<std::size_t>(r)]);
        Eigen::MatrixXd resampled(n, data.responses.cols());
        for (int i = 0; i < n; ++i) {
            const auto pick = static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(n)));
            resampled.row(i) = fitted.row(i) + model.residuals.row(pick);
        }
        const Eigen::MatrixXd beta_star = qr.solve(resampled);
        if (!beta_star.allFinite()) {
            ++discarded;
            continue;
        }
        curves.push_back(beta_star * phi.transpose());
    }
    if (static_cast<int>(curves.size()) < 2)
        throw numerical_error("bootstrap_bands: all replicates were discarded");

    BootstrapBands bands;
    bands.grid = grid.points();
    bands.lower.resize(params, m);
    bands.upper.resize(params, m);
    bands.point = model.beta * phi.transpose();
    bands.replicates = replicates;
    bands.discarded = discarded;
    bands.seed = seed;
    bands.level = level;

    const double q_lo = 0.5 * (1.0 - level);
    const double q_hi = 0.5 * (1.0 + level);
    std::vector<double> column(curves.size());
    for (int j = 0; j < params; ++j) {
        for (int c = 0; c < m; ++c) {
            for (std::size_t r = 0; r < curves.size(); ++r) column[r] = curves[r](j, c);
            std::sort(column.begin(), column.end());
            bands.lower(j, c) = detail::quantile_sorted(column, q_lo);
            bands.upper(j, c) = detail::quantile_sorted(column, q_hi);
        }
    }
    return bands;
}

/// Pointwise significance summary per coefficient: a parameter is flagged
/// significant when its band excludes zero somewhere, with the maximal grid
/// intervals of exclusion reported. A zero-width band on a nonzero curve is
/// therefore significant wherever the curve is nonzero.
struct SignificanceEntry {
    int param = 0;
    bool significant = false;
    std::vector<std::pair<double, double>> exclusions;
};

inline std::vector<SignificanceEntry> significance_summary(const BootstrapBands& bands) {
    std::vector<SignificanceEntry> summary;
    const int m = static_cast<int>(bands.grid.size());
    for (int j = 0; j < bands.lower.rows(); ++j) {
        SignificanceEntry entry;
        entry.param = j;
        int start = -1;
        for (int c = 0; c <= m; ++c) {
            const bool excludes =
                c < m && (bands.lower(j, c) > 0.0 || bands.upper(j, c) < 0.0);
            if (excludes && start < 0) start = c;
            if (!excludes && start >= 0) {
                entry.exclusions.emplace_back(bands.grid[static_cast<std::size_t>(start)],
                                              bands.grid[static_cast<std::size_t>(c - 1)]);
                start = -1;
            }
        }
        entry.significant = !entry.exclusions.empty();
        summary.push_back(std::move(entry));
    }
    return summary;
}

} // namespace circspline
