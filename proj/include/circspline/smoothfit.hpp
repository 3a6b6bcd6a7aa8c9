#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "circspline/errors.hpp"
#include "circspline/splinecore.hpp"

namespace circspline {

/// Weighted data on one period plus the knot layout of the spline to fit.
/// The reduced parameterization has g free coefficients, so identifiability
/// requires at least g + 1 observations.
struct FitProblem {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> weights;
    KnotConfig knots;

    FitProblem(std::vector<double> xs_in, std::vector<double> ys_in, KnotConfig knots_in,
               std::vector<double> weights_in = {})
        : xs(std::move(xs_in)), ys(std::move(ys_in)),
          weights(std::move(weights_in)), knots(std::move(knots_in)) {
        if (weights.empty()) weights.assign(xs.size(), 1.0);
        if (xs.size() != ys.size() || xs.size() != weights.size())
            throw input_error("FitProblem: xs, ys and weights must have equal length");
        if (static_cast<int>(xs.size()) < knots.dim_zero() + 1)
            throw input_error("FitProblem: need at least g+1 observations, got " +
                              std::to_string(xs.size()));
        for (double x : xs)
            if (!(x >= knots.a() && x <= knots.b()))
                throw input_error("FitProblem: abscissa outside the spline interval");
        for (double w : weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw input_error("FitProblem: weights must be positive and finite");
        for (double y : ys)
            if (!std::isfinite(y)) throw input_error("FitProblem: non-finite observation");
    }

    int size() const { return static_cast<int>(xs.size()); }
};

/// Roughness-vs-fidelity mix (1-alpha) integral (s^(l))^2 + alpha weighted SSE
/// with alpha strictly inside (0, 1) and 1 <= l <= k-1.
struct SmoothingConfig {
    double alpha = 0.5;
    int derivative_order = 2;
};

/// Discrete difference penalty ||y - s||^2_W + rho |D_d b|^2 on the reduced
/// coefficients, rho > 0, 1 <= d < g. The cyclic flag wraps the stencil.
struct PSplineConfig {
    double rho = 1.0;
    int difference_order = 2;
    bool cyclic = false;
};

struct FitResult {
    PeriodicSplineZ spline;
    double parameter = 0.0;
    double sse = 0.0;
    double gcv = 0.0;
    double hat_trace = 0.0;
    Eigen::VectorXd fitted;
};

struct OptimizeResult {
    double parameter = 0.0;
    FitResult fit;
};

namespace detail {

/// Shared per-problem precomputation: everything that does not depend on the
/// smoothing parameter, so parameter scans only re-solve a g x g system.
struct FitOperator {
    Eigen::MatrixXd cu;        // n x g collocation times U
    Eigen::VectorXd w;         // weights
    Eigen::VectorXd y;         // observations
    Eigen::MatrixXd data_term; // (CU)^T W (CU)
    Eigen::VectorXd rhs0;      // (CU)^T W y
    Eigen::MatrixXd penalty;   // g x g roughness or difference penalty
};

inline FitOperator make_operator(const FitProblem& p, const Eigen::MatrixXd& penalty) {
    FitOperator op;
    const Eigen::MatrixXd u = matrix_U(p.knots);
    op.cu = collocation_matrix(p.knots, p.xs) * u;
    op.w = Eigen::Map<const Eigen::VectorXd>(p.weights.data(), p.size());
    op.y = Eigen::Map<const Eigen::VectorXd>(p.ys.data(), p.size());
    op.data_term = op.cu.transpose() * op.w.asDiagonal() * op.cu;
    op.rhs0 = op.cu.transpose() * op.w.asDiagonal() * op.y;
    op.penalty = penalty;
    return op;
}

inline Eigen::MatrixXd smoothing_penalty(const FitProblem& p, int l) {
    const int k = p.knots.degree();
    if (l < 1 || l > k - 1)
        throw input_error("smoothing penalty: derivative order must lie in [1, k-1]");
    const Eigen::MatrixXd u = matrix_U(p.knots);
    const Eigen::MatrixXd s = derivative_operator(p.knots, l);
    const Eigen::MatrixXd m = gram_matrix(p.knots, l);
    const Eigen::MatrixXd su = s * u;
    return su.transpose() * m * su;
}

inline Eigen::MatrixXd pspline_penalty(const FitProblem& p, const PSplineConfig& cfg) {
    const Eigen::MatrixXd d = difference_matrix(p.knots.dim_zero(), cfg.difference_order, cfg.cyclic);
    return d.transpose() * d;
}

/// Solve G X = rhs for a symmetric system that must be positive definite.
/// Pivoted LDLT with an explicit definiteness floor: a plain Cholesky can
/// report success on an exactly singular matrix when rounding keeps its
/// pivots infinitesimally positive, so near-singular normal matrices would
/// silently return garbage instead of failing.
inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& G, const Eigen::MatrixXd& rhs,
                                 const char* context) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    const double floor = 1e-12 * G.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= floor)
        throw numerical_error(std::string(context) +
                              ": normal matrix is not positive definite "
                              "(data likely fail to interleave the knots)");
    return ldlt.solve(rhs);
}

/// Assemble the result bundle shared by both estimators. hat_scale is the
/// factor in front of CU G^-1 (CU)^T W (alpha for the smoothing estimator,
/// one for the P-spline).
inline FitResult finish_fit(const FitProblem& p, const FitOperator& op, const Eigen::MatrixXd& G,
                            const Eigen::VectorXd& rhs, double parameter, double hat_scale,
                            const char* context) {
    const Eigen::VectorXd reduced = solve_spd(G, rhs, context);
    FitResult result{PeriodicSplineZ(p.knots, reduced), parameter, 0.0, 0.0, 0.0,
                     Eigen::VectorXd()};
    result.fitted = op.cu * reduced;
    const Eigen::VectorXd residual = op.y - result.fitted;
    result.sse = residual.squaredNorm();

    const Eigen::MatrixXd ginv_cut = solve_spd(G, op.cu.transpose(), context);
    double trace = 0.0;
    for (int i = 0; i < p.size(); ++i)
        trace += hat_scale * op.w(i) * op.cu.row(i).dot(ginv_cut.col(i));
    result.hat_trace = trace;

    const double n = static_cast<double>(p.size());
    const double denom = 1.0 - trace / n;
    if (!(denom > 0.0))
        throw numerical_error(std::string(context) + ": effective degrees of freedom reach n");
    result.gcv = (result.sse / n) / (denom * denom);
    return result;
}

} // namespace detail

/// Normal system G, g of the smoothing functional
/// (1-alpha) integral (s^(l))^2 + alpha sum w_i (y_i - s(x_i))^2 in the
/// reduced coefficients: G = U^T[(1-a) S^T M S + a C^T W C]U, g = a U^T C^T W y.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd>
smoothing_system(const FitProblem& p, const SmoothingConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw input_error("smoothing_system: alpha must lie strictly inside (0, 1)");
    const detail::FitOperator op =
        detail::make_operator(p, detail::smoothing_penalty(p, cfg.derivative_order));
    return {(1.0 - cfg.alpha) * op.penalty + cfg.alpha * op.data_term, cfg.alpha * op.rhs0};
}

/// Normal system of the P-spline functional ||y - C U b|^2_W + rho |D_d b|^2:
/// G = U^T C^T W C U + rho D_d^T D_d, g = U^T C^T W y.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd>
pspline_system(const FitProblem& p, const PSplineConfig& cfg) {
    if (!(cfg.rho > 0.0))
        throw input_error("pspline_system: rho must be positive");
    const detail::FitOperator op = detail::make_operator(p, detail::pspline_penalty(p, cfg));
    return {op.data_term + cfg.rho * op.penalty, op.rhs0};
}

inline FitResult solve_smoothing(const FitProblem& p, const SmoothingConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw input_error("solve_smoothing: alpha must lie strictly inside (0, 1)");
    const detail::FitOperator op =
        detail::make_operator(p, detail::smoothing_penalty(p, cfg.derivative_order));
    const Eigen::MatrixXd G = (1.0 - cfg.alpha) * op.penalty + cfg.alpha * op.data_term;
    return detail::finish_fit(p, op, G, cfg.alpha * op.rhs0, cfg.alpha, cfg.alpha,
                              "solve_smoothing");
}

inline FitResult solve_pspline(const FitProblem& p, const PSplineConfig& cfg) {
    if (!(cfg.rho > 0.0))
        throw input_error("solve_pspline: rho must be positive");
    const detail::FitOperator op = detail::make_operator(p, detail::pspline_penalty(p, cfg));
    const Eigen::MatrixXd G = op.data_term + cfg.rho * op.penalty;
    return detail::finish_fit(p, op, G, op.rhs0, cfg.rho, 1.0, "solve_pspline");
}

/// Dense hat matrix H with fitted = H y: alpha CU G^-1 (CU)^T W for the
/// smoothing estimator, CU G^-1 (CU)^T W for the P-spline.
inline Eigen::MatrixXd hat_matrix(const FitProblem& p, const SmoothingConfig& cfg) {
    const auto [G, rhs] = smoothing_system(p, cfg);
    (void)rhs;
    const detail::FitOperator op = detail::make_operator(p, Eigen::MatrixXd::Zero(0, 0));
    const Eigen::MatrixXd ginv_cut = detail::solve_spd(G, op.cu.transpose(), "hat_matrix");
    return cfg.alpha * op.cu * ginv_cut * op.w.asDiagonal();
}

inline Eigen::MatrixXd hat_matrix(const FitProblem& p, const PSplineConfig& cfg) {
    const auto [G, rhs] = pspline_system(p, cfg);
    (void)rhs;
    const detail::FitOperator op = detail::make_operator(p, Eigen::MatrixXd::Zero(0, 0));
    const Eigen::MatrixXd ginv_cut = detail::solve_spd(G, op.cu.transpose(), "hat_matrix");
    return op.cu * ginv_cut * op.w.asDiagonal();
}

inline double gcv_score(const FitProblem& p, const SmoothingConfig& cfg) {
    return solve_smoothing(p, cfg).gcv;
}

inline double gcv_score(const FitProblem& p, const PSplineConfig& cfg) {
    return solve_pspline(p, cfg).gcv;
}

namespace detail {

/// Deterministic scan-and-refine minimizer used by both parameter searches.
/// Evaluates the objective on a fixed transformed grid, golden-sections the
/// bracket around the best grid point and returns the best point seen overall
/// (so no grid point can beat the result). Non-finite objective values are
/// skipped; if every point fails, the search reports a numerical error.
template <typename Objective>
double scan_minimize(Objective&& objective, double lo, double hi, int grid_points,
                     double tol, const char* context) {
    auto value = [&](double t) {
        try {
            const double v = objective(t);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    double best_t = lo;
    double best_v = std::numeric_limits<double>::infinity();
    std::vector<double> ts(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
        ts[static_cast<std::size_t>(i)] = t;
        const double v = value(t);
        if (v < best_v) {
            best_v = v;
            best_t = t;
        }
    }
    if (!std::isfinite(best_v))
        throw numerical_error(std::string(context) + ": objective is non-finite everywhere");

    int best_index = 0;
    for (int i = 0; i < grid_points; ++i)
        if (ts[static_cast<std::size_t>(i)] == best_t) best_index = i;
    double a = ts[static_cast<std::size_t>(std::max(0, best_index - 1))];
    double b = ts[static_cast<std::size_t>(std::min(grid_points - 1, best_index + 1))];

    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = value(c), fd = value(d);
    while (b - a > tol) {
        if (fc < best_v) { best_v = fc; best_t = c; }
        if (fd < best_v) { best_v = fd; best_t = d; }
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = value(d);
        }
    }
    if (fc < best_v) { best_v = fc; best_t = c; }
    if (fd < best_v) { best_v = fd; best_t = d; }
    return best_t;
}

} // namespace detail

/// GCV-optimal alpha for the smoothing estimator: logit-scale scan over 101
/// points of alpha in (1e-7, 1 - 1e-7) plus golden-section refinement. The
/// returned alpha has a GCV no larger than any scanned grid point.
inline OptimizeResult optimize_alpha(const FitProblem& p, int derivative_order) {
    const detail::FitOperator op =
        detail::make_operator(p, detail::smoothing_penalty(p, derivative_order));
    auto fit_at = [&](double t) {
        const double alpha = 1.0 / (1.0 + std::exp(-t));
        const Eigen::MatrixXd G = (1.0 - alpha) * op.penalty + alpha * op.data_term;
        return detail::finish_fit(p, op, G, alpha * op.rhs0, alpha, alpha, "optimize_alpha");
    };
    const double t = detail::scan_minimize([&](double tv) { return fit_at(tv).gcv; },
                                           -16.0, 16.0, 101, 1e-6, "optimize_alpha");
    FitResult fit = fit_at(t);
    return {fit.parameter, std::move(fit)};
}

/// GCV-optimal rho for the P-spline estimator: log10-scale scan over
/// [1e-8, 1e8] with the same refine rule.
inline OptimizeResult optimize_rho(const FitProblem& p, int difference_order, bool cyclic = false) {
    PSplineConfig base{1.0, difference_order, cyclic};
    const detail::FitOperator op = detail::make_operator(p, detail::pspline_penalty(p, base));
    auto fit_at = [&](double t) {
        const double rho = std::pow(10.0, t);
        const Eigen::MatrixXd G = op.data_term + rho * op.penalty;
        return detail::finish_fit(p, op, G, op.rhs0, rho, 1.0, "optimize_rho");
    };
    const double t = detail::scan_minimize([&](double tv) { return fit_at(tv).gcv; },
                                           -8.0, 8.0, 101, 1e-6, "optimize_rho");
    FitResult fit = fit_at(t);
    return {fit.parameter, std::move(fit)};
}

} // namespace circspline
