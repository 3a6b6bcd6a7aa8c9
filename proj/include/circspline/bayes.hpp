#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "circspline/errors.hpp"

namespace circspline {

/// Discrete evaluation grid on [a, b) with circular cell weights.
///
/// Points are strictly increasing with a <= x_0 and x_{m-1} < b; the weight of
/// point i is half the distance between its circular neighbours, so the
/// weights always sum to b - a and Riemann sums treat the grid as one period
/// of a circle. The uniform factory places midpoints x_i = a + (i + 1/2) h.
class Grid {
public:
    Grid(double a, double b, std::vector<double> points)
        : a_(a), b_(b), points_(std::move(points)) {
        if (!(a_ < b_)) throw input_error("Grid: interval must satisfy a < b");
        const std::size_t m = points_.size();
        if (m < 2) throw input_error("Grid: need at least two points");
        if (!(points_.front() >= a_) || !(points_.back() < b_))
            throw input_error("Grid: points must lie in [a, b)");
        for (std::size_t i = 1; i < m; ++i)
            if (!(points_[i] > points_[i - 1]))
                throw input_error("Grid: points must be strictly increasing");
        const double span = b_ - a_;
        weights_.resize(m);
        weights_[0] = 0.5 * (points_[1] - (points_[m - 1] - span));
        for (std::size_t i = 1; i + 1 < m; ++i)
            weights_[i] = 0.5 * (points_[i + 1] - points_[i - 1]);
        weights_[m - 1] = 0.5 * (points_[0] + span - points_[m - 2]);
    }

    static Grid uniform(double a, double b, int m) {
        if (m < 2) throw input_error("Grid: need at least two points");
        std::vector<double> pts(static_cast<std::size_t>(m));
        const double h = (b - a) / m;
        for (int i = 0; i < m; ++i) pts[static_cast<std::size_t>(i)] = a + (i + 0.5) * h;
        return Grid(a, b, std::move(pts));
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double span() const { return b_ - a_; }
    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& cell_widths() const { return weights_; }

    /// Circular Riemann sum of values over one period.
    double integrate(const Eigen::VectorXd& values) const {
        if (values.size() != size())
            throw input_error("Grid: value vector length does not match grid size");
        double acc = 0.0;
        for (int i = 0; i < size(); ++i) acc += weights_[static_cast<std::size_t>(i)] * values(i);
        return acc;
    }

    bool same_as(const Grid& other) const {
        if (size() != other.size()) return false;
        if (std::abs(a_ - other.a_) > 1e-12 || std::abs(b_ - other.b_) > 1e-12) return false;
        for (int i = 0; i < size(); ++i)
            if (std::abs(points_[static_cast<std::size_t>(i)] -
                         other.points_[static_cast<std::size_t>(i)]) > 1e-12)
                return false;
        return true;
    }

private:
    double a_, b_;
    std::vector<double> points_;
    std::vector<double> weights_;
};

namespace detail {

inline void require_same_grid(const Grid& lhs, const Grid& rhs, const char* op) {
    if (!lhs.same_as(rhs))
        throw input_error(std::string(op) + ": operands live on different grids");
}

} // namespace detail

/// Strictly positive density values on a grid. Instances are not implicitly
/// normalized; call normalize() or use the operations below, which return
/// unit-integral results.
class DensityCurve {
public:
    DensityCurve(Grid grid, Eigen::VectorXd values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw input_error("DensityCurve: value vector length does not match grid size");
        for (int i = 0; i < values_.size(); ++i)
            if (!(values_(i) > 0.0) || !std::isfinite(values_(i)))
                throw input_error("DensityCurve: nonpositive value at grid index " + std::to_string(i));
    }

    const Grid& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }

    double integral() const { return grid_.integrate(values_); }

    /// Rescaled copy with unit integral.
    DensityCurve normalize() const {
        return DensityCurve(grid_, values_ / integral());
    }

private:
    Grid grid_;
    Eigen::VectorXd values_;
};

/// Centred log-ratio curve: finite values whose circular Riemann sum is zero.
/// The closure is validated on construction to 1e-10 relative to the value
/// scale; all operations in this header produce exactly recentred values.
class ClrCurve {
public:
    ClrCurve(Grid grid, Eigen::VectorXd values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw input_error("ClrCurve: value vector length does not match grid size");
        for (int i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_(i)))
                throw input_error("ClrCurve: non-finite value at grid index " + std::to_string(i));
        const double scale = 1.0 + values_.cwiseAbs().maxCoeff();
        if (std::abs(grid_.integrate(values_)) > 1e-10 * scale)
            throw input_error("ClrCurve: values do not integrate to zero on their grid");
    }

    const Grid& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }

private:
    Grid grid_;
    Eigen::VectorXd values_;
};

/// clr(f) = ln f - (1/(b-a)) integral of ln f; the result integrates to zero
/// regardless of the scale of f (scale shifts ln f by a constant that the
/// centring removes).
inline ClrCurve clr_transform(const DensityCurve& f) {
    Eigen::VectorXd logs = f.values().array().log().matrix();
    const double mean = f.grid().integrate(logs) / f.grid().span();
    return ClrCurve(f.grid(), (logs.array() - mean).matrix());
}

/// clr^{-1}(z) = exp(z) / integral exp(z); always has unit integral.
inline DensityCurve clr_inverse(const ClrCurve& z) {
    Eigen::VectorXd e = z.values().array().exp().matrix();
    const double total = z.grid().integrate(e);
    if (!(total > 0.0) || !std::isfinite(total))
        throw numerical_error("clr_inverse: exponentiated curve has no finite positive integral");
    return DensityCurve(z.grid(), e / total);
}

/// Projection of raw samples onto the grid's discrete zero-sum space:
/// subtracts the weighted mean. Used when sampling zero-integral splines on a
/// grid, where the Riemann sum of exact samples is only quadrature-close to
/// zero.
inline ClrCurve clr_from_samples(const Grid& grid, Eigen::VectorXd values) {
    const double mean = grid.integrate(values) / grid.span();
    return ClrCurve(grid, (values.array() - mean).matrix());
}

/// Perturbation f (+) g = fg / integral fg, the group operation of the
/// density space; returned normalized.
inline DensityCurve perturb(const DensityCurve& f, const DensityCurve& g) {
    detail::require_same_grid(f.grid(), g.grid(), "perturb");
    return DensityCurve(f.grid(), f.values().cwiseProduct(g.values())).normalize();
}

/// Powering alpha (.) f = f^alpha / integral f^alpha, scalar multiplication
/// in the density space; returned normalized.
inline DensityCurve power(double alpha, const DensityCurve& f) {
    return DensityCurve(f.grid(), f.values().array().pow(alpha).matrix()).normalize();
}

/// Inner product of the density space evaluated through the clr isometry:
/// <f, g>_B = <clr f, clr g>_{L2}.
inline double bayes_inner(const DensityCurve& f, const DensityCurve& g) {
    detail::require_same_grid(f.grid(), g.grid(), "bayes_inner");
    const ClrCurve zf = clr_transform(f);
    const ClrCurve zg = clr_transform(g);
    return f.grid().integrate(zf.values().cwiseProduct(zg.values()));
}

inline double bayes_norm(const DensityCurve& f) {
    return std::sqrt(bayes_inner(f, f));
}

inline double bayes_dist(const DensityCurve& f, const DensityCurve& g) {
    detail::require_same_grid(f.grid(), g.grid(), "bayes_dist");
    const Eigen::VectorXd diff = clr_transform(f).values() - clr_transform(g).values();
    return std::sqrt(f.grid().integrate(diff.cwiseProduct(diff)));
}

/// Pointwise mean of clr curves; exact zero integral by linearity.
inline ClrCurve sample_mean_clr(std::span<const ClrCurve> zs) {
    if (zs.empty()) throw input_error("sample_mean_clr: empty sample");
    Eigen::VectorXd acc = zs[0].values();
    for (std::size_t i = 1; i < zs.size(); ++i) {
        detail::require_same_grid(zs[0].grid(), zs[i].grid(), "sample_mean_clr");
        acc += zs[i].values();
    }
    return ClrCurve(zs[0].grid(), acc / static_cast<double>(zs.size()));
}

/// Pointwise variance of clr curves with the 1/n convention.
inline Eigen::VectorXd functional_variance(std::span<const ClrCurve> zs) {
    if (zs.empty()) throw input_error("functional_variance: empty sample");
    const Eigen::VectorXd mean = sample_mean_clr(zs).values();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mean.size());
    for (const ClrCurve& z : zs) {
        const Eigen::VectorXd d = z.values() - mean;
        acc += d.cwiseProduct(d);
    }
    return acc / static_cast<double>(zs.size());
}

inline Eigen::VectorXd functional_sd(std::span<const ClrCurve> zs) {
    return functional_variance(zs).cwiseSqrt();
}

/// Mean density: clr-inverse of the mean clr curve, equivalently the
/// normalized n-th-root perturbation of the sample.
inline DensityCurve mean_density(std::span<const DensityCurve> fs) {
    if (fs.empty()) throw input_error("mean_density: empty sample");
    std::vector<ClrCurve> zs;
    zs.reserve(fs.size());
    for (const DensityCurve& f : fs) {
        detail::require_same_grid(fs[0].grid(), f.grid(), "mean_density");
        zs.push_back(clr_transform(f));
    }
    return clr_inverse(sample_mean_clr(zs));
}

} // namespace circspline
