#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "circspline/errors.hpp"

namespace circspline {

/// Knot layout for periodic splines of degree k on [a, b].
///
/// Inner knots a < lambda_1 < ... < lambda_g < b are supplied; the boundary
/// knots lambda_0 = a, lambda_{g+1} = b and k periodic extension knots on each
/// side are derived:
///     lambda_{-i}     = lambda_{g+1-i} - (b - a),   i = 1..k
///     lambda_{g+1+i}  = lambda_i       + (b - a),   i = 1..k
/// so the full sequence lambda_{-k} <= ... <= lambda_{g+k+1} has g + 2k + 2
/// entries and each end of [a, b] sees the knot spacing of the opposite end.
class KnotConfig {
public:
    KnotConfig(double a, double b, int degree, std::vector<double> inner_knots)
        : a_(a), b_(b), k_(degree), inner_(std::move(inner_knots)) {
        if (!(a_ < b_))
            throw input_error("KnotConfig: interval must satisfy a < b");
        if (k_ < 1)
            throw input_error("KnotConfig: degree must be at least 1");
        const int g = static_cast<int>(inner_.size());
        if (g < k_ + 1)
            throw input_error("KnotConfig: need at least degree+1 inner knots, got " +
                              std::to_string(g));
        double prev = a_;
        for (double t : inner_) {
            if (!(t > prev))
                throw input_error("KnotConfig: inner knots must be strictly increasing inside (a, b)");
            prev = t;
        }
        if (!(inner_.back() < b_))
            throw input_error("KnotConfig: inner knots must lie strictly below b");

        const double period = b_ - a_;
        extended_.assign(g + 2 * k_ + 2, 0.0);
        extended_[k_] = a_;
        for (int i = 1; i <= g; ++i) extended_[k_ + i] = inner_[i - 1];
        extended_[k_ + g + 1] = b_;
        for (int i = 1; i <= k_; ++i) {
            extended_[k_ - i] = extended_[k_ + g + 1 - i] - period;
            extended_[k_ + g + 1 + i] = extended_[k_ + i] + period;
        }
    }

    /// Equidistant inner knots lambda_i = a + i (b-a)/(g+1), i = 1..g.
    static KnotConfig uniform(double a, double b, int degree, int g) {
        if (g < 1) throw input_error("KnotConfig: need at least one inner knot");
        std::vector<double> inner(g);
        for (int i = 1; i <= g; ++i)
            inner[i - 1] = a + (b - a) * static_cast<double>(i) / (g + 1);
        return KnotConfig(a, b, degree, std::move(inner));
    }

    double a() const { return a_; }
    double b() const { return b_; }
    int degree() const { return k_; }

    /// Number of inner knots g.
    int num_inner() const { return static_cast<int>(inner_.size()); }

    const std::vector<double>& inner_knots() const { return inner_; }

    /// Full sequence lambda_{-k}..lambda_{g+k+1}, g + 2k + 2 entries.
    const std::vector<double>& extended_knots() const { return extended_; }

    /// lambda_i for i in [-k, g+k+1].
    double knot(int i) const { return extended_[static_cast<std::size_t>(i + k_)]; }

    /// Dimension of the full spline space on the extended sequence: g + k + 1.
    int dim_full() const { return num_inner() + k_ + 1; }

    /// Dimension of the periodic subspace: g + 1.
    int dim_periodic() const { return num_inner() + 1; }

    /// Dimension of the zero-integral periodic subspace: g.
    int dim_zero() const { return num_inner(); }

    /// Index j in [0, g] with x in [lambda_j, lambda_{j+1}); the last interval
    /// is closed at b. x outside [a, b] is an error (circular callers reduce
    /// their argument mod the period first).
    int find_interval(double x) const {
        if (!(x >= a_ && x <= b_))
            throw input_error("spline evaluation outside [a, b]: x = " + std::to_string(x));
        const int g = num_inner();
        const auto first = extended_.begin() + k_;
        const auto last = first + g + 2;
        const auto it = std::upper_bound(first, last, x);
        const int j = static_cast<int>(it - first) - 1;
        return std::clamp(j, 0, g);
    }

private:
    double a_, b_;
    int k_;
    std::vector<double> inner_;
    std::vector<double> extended_;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact for polynomials of degree 2n - 1.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 64; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int m = 2; m <= n; ++m) {
                const double p2 = ((2 * m - 1) * t * p1 - (m - 1) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n == 1 ? 1.0 : n * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        nodes[i] = t;
        weights[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

} // namespace detail

/// Row of all degree-p B-splines B_{-p}^{p+1}, ..., B_g^{p+1} at x, stored at
/// indices 0..g+p (basis index i maps to storage index i + p). At most p + 1
/// entries are nonzero. Uses the triangular de Boor scheme; coincident-knot
/// 0/0 terms are taken as 0.
inline Eigen::RowVectorXd basis_row(const KnotConfig& cfg, double x, int p) {
    const int k = cfg.degree();
    const int g = cfg.num_inner();
    if (p < 0 || p > k)
        throw input_error("basis_row: degree must lie in [0, k]");
    const int j = cfg.find_interval(x);

    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g + p + 1);
    std::vector<double> values(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> right(static_cast<std::size_t>(p) + 1, 0.0);
    values[0] = 1.0;
    for (int d = 1; d <= p; ++d) {
        left[d] = x - cfg.knot(j + 1 - d);
        right[d] = cfg.knot(j + d) - x;
        double saved = 0.0;
        for (int r = 0; r < d; ++r) {
            const double den = right[r + 1] + left[d - r];
            const double tmp = den != 0.0 ? values[r] / den : 0.0;
            values[r] = saved + right[r + 1] * tmp;
            saved = left[d - r] * tmp;
        }
        values[d] = saved;
    }
    for (int r = 0; r <= p; ++r) row(j + r) = values[r];
    return row;
}

/// Degree-k basis row (the columns of the collocation matrix), length g+k+1.
inline Eigen::RowVectorXd bspline_basis(const KnotConfig& cfg, double x) {
    return basis_row(cfg, x, cfg.degree());
}

/// Collocation matrix C with rows bspline_basis(x_i), size n x (g+k+1).
inline Eigen::MatrixXd collocation_matrix(const KnotConfig& cfg, std::span<const double> xs) {
    const int n = static_cast<int>(xs.size());
    Eigen::MatrixXd c(n, cfg.dim_full());
    for (int i = 0; i < n; ++i) c.row(i) = bspline_basis(cfg, xs[i]);
    return c;
}

/// (g+k+1) x (g+1) block matrix mapping periodic coefficients
/// (b_{-k}, ..., b_{g-k}) to full coefficients by duplicating the k leading
/// entries at the tail: b_{g+1-i} = b_{-i}, i = 1..k.
inline Eigen::MatrixXd matrix_K(int g, int k) {
    if (k < 1 || g < k + 1)
        throw input_error("matrix_K: need k >= 1 and g >= k+1");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g + k + 1, g + 1);
    m.topLeftCorner(k, k).setIdentity();
    m.block(k, k, g - k + 1, g - k + 1).setIdentity();
    m.bottomLeftCorner(k, k).setIdentity();
    return m;
}

/// (g+1) x g matrix eliminating b_{g-k} via the zero-integral condition:
/// the first g rows are the identity and the last row holds
/// a_j = -(lambda_j - lambda_{j-k-1}) / (lambda_{g+1} - lambda_{g-k}), j = 1..g,
/// so that the closed-form integral of the periodic spline vanishes.
inline Eigen::MatrixXd matrix_P(const KnotConfig& cfg) {
    const int g = cfg.num_inner();
    const int k = cfg.degree();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g + 1, g);
    m.topLeftCorner(g, g).setIdentity();
    const double tail = cfg.knot(g + 1) - cfg.knot(g - k);
    for (int j = 1; j <= g; ++j)
        m(g, j - 1) = -(cfg.knot(j) - cfg.knot(j - k - 1)) / tail;
    return m;
}

/// Combined map U = K P from the g reduced coefficients onto the full
/// coefficient vector of a periodic spline with zero integral.
inline Eigen::MatrixXd matrix_U(const KnotConfig& cfg) {
    return matrix_K(cfg.num_inner(), cfg.degree()) * matrix_P(cfg);
}

/// l-th derivative operator S_l mapping degree-k coefficients to degree-(k-l)
/// coefficients, built as the product D_l L_l ... D_1 L_1 of bidiagonal
/// difference steps, size (g+k+1-l) x (g+k+1). Requires 1 <= l <= k-1.
inline Eigen::MatrixXd derivative_operator(const KnotConfig& cfg, int l) {
    const int k = cfg.degree();
    const int g = cfg.num_inner();
    if (l < 1 || l > k - 1)
        throw input_error("derivative_operator: order must lie in [1, k-1]");
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(g + k + 1, g + k + 1);
    for (int j = 1; j <= l; ++j) {
        const int rows = g + k + 1 - j;
        Eigen::MatrixXd step = Eigen::MatrixXd::Zero(rows, rows + 1);
        for (int r = 0; r < rows; ++r) {
            // Row r covers basis index i = -k + j + r; the knot span below is
            // lambda_{i+k+1-j} - lambda_i over k+1-j intervals, nonzero because
            // the extended sequence is strictly increasing.
            const double span = cfg.knot(r + 1) - cfg.knot(-k + j + r);
            const double scale = (k + 1.0 - j) / span;
            step(r, r) = -scale;
            step(r, r + 1) = scale;
        }
        s = step * s;
    }
    return s;
}

/// Gram matrix M of the degree-(k-l) basis restricted to [a, b]:
/// m_ij = integral over [a,b] of B_i^{k+1-l} B_j^{k+1-l}, indices
/// i, j = -k+l..g stored at offset +(k-l). Assembled per knot interval with a
/// (k-l+1)-point Gauss-Legendre rule, exact for the degree-2(k-l) integrand.
/// Boundary basis functions overlapping the ends contribute only their part
/// inside [a, b]. Symmetric positive definite.
inline Eigen::MatrixXd gram_matrix(const KnotConfig& cfg, int l) {
    const int k = cfg.degree();
    const int g = cfg.num_inner();
    if (l < 0 || l > k)
        throw input_error("gram_matrix: derivative level must lie in [0, k]");
    const int p = k - l;
    const int dim = g + p + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<double> nodes, weights;
    detail::gauss_legendre(p + 1, nodes, weights);
    for (int j = 0; j <= g; ++j) {
        const double x0 = cfg.knot(j);
        const double x1 = cfg.knot(j + 1);
        const double half = 0.5 * (x1 - x0);
        const double mid = 0.5 * (x0 + x1);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const double x = mid + half * nodes[q];
            const double w = half * weights[q];
            const Eigen::RowVectorXd row = basis_row(cfg, x, p);
            for (int r = 0; r <= p; ++r)
                for (int c = 0; c <= p; ++c)
                    m(j + r, j + c) += w * row(j + r) * row(j + c);
        }
    }
    return m;
}

/// Order-d forward difference matrix acting on the g reduced coefficients.
/// Acyclic (default): (g-d) x g with rows of alternating binomial weights.
/// Cyclic: g x g with the same stencil wrapping around, making the penalty
/// invariant under rotation of the coefficient vector.
inline Eigen::MatrixXd difference_matrix(int g, int d, bool cyclic = false) {
    if (d < 1 || d >= g)
        throw input_error("difference_matrix: need 1 <= d < g");
    std::vector<double> stencil{-1.0, 1.0};
    for (int step = 2; step <= d; ++step) {
        std::vector<double> next(static_cast<std::size_t>(step) + 1, 0.0);
        for (std::size_t i = 0; i < stencil.size(); ++i) {
            next[i] -= stencil[i];
            next[i + 1] += stencil[i];
        }
        stencil = std::move(next);
    }
    const int rows = cyclic ? g : g - d;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, g);
    for (int r = 0; r < rows; ++r)
        for (int s = 0; s <= d; ++s)
            m(r, (r + s) % g) += stencil[static_cast<std::size_t>(s)];
    return m;
}

/// Closed-form integral over [a, b] of a spline whose full coefficient vector
/// has the periodic structure b = K b_tilde (tail entries duplicate the head):
/// (1/(k+1)) sum over the g+1 periodic indices i = -k..g-k of
/// b_i (lambda_{i+k+1} - lambda_i). Summing all g+k+1 entries instead would
/// double-count the duplicated tail; restricted this way a constant spline
/// integrates to c (b - a) and any U b_reduced integrates to exactly zero.
inline double spline_integral(const KnotConfig& cfg, const Eigen::VectorXd& coeffs_full) {
    const int k = cfg.degree();
    const int g = cfg.num_inner();
    if (coeffs_full.size() != cfg.dim_full())
        throw input_error("spline_integral: coefficient vector must have g+k+1 entries");
    double total = 0.0;
    for (int s = 0; s <= g; ++s)
        total += coeffs_full(s) * (cfg.knot(s + 1) - cfg.knot(s - k));
    return total / (k + 1.0);
}

/// Periodic spline with zero integral on [a, b], parameterized by the g free
/// coefficients b_reduced; the full coefficient vector is U b_reduced, which
/// enforces both the periodic endpoint conditions (equality of derivatives up
/// to order k-1 at a and b) and the zero-integral constraint exactly.
class PeriodicSplineZ {
public:
    PeriodicSplineZ(KnotConfig knots, Eigen::VectorXd coeffs_reduced)
        : knots_(std::move(knots)), reduced_(std::move(coeffs_reduced)) {
        if (reduced_.size() != knots_.dim_zero())
            throw input_error("PeriodicSplineZ: expected " + std::to_string(knots_.dim_zero()) +
                              " reduced coefficients, got " + std::to_string(reduced_.size()));
        full_ = matrix_U(knots_) * reduced_;
    }

    const KnotConfig& knots() const { return knots_; }
    const Eigen::VectorXd& coeffs_reduced() const { return reduced_; }
    const Eigen::VectorXd& coeffs_full() const { return full_; }

    double operator()(double x) const {
        return bspline_basis(knots_, x).dot(full_);
    }

    Eigen::VectorXd evaluate(std::span<const double> xs) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = (*this)(xs[i]);
        return out;
    }

    /// l-th derivative at x; l = 0 evaluates the spline itself.
    double derivative(double x, int l) const {
        if (l == 0) return (*this)(x);
        const Eigen::VectorXd dcoef = derivative_operator(knots_, l) * full_;
        return basis_row(knots_, x, knots_.degree() - l).dot(dcoef);
    }

    /// Exact integral over one period; zero by construction.
    double integral() const { return spline_integral(knots_, full_); }

private:
    KnotConfig knots_;
    Eigen::VectorXd reduced_;
    Eigen::VectorXd full_;
};

} // namespace circspline
