#pragma once

#include <Eigen/Dense>

#include <cfloat>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "circspline/bayes.hpp"
#include "circspline/errors.hpp"
#include "circspline/random.hpp"

namespace circspline {

namespace detail {

inline constexpr double kTwoPi = 6.28318530717958647692528676656;

/// Reduce any finite angle to [0, 2pi).
inline double wrap_angle(double theta) {
    double r = theta - kTwoPi * std::floor(theta / kTwoPi);
    if (r >= kTwoPi) r -= kTwoPi;
    if (r < 0.0) r = 0.0;
    return r;
}

/// exp(-x) I0(x): power series below the switch point, asymptotic series
/// above. The scaled form never overflows; multiply by exp(x) only when the
/// unscaled value is requested.
inline double bessel_i0_scaled(double x) {
    if (x < 0.0) x = -x;
    if (x <= 15.0) {
        // I0(x) = sum ((x/2)^2)^m / (m!)^2
        const double q = 0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int m = 1; m < 200; ++m) {
            term *= q / (static_cast<double>(m) * m);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum * std::exp(-x);
    }
    // I0(x) ~ exp(x)/sqrt(2 pi x) * sum a_m / x^m, a_m = prod((2j-1)^2)/(m! 8^m).
    // The series is divergent; stop when terms stop shrinking.
    double term = 1.0, sum = 1.0, prev = std::numeric_limits<double>::max();
    for (int m = 1; m < 40; ++m) {
        const double f = (2.0 * m - 1.0);
        term *= f * f / (8.0 * m * x);
        if (term >= prev) break;
        sum += term;
        prev = term;
    }
    return sum / std::sqrt(kTwoPi * x);
}

inline double bessel_i1_scaled(double x) {
    const double sign = x < 0.0 ? -1.0 : 1.0;
    if (x < 0.0) x = -x;
    if (x <= 15.0) {
        // I1(x) = (x/2) sum ((x/2)^2)^m / (m! (m+1)!)
        const double q = 0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int m = 1; m < 200; ++m) {
            term *= q / (static_cast<double>(m) * (m + 1.0));
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sign * 0.5 * x * sum * std::exp(-x);
    }
    // Term recurrence ((2m-1)^2 - mu)/(8 m x) with mu = 4 for order one; the
    // leading correction is -3/(8x).
    double term = 1.0, sum = 1.0, prev = std::numeric_limits<double>::max();
    for (int m = 1; m < 40; ++m) {
        const double f = (2.0 * m - 1.0);
        term *= (f * f - 4.0) / (8.0 * m * x);
        if (std::abs(term) >= prev) break;
        sum += term;
        prev = std::abs(term);
    }
    return sign * sum / std::sqrt(kTwoPi * x);
}

} // namespace detail

/// Angles in radians reduced to [0, 2pi). Rejects empty and non-finite input.
class CircularSample {
public:
    explicit CircularSample(std::vector<double> angles) : angles_(std::move(angles)) {
        if (angles_.empty()) throw input_error("CircularSample: empty sample");
        for (double& a : angles_) {
            if (!std::isfinite(a)) throw input_error("CircularSample: non-finite angle");
            a = detail::wrap_angle(a);
        }
    }

    static CircularSample from_degrees(const std::vector<double>& degrees) {
        std::vector<double> rad(degrees.size());
        for (std::size_t i = 0; i < degrees.size(); ++i)
            rad[i] = degrees[i] * (detail::kTwoPi / 360.0);
        return CircularSample(std::move(rad));
    }

    int size() const { return static_cast<int>(angles_.size()); }
    const std::vector<double>& angles() const { return angles_; }

private:
    std::vector<double> angles_;
};

/// p-th trigonometric moment: cosine part a_p, sine part b_p, resultant
/// length R_p in [0, 1] and direction atan2(b_p, a_p) reduced to [0, 2pi).
/// The direction is undefined (nullopt) when the resultant vanishes;
/// components below 10 eps are snapped to zero so analytically antipodal
/// samples do not produce a direction from rounding residue.
struct TrigMoment {
    int order = 1;
    double cos_part = 0.0;
    double sin_part = 0.0;
    double resultant_length = 0.0;
    std::optional<double> direction;
};

inline TrigMoment trig_moment(const CircularSample& sample, int p) {
    if (p < 1) throw input_error("trig_moment: order must be positive");
    double c = 0.0, s = 0.0;
    for (double theta : sample.angles()) {
        c += std::cos(p * theta);
        s += std::sin(p * theta);
    }
    c /= sample.size();
    s /= sample.size();
    if (std::abs(c) < 10.0 * DBL_EPSILON) c = 0.0;
    if (std::abs(s) < 10.0 * DBL_EPSILON) s = 0.0;
    TrigMoment m;
    m.order = p;
    m.cos_part = c;
    m.sin_part = s;
    m.resultant_length = std::hypot(c, s);
    if (m.resultant_length > 0.0) m.direction = detail::wrap_angle(std::atan2(s, c));
    return m;
}

/// Mean direction of the first moment; undefined for a vanishing resultant.
inline std::optional<double> mean_direction(const CircularSample& sample) {
    return trig_moment(sample, 1).direction;
}

inline double mean_resultant_length(const CircularSample& sample) {
    return trig_moment(sample, 1).resultant_length;
}

/// Circular variance V = 1 - R, in [0, 1].
inline double circular_variance(const CircularSample& sample) {
    return 1.0 - mean_resultant_length(sample);
}

/// Circular standard deviation sqrt(-2 log(1 - V)) = sqrt(-2 log R);
/// +infinity when the resultant vanishes (V = 1).
inline double circular_sd(const CircularSample& sample) {
    const double r = mean_resultant_length(sample);
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(-2.0 * std::log(r));
}

/// Mean angular deviation sqrt(2 (1 - R)), bounded by sqrt(2).
inline double mean_angular_deviation(const CircularSample& sample) {
    return std::sqrt(2.0 * circular_variance(sample));
}

/// Modified Bessel function of the first kind, order zero. Overflows to +inf
/// for arguments beyond ~709 like exp itself; the density code below always
/// works with the scaled form instead.
inline double bessel_i0(double x) {
    return detail::bessel_i0_scaled(x) * std::exp(std::abs(x));
}

inline double bessel_i1(double x) {
    return detail::bessel_i1_scaled(x) * std::exp(std::abs(x));
}

/// von Mises density exp(kappa cos(theta - mu)) / (2 pi I0(kappa)), evaluated
/// in the overflow-safe form exp(kappa (cos(theta-mu) - 1)) / (2 pi e^-k I0).
inline double von_mises_pdf(double theta, double mu, double kappa) {
    if (kappa < 0.0) throw input_error("von_mises_pdf: concentration must be nonnegative");
    const double scaled = detail::bessel_i0_scaled(kappa);
    return std::exp(kappa * (std::cos(theta - mu) - 1.0)) / (detail::kTwoPi * scaled);
}

/// Kernel density estimate: equal-weight von Mises mixture centred at the
/// sample angles, evaluated on a grid. Unit integral up to quadrature error.
inline DensityCurve von_mises_kde(const CircularSample& sample, double kappa, const Grid& grid) {
    if (!(kappa > 0.0)) throw input_error("von_mises_kde: bandwidth concentration must be positive");
    Eigen::VectorXd values = Eigen::VectorXd::Zero(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        const double x = grid.points()[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (double theta : sample.angles()) acc += von_mises_pdf(x, theta, kappa);
        values(i) = acc / sample.size();
    }
    return DensityCurve(grid, values);
}

/// Best-Fisher rejection sampler for the von Mises distribution. Fully
/// deterministic for a given seed; kappa = 0 degenerates to the uniform law.
inline CircularSample von_mises_sample(std::uint64_t seed, double mu, double kappa, int n) {
    if (n < 1) throw input_error("von_mises_sample: need at least one draw");
    if (kappa < 0.0) throw input_error("von_mises_sample: concentration must be nonnegative");
    Rng rng(seed);
    std::vector<double> angles(static_cast<std::size_t>(n));
    if (kappa < 1e-12) {
        for (double& a : angles) a = rng.uniform(0.0, detail::kTwoPi);
        return CircularSample(std::move(angles));
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (double& a : angles) {
        double f = 0.0;
        for (;;) {
            const double z = std::cos(3.14159265358979323846 * rng.uniform());
            f = (1.0 + r * z) / (r + z);
            const double c = kappa * (r - f);
            const double u2 = rng.uniform();
            if (c * (2.0 - c) - u2 > 0.0) break;
            if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
        }
        const double sign = rng.uniform() > 0.5 ? 1.0 : -1.0;
        a = detail::wrap_angle(mu + sign * std::acos(std::clamp(f, -1.0, 1.0)));
    }
    return CircularSample(std::move(angles));
}

/// Validity report for a discrete circular density: nonnegativity, conceptual
/// 2pi-periodicity and unit integral. On a circular grid (one period, no
/// duplicated endpoint) periodicity holds structurally; the residual reported
/// is the integral's deviation from covering exactly one period.
struct DensityValidityReport {
    bool nonnegative = false;
    bool periodic = false;
    bool unit_integral = false;
    double min_value = 0.0;
    double integral_residual = 0.0;
    bool ok() const { return nonnegative && periodic && unit_integral; }
};

inline DensityValidityReport validate_circular_density(const DensityCurve& f, double tol = 1e-8) {
    DensityValidityReport report;
    report.min_value = f.values().minCoeff();
    report.nonnegative = report.min_value >= 0.0;
    report.periodic = std::abs(f.grid().span() - detail::kTwoPi) <= tol;
    report.integral_residual = f.integral() - 1.0;
    report.unit_integral = std::abs(report.integral_residual) <= tol;
    return report;
}

} // namespace circspline
